"""Real block representation, canonical ordering, eigendata selection."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import spilloverfree as sf
from spilloverfree.errors import (
    DimensionMismatch,
    DuplicateEigenvalue,
    MalformedBlocks,
    NoMatch,
    NotConjugateClosed,
    Overlap,
    ZeroEigenvalue,
)

from conftest import multiset_match, spectrum_values


def rotation_block(a, b):
    return np.array([[a, b], [-b, a]])


# Eigenvalue sets are drawn on a coarse grid so distinctness and
# nonzero-ness hold by construction, no assume() churn needed.
pair_grid = st.lists(
    st.tuples(st.integers(-20, 20), st.integers(1, 20)),
    min_size=0,
    max_size=3,
    unique=True,
)
real_grid = st.lists(
    st.integers(-20, 20).filter(lambda k: k != 0),
    min_size=0,
    max_size=3,
    unique=True,
)


def build_pairs(pair_ints, real_ints, seed, n):
    """Conjugate-closed eigenpair list in canonical order."""
    rng = np.random.default_rng(seed)
    items = []
    for a, b in sorted(pair_ints):
        lam = complex(a / 10.0, b / 10.0)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        items.append((lam, v))
        items.append((lam.conjugate(), v.conjugate()))
    for k in sorted(real_ints):
        v = rng.standard_normal(n).astype(complex)
        items.append((complex(k / 10.0), v))
    return items


@given(pair_grid, real_grid, st.integers(0, 2**16))
def test_real_representation_round_trip(pair_ints, real_ints, seed):
    if not pair_ints and not real_ints:
        return
    p = 2 * len(pair_ints) + len(real_ints)
    pairs = build_pairs(pair_ints, real_ints, seed, n=p + 2)
    d = sf.to_real_representation(pairs)
    assert d.s == len(pair_ints)
    assert d.p == p
    assert sf.infer_pair_count(d.Lambda) == d.s
    back = sf.from_real_representation(d)
    assert len(back) == len(pairs)
    for (l0, v0), (l1, v1) in zip(pairs, back):
        assert l1 == l0
        np.testing.assert_array_equal(v1, v0)


@given(pair_grid, real_grid)
def test_block_eigenvalues_match_inputs(pair_ints, real_ints):
    if not pair_ints and not real_ints:
        return
    values = [complex(a / 10.0, b / 10.0) for a, b in pair_ints]
    values += [v.conjugate() for v in values]
    values += [complex(k / 10.0) for k in real_ints]
    d = sf.real_lambda_from_eigenvalues(values)
    got = sf.block_eigenvalues(d.Lambda, d.s)
    assert len(got) == len(pair_ints) + len(real_ints)
    multiset_match(
        got, [complex(a / 10.0, b / 10.0) for a, b in pair_ints] + [complex(k / 10.0) for k in real_ints], 1e-14
    )


def test_to_real_canonical_order():
    rng = np.random.default_rng(5)
    def vec():
        return rng.standard_normal(6) + 1j * rng.standard_normal(6)
    va, vb, vc, vd = vec(), vec(), rng.standard_normal(6).astype(complex), rng.standard_normal(6).astype(complex)
    pairs = [
        (3.0 + 0j, vc),
        (1.0 + 2j, va),
        (1.0 - 2j, va.conjugate()),
        (-2.0 + 0j, vd),
        (1.0 + 1j, vb),
        (1.0 - 1j, vb.conjugate()),
    ]
    d = sf.to_real_representation(pairs)
    assert d.s == 2
    # pair blocks sorted by (real, imag): (1,1) before (1,2); reals ascending
    np.testing.assert_allclose(d.Lambda[0:2, 0:2], rotation_block(1.0, 1.0))
    np.testing.assert_allclose(d.Lambda[2:4, 2:4], rotation_block(1.0, 2.0))
    assert d.Lambda[4, 4] == -2.0
    assert d.Lambda[5, 5] == 3.0


def test_to_real_rejects_empty():
    with pytest.raises(DimensionMismatch):
        sf.to_real_representation([])


def test_to_real_rejects_zero_eigenvalue():
    v = np.ones(3).astype(complex)
    with pytest.raises(ZeroEigenvalue):
        sf.to_real_representation([(0.0 + 0j, v), (1.0 + 0j, v)])


def test_to_real_rejects_duplicates():
    v = np.ones(3).astype(complex)
    with pytest.raises(DuplicateEigenvalue):
        sf.to_real_representation([(2.0 + 0j, v), (2.0 + 0j, v)])


def test_to_real_rejects_unpaired_complex():
    v = np.ones(3) + 1j
    with pytest.raises(NotConjugateClosed):
        sf.to_real_representation([(1.0 + 1j, v), (2.0 + 0j, np.ones(3))])


def test_to_real_rejects_complex_vector_on_real_eigenvalue():
    v = np.ones(3) + 0.5j * np.ones(3)
    with pytest.raises(MalformedBlocks):
        sf.to_real_representation([(2.0 + 0j, v)])


def test_block_structure_rejects_nonpositive_beta():
    Lam = rotation_block(1.0, -0.5)
    with pytest.raises(MalformedBlocks):
        sf.RealSpectralData(Lambda=Lam, X=np.zeros((0, 2)), s=1)


def test_block_structure_rejects_non_rotation_block():
    Lam = np.array([[1.0, 0.5], [0.5, 1.0]])  # +0.5 below, not -0.5
    with pytest.raises(MalformedBlocks):
        sf.RealSpectralData(Lambda=Lam, X=np.zeros((0, 2)), s=1)


def test_block_structure_rejects_off_pattern_entries():
    Lam = np.diag([1.0, 2.0, 3.0])
    Lam[0, 2] = 0.7
    with pytest.raises(MalformedBlocks):
        sf.RealSpectralData(Lambda=Lam, X=np.zeros((0, 3)), s=0)


def test_block_structure_rejects_zero_scalar():
    with pytest.raises(MalformedBlocks):
        sf.RealSpectralData(Lambda=np.diag([1.0, 0.0]), X=np.zeros((0, 2)), s=0)


def test_block_structure_rejects_impossible_s():
    with pytest.raises(MalformedBlocks):
        sf.RealSpectralData(Lambda=np.eye(3), X=np.zeros((0, 3)), s=2)


def test_real_spectral_data_rejects_column_mismatch():
    with pytest.raises(DimensionMismatch):
        sf.RealSpectralData(Lambda=np.diag([1.0, 2.0]), X=np.zeros((5, 3)), s=0)


def test_real_spectral_data_rejects_rank_deficient_vectors():
    X = np.ones((4, 2))
    with pytest.raises(MalformedBlocks):
        sf.RealSpectralData(Lambda=np.diag([1.0, 2.0]), X=X, s=0)


def test_infer_pair_count_plain_diagonal():
    assert sf.infer_pair_count(np.diag([1.5, -2.0, 3.0])) == 0


def test_infer_pair_count_mixed():
    Lam = np.zeros((3, 3))
    Lam[:2, :2] = rotation_block(0.5, 1.0)
    Lam[2, 2] = -1.0
    assert sf.infer_pair_count(Lam) == 1


def test_real_lambda_matches_to_real_layout():
    values = [1.0 + 2j, 1.0 - 2j, -0.5, 0.25]
    d = sf.real_lambda_from_eigenvalues(values)
    assert d.X.shape == (0, 4)
    rng = np.random.default_rng(9)
    w = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    pairs = [
        (1.0 + 2j, w),
        (1.0 - 2j, w.conjugate()),
        (-0.5 + 0j, rng.standard_normal(6).astype(complex)),
        (0.25 + 0j, rng.standard_normal(6).astype(complex)),
    ]
    full = sf.to_real_representation(pairs)
    np.testing.assert_array_equal(d.Lambda, full.Lambda)


def test_real_lambda_rejects_unpaired():
    with pytest.raises(NotConjugateClosed):
        sf.real_lambda_from_eigenvalues([1.0 + 2j, 0.5])


def test_real_lambda_rejects_zero():
    with pytest.raises(ZeroEigenvalue):
        sf.real_lambda_from_eigenvalues([1.0, 0.0])


def test_select_eigendata_basic(small_pencil):
    spectrum = sf.solve_spectrum(small_pencil)
    vals = spectrum_values(spectrum)
    lam_pair = next(v for v in vals if v.imag > 0)
    lam_real = next(v for v in vals if v.imag == 0.0)
    targets = [lam_pair, lam_pair.conjugate(), lam_real]
    d, retained = sf.select_eigendata(spectrum, targets)
    assert d.s == 1 and d.p == 3
    assert len(retained) == len(vals) - 3
    multiset_match(sf.block_eigenvalues(d.Lambda, d.s), [lam_pair, lam_real], 1e-12)
    kept = sf.retained_eigendata(spectrum, retained)
    got = sf.block_eigenvalues(kept.Lambda, kept.s)
    want = [v for v in vals if v.imag >= 0 and v not in (lam_pair, lam_real)]
    multiset_match(got, want, 1e-12)


def test_select_eigendata_matches_within_tolerance(small_pencil):
    spectrum = sf.solve_spectrum(small_pencil)
    lam_real = next(v for v in spectrum_values(spectrum) if v.imag == 0.0)
    d, _ = sf.select_eigendata(spectrum, [lam_real * (1.0 + 1e-8)])
    assert d.p == 1
    assert abs(d.Lambda[0, 0] - lam_real.real) < 1e-12 * abs(lam_real)


def test_select_eigendata_no_match(small_pencil):
    spectrum = sf.solve_spectrum(small_pencil)
    far = 10.0 * max(abs(v) for v in spectrum_values(spectrum))
    with pytest.raises(NoMatch):
        sf.select_eigendata(spectrum, [far])


def test_select_eigendata_tolerance_is_relative(small_pencil):
    spectrum = sf.solve_spectrum(small_pencil)
    lam_real = next(v for v in spectrum_values(spectrum) if v.imag == 0.0)
    offset = 1e-4 * max(abs(lam_real), 1.0)
    with pytest.raises(NoMatch):
        sf.select_eigendata(spectrum, [lam_real + offset], match_tol=1e-6)


def test_select_eigendata_requires_conjugate_closure(small_pencil):
    spectrum = sf.solve_spectrum(small_pencil)
    lam_pair = next(v for v in spectrum_values(spectrum) if v.imag > 0)
    with pytest.raises(NotConjugateClosed):
        sf.select_eigendata(spectrum, [lam_pair])


def test_select_eigendata_overlap_on_close_spectrum():
    # two real eigenvalues 1e-7 apart: far enough to count as simple,
    # close enough that selecting one collides with retaining the other
    K = np.diag([-1.0, -(1.0 + 1e-7), 1.0])
    p = sf.validate_pencil(np.eye(2), K, 2, 1)
    spectrum = sf.solve_spectrum(p)
    with pytest.raises(Overlap):
        sf.select_eigendata(spectrum, [1.0], match_tol=1e-6)


def test_selected_vectors_are_eigendata(small_pencil):
    p = small_pencil
    spectrum = sf.solve_spectrum(p)
    vals = spectrum_values(spectrum)
    lam_pair = next(v for v in vals if v.imag > 0)
    d, _ = sf.select_eigendata(spectrum, [lam_pair, lam_pair.conjugate()])
    M = np.zeros((p.n, p.n))
    M[: p.n_u, : p.n_u] = p.M_u
    R = M @ d.X @ d.Lambda + p.K @ d.X
    assert np.linalg.norm(R, 2) < 1e-10 * np.linalg.norm(p.K, 2)
