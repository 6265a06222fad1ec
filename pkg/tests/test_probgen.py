"""Random instance generation and target drawing."""

import numpy as np
import pytest

import spilloverfree as sf
import spilloverfree.probgen
from spilloverfree.errors import (
    DegenerateSpectrum,
    DimensionMismatch,
    GenerationFailed,
    NotConjugateClosed,
    StructureInfeasible,
    ZeroEigenvalue,
)


def test_problem_spec_feasibility():
    with pytest.raises(StructureInfeasible):
        sf.ProblemSpec(n_u=4, n_phi=2, p=5, s_tilde=1)
    with pytest.raises(StructureInfeasible):
        sf.ProblemSpec(n_u=4, n_phi=2, p=3, s_tilde=2)
    with pytest.raises(DimensionMismatch):
        sf.ProblemSpec(n_u=0, n_phi=2, p=1, s_tilde=0)
    with pytest.raises(DimensionMismatch):
        sf.ProblemSpec(n_u=4, n_phi=-1, p=1, s_tilde=0)
    with pytest.raises(DimensionMismatch):
        sf.ProblemSpec(n_u=4, n_phi=2, p=2, s_tilde=1, max_perturbation=-0.1)


def test_generate_pencil_is_deterministic():
    spec = sf.ProblemSpec(n_u=9, n_phi=3, p=2, s_tilde=1, seed=13)
    a = sf.generate_pencil(spec)
    b = sf.generate_pencil(spec)
    assert np.array_equal(a.M_u, b.M_u)
    assert np.array_equal(a.K, b.K)


def test_generate_pencil_mass_is_indefinite_and_bounded_away():
    spec = sf.ProblemSpec(n_u=12, n_phi=4, p=2, s_tilde=1, seed=0)
    p = sf.generate_pencil(spec)
    eigs = np.linalg.eigvalsh(p.M_u)
    assert np.abs(eigs).min() >= 1.0 - 1e-12
    assert eigs.min() < 0 < eigs.max()


def test_generate_pencil_solvable_spectrum():
    spec = sf.ProblemSpec(n_u=12, n_phi=4, p=2, s_tilde=1, seed=0)
    p = sf.generate_pencil(spec)
    s = sf.solve_spectrum(p)
    assert len(s.finite_pairs) == 12
    assert s.pair_count() > 0 and s.real_count() >= 0


def test_generate_pencil_exhausts_retries(monkeypatch):
    def always_degenerate(_):
        raise DegenerateSpectrum("forced")

    monkeypatch.setattr(
        spilloverfree.probgen, "solve_spectrum", always_degenerate
    )
    spec = sf.ProblemSpec(n_u=4, n_phi=1, p=1, s_tilde=0, seed=0)
    with pytest.raises(GenerationFailed):
        spilloverfree.probgen.generate_pencil(spec, retries=2)


def test_perturb_targets_zero_perturbation_returns_inputs():
    old = [1.0 + 2.0j, 1.0 - 2.0j, -0.5, 3.0]
    out = sf.perturb_targets(old, s_tilde=1, max_perturbation=0.0, seed=0)
    assert out == [1.0 + 2.0j, 1.0 - 2.0j, -0.5, 3.0]


def test_perturb_targets_moves_each_value_within_bound():
    old = [1.0 + 2.0j, 1.0 - 2.0j, -0.75, 2.5]
    out = sf.perturb_targets(old, s_tilde=1, max_perturbation=0.25, seed=4)
    assert len(out) == 4
    # canonical order: pair first (positive imaginary part leading)
    assert out[0].imag > 0 and out[1] == out[0].conjugate()
    assert abs(out[0] - (1.0 + 2.0j)) <= 0.25 + 1e-12
    got_reals = sorted(v.real for v in out[2:])
    for new, ref in zip(got_reals, sorted([-0.75, 2.5])):
        assert abs(new - ref) <= 0.25 + 1e-12
        assert new != ref


def test_perturb_targets_is_deterministic():
    old = [1.0 + 2.0j, 1.0 - 2.0j, -0.75]
    a = sf.perturb_targets(old, 1, 0.3, seed=(7, 2))
    b = sf.perturb_targets(old, 1, 0.3, seed=(7, 2))
    assert a == b


def test_perturb_targets_respects_avoid_set():
    old = [2.0, 3.0]
    avoid = [2.1]
    for seed in range(5):
        out = sf.perturb_targets(old, 0, 0.3, seed=seed, avoid=avoid)
        for v in out:
            assert abs(v - 2.1) > 1e-6


def test_perturb_targets_structure_change_draws_fresh():
    old = [1.0 + 2.0j, 1.0 - 2.0j, -0.5, 3.0]
    out = sf.perturb_targets(old, s_tilde=2, max_perturbation=0.3, seed=1)
    assert len(out) == 4
    assert out[0].imag > 0 and out[1] == out[0].conjugate()
    assert out[2].imag > 0 and out[3] == out[2].conjugate()
    for v in out:
        assert abs(v) >= 1e-3


def test_perturb_targets_all_reals_to_pairs():
    out = sf.perturb_targets([1.0, 2.0], s_tilde=1, max_perturbation=0.0, seed=2)
    assert out[0].imag >= 1e-3
    assert out[1] == out[0].conjugate()


def test_perturb_targets_infeasible_pair_count():
    with pytest.raises(StructureInfeasible):
        sf.perturb_targets([1.0, 2.0, 3.0], s_tilde=2, max_perturbation=0.1, seed=0)


def test_perturb_targets_budget_exhaustion():
    # zero perturbation cannot escape an avoid set sitting on the inputs
    with pytest.raises(StructureInfeasible):
        sf.perturb_targets(
            [2.0, 3.0], s_tilde=0, max_perturbation=1e-9, seed=0, avoid=[2.0]
        )


def test_perturb_targets_rejects_zero_input():
    with pytest.raises(ZeroEigenvalue):
        sf.perturb_targets([0.0, 1.0], 0, 0.1, seed=0)


def test_perturb_targets_rejects_unpaired_complex():
    with pytest.raises(NotConjugateClosed):
        sf.perturb_targets([1.0 + 1.0j, 2.0], 1, 0.1, seed=0)
