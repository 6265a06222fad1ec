"""Real block-diagonal representations of conjugate-closed eigendata.

A set of simple nonzero eigenpairs closed under conjugation is encoded
without complex arithmetic: each conjugate pair alpha +/- beta*i
(beta > 0) becomes the 2x2 block [[alpha, beta], [-beta, alpha]] with
eigenvector columns [Re x, Im x], and each real eigenvalue stays a 1x1
block with its real eigenvector column. Pair blocks always precede the
scalar blocks.

The canonical ordering used everywhere: pairs sorted by ascending real
part then ascending imaginary part, followed by real eigenvalues in
ascending order.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateEigenvalue,
    MalformedBlocks,
    NoMatch,
    NotConjugateClosed,
    Overlap,
    ZeroEigenvalue,
)
from .pencil import JordanPairCandidate

DEFAULT_MATCH_TOL = 1e-6
_CLOSURE_TOL = 1e-10
_DUPLICATE_TOL = 1e-10
# Entries of Lambda outside the block pattern must vanish up to this
# relative slack (exact zeros in everything this package constructs).
_PATTERN_TOL = 1e-14


@dataclass(frozen=True)
class RealSpectralData:
    """Eigenvalue matrix Lambda (p x p) and eigenvector matrix X (n x p)
    in real block form, with s the number of conjugate-pair blocks.

    X may have zero rows when the data carries eigenvalues only (target
    spectra read from file); the rank requirement applies otherwise.
    """

    Lambda: np.ndarray
    X: np.ndarray
    s: int

    def __post_init__(self):
        Lam = np.asarray(self.Lambda, dtype=float)
        X = np.asarray(self.X, dtype=float)
        object.__setattr__(self, "Lambda", Lam)
        object.__setattr__(self, "X", X)
        p = Lam.shape[0]
        if Lam.ndim != 2 or Lam.shape != (p, p):
            raise DimensionMismatch(f"Lambda must be square, got {Lam.shape}")
        if X.ndim != 2 or X.shape[1] != p:
            raise DimensionMismatch(
                f"X has shape {X.shape}, expected {p} columns to match Lambda"
            )
        if not (0 <= 2 * self.s <= p):
            raise MalformedBlocks(f"s={self.s} impossible for p={p}")
        _validate_block_structure(Lam, self.s)
        if X.shape[0] and X.shape[0] >= p:
            sv = np.linalg.svd(X, compute_uv=False)
            if sv[0] == 0.0 or sv[-1] / sv[0] < 1e-12:
                raise MalformedBlocks("eigenvector matrix X is numerically rank-deficient")

    @property
    def p(self):
        return self.Lambda.shape[0]


def _validate_block_structure(Lam, s):
    p = Lam.shape[0]
    scale = max(np.abs(Lam).max(), 1e-300) if Lam.size else 1.0
    mask = np.zeros((p, p), dtype=bool)
    for j in range(s):
        i = 2 * j
        a, b = Lam[i, i], Lam[i, i + 1]
        if not (b > 0):
            raise MalformedBlocks(
                f"pair block {j} must have positive upper-right entry, got {b!r}"
            )
        if abs(Lam[i + 1, i] + b) > _PATTERN_TOL * scale or abs(Lam[i + 1, i + 1] - a) > _PATTERN_TOL * scale:
            raise MalformedBlocks(
                f"pair block {j} is not of rotation form [[a, b], [-b, a]]"
            )
        mask[i : i + 2, i : i + 2] = True
    for i in range(2 * s, p):
        if Lam[i, i] == 0.0:
            raise MalformedBlocks(f"scalar block at position {i} is zero; eigenvalues must be nonzero")
        mask[i, i] = True
    off = np.abs(np.where(mask, 0.0, Lam)).max() if p else 0.0
    if off > _PATTERN_TOL * scale:
        raise MalformedBlocks(
            f"Lambda has magnitude {off:.3e} outside the block-diagonal pattern"
        )


def block_eigenvalues(Lam, s):
    """Complex eigenvalues represented by a validated block matrix, one
    per block: s pair values (positive imaginary part), then scalars."""
    vals = []
    for j in range(s):
        i = 2 * j
        vals.append(complex(Lam[i, i], Lam[i, i + 1]))
    for i in range(2 * s, Lam.shape[0]):
        vals.append(complex(Lam[i, i]))
    return vals


def infer_pair_count(Lam):
    """Number s of 2x2 pair blocks in a real block-diagonal eigenvalue
    matrix, validating the layout as a side effect."""
    Lam = np.asarray(Lam, dtype=float)
    p = Lam.shape[0]
    s = 0
    i = 0
    while i < p - 1 and Lam[i, i + 1] != 0.0:
        s += 1
        i += 2
    _validate_block_structure(Lam, s)
    return s


def _canonical_key(lam):
    return (lam.real, abs(lam.imag))


def to_real_representation(pairs):
    """Encode conjugate-closed complex eigenpairs as RealSpectralData.

    Parameters
    ----------
    pairs : list of (complex eigenvalue, complex eigenvector)
        Conjugate members adjacent; eigenvalues simple and nonzero.
    """
    pairs = [(complex(l), np.asarray(v)) for l, v in pairs]
    if not pairs:
        raise DimensionMismatch("cannot build a real representation of an empty set")
    lams = np.array([l for l, _ in pairs])
    scale = np.abs(lams).max()
    if scale == 0.0 or np.abs(lams).min() < 1e-14 * scale:
        raise ZeroEigenvalue("eigenvalues must be nonzero to be represented")
    for i in range(len(lams)):
        for j in range(i + 1, len(lams)):
            if abs(lams[i] - lams[j]) < _DUPLICATE_TOL * scale:
                raise DuplicateEigenvalue(
                    f"eigenvalues {lams[i]:.8e} and {lams[j]:.8e} coincide; "
                    f"the representation requires simple eigenvalues"
                )

    complex_items = []
    real_items = []
    used = [False] * len(pairs)
    for i, (l, v) in enumerate(pairs):
        if used[i]:
            continue
        if l.imag == 0.0:
            real_items.append((l.real, v))
            used[i] = True
            continue
        partner = None
        for j in range(len(pairs)):
            if j != i and not used[j] and abs(pairs[j][0] - np.conj(l)) <= _CLOSURE_TOL * scale:
                partner = j
                break
        if partner is None:
            raise NotConjugateClosed(
                f"eigenvalue {l:.8e} has no conjugate partner in the set"
            )
        used[i] = used[partner] = True
        lp, vp = (l, v) if l.imag > 0 else (pairs[partner][0], pairs[partner][1])
        complex_items.append((lp, vp))

    complex_items.sort(key=lambda t: (t[0].real, t[0].imag))
    real_items.sort(key=lambda t: t[0])

    p = 2 * len(complex_items) + len(real_items)
    n = pairs[0][1].shape[0]
    Lam = np.zeros((p, p))
    X = np.zeros((n, p))
    for j, (l, v) in enumerate(complex_items):
        i = 2 * j
        Lam[i, i] = Lam[i + 1, i + 1] = l.real
        Lam[i, i + 1] = l.imag
        Lam[i + 1, i] = -l.imag
        X[:, i] = v.real
        X[:, i + 1] = v.imag
    for k, (l, v) in enumerate(real_items):
        i = 2 * len(complex_items) + k
        Lam[i, i] = l
        if np.linalg.norm(np.imag(v)) > 1e-8 * max(np.linalg.norm(v), 1e-300):
            raise MalformedBlocks(
                f"eigenvector of real eigenvalue {l:.8e} has a significant imaginary part"
            )
        X[:, i] = v.real
    return RealSpectralData(Lambda=Lam, X=X, s=len(complex_items))


def from_real_representation(d):
    """Decode RealSpectralData back into complex eigenpairs, conjugate
    members adjacent (positive imaginary part first)."""
    vals = block_eigenvalues(d.Lambda, d.s)
    out = []
    for j in range(d.s):
        l = vals[j]
        v = d.X[:, 2 * j] + 1j * d.X[:, 2 * j + 1]
        out.append((l, v))
        out.append((np.conj(l), np.conj(v)))
    for k in range(d.p - 2 * d.s):
        l = vals[d.s + k]
        out.append((l, d.X[:, 2 * d.s + k].astype(complex)))
    return out


def real_lambda_from_eigenvalues(values):
    """Build just the eigenvalue matrix (no vectors) for a conjugate-
    closed list of targets. Returns RealSpectralData with an empty X."""
    values = [complex(v) for v in values]
    scale = max(abs(v) for v in values)
    if min(abs(v) for v in values) < 1e-14 * scale:
        raise ZeroEigenvalue("target eigenvalues must be nonzero")
    complex_vals = []
    reals = []
    used = [False] * len(values)
    for i, v in enumerate(values):
        if used[i]:
            continue
        if v.imag == 0.0:
            reals.append(v.real)
            used[i] = True
            continue
        partner = None
        for j in range(len(values)):
            if j != i and not used[j] and abs(values[j] - np.conj(v)) <= _CLOSURE_TOL * scale:
                partner = j
                break
        if partner is None:
            raise NotConjugateClosed(f"target {v:.8e} has no conjugate partner")
        used[i] = used[partner] = True
        complex_vals.append(v if v.imag > 0 else np.conj(v))
    complex_vals.sort(key=lambda z: (z.real, z.imag))
    reals.sort()
    p = 2 * len(complex_vals) + len(reals)
    Lam = np.zeros((p, p))
    for j, z in enumerate(complex_vals):
        i = 2 * j
        Lam[i, i] = Lam[i + 1, i + 1] = z.real
        Lam[i, i + 1] = z.imag
        Lam[i + 1, i] = -z.imag
    for k, r in enumerate(reals):
        i = 2 * len(complex_vals) + k
        Lam[i, i] = r
    return RealSpectralData(Lambda=Lam, X=np.zeros((0, p)), s=len(complex_vals))


def select_eigendata(spectrum, targets, *, match_tol=DEFAULT_MATCH_TOL):
    """Pick the eigenpairs to be replaced.

    Each requested value must match a distinct finite eigenvalue of the
    spectrum within `match_tol` (relative); the matched set must be
    conjugate-closed, and no retained eigenvalue may sit within matching
    distance of a selected one (the replaced and retained spectra must
    be disjoint for the update to be well posed).

    Returns (RealSpectralData of the selected pairs, tuple of retained
    finite-pair indices).
    """
    lams = spectrum.eigenvalues
    n_f = len(lams)
    taken = [False] * n_f
    sel_idx = []
    for t in targets:
        t = complex(t)
        best, best_d = None, np.inf
        for i in range(n_f):
            if taken[i]:
                continue
            d = abs(lams[i] - t)
            if d < best_d:
                best, best_d = i, d
        if best is None or best_d > match_tol * max(abs(lams[best]), 1.0):
            raise NoMatch(
                f"requested eigenvalue {t:.8e} does not match any unselected "
                f"finite eigenvalue within relative tolerance {match_tol:.1e}"
            )
        taken[best] = True
        sel_idx.append(best)

    sel_set = set(sel_idx)
    for i in sel_idx:
        l = lams[i]
        if l.imag != 0.0:
            partner = np.conj(l)
            ok = any(
                j in sel_set and abs(lams[j] - partner) <= _CLOSURE_TOL * max(abs(l), 1.0)
                for j in range(n_f)
                if j != i
            )
            if not ok:
                raise NotConjugateClosed(
                    f"selection includes {l:.8e} but not its conjugate; "
                    f"conjugate pairs must be replaced together"
                )

    retained = tuple(i for i in range(n_f) if i not in sel_set)
    for i in sel_idx:
        for j in retained:
            if abs(lams[i] - lams[j]) <= match_tol * max(abs(lams[i]), 1.0):
                raise Overlap(
                    f"selected eigenvalue {lams[i]:.8e} coincides with retained "
                    f"eigenvalue {lams[j]:.8e} within matching tolerance; the two "
                    f"spectra must be disjoint"
                )

    chosen = [spectrum.finite_pairs[i] for i in sorted(sel_idx)]
    return to_real_representation(chosen), retained


def retained_eigendata(spectrum, retained_indices):
    """Real representation of the retained finite eigenpairs."""
    chosen = [spectrum.finite_pairs[i] for i in retained_indices]
    return to_real_representation(chosen)


def assemble_jordan_pair(spectrum):
    """Full-size candidate (X, J) from a solved spectrum: the finite
    real representation followed by the infinite basis, with
    J = diag(Lambda, 0)."""
    d = to_real_representation(list(spectrum.finite_pairs))
    n = d.X.shape[0]
    m = d.p + spectrum.n_phi
    X = np.zeros((n, m))
    X[:, : d.p] = d.X
    X[:, d.p :] = spectrum.infinite_basis
    J = np.zeros((m, m))
    J[: d.p, : d.p] = d.Lambda
    return JordanPairCandidate(X=X, J=J)
