"""Structured matrix pencils lambda*M + K with M = diag(M_u, 0).

The mass matrix is singular by construction: only the structural block
M_u is nonzero, the electric block is identically zero. Such a pencil is
regular whenever M_u and the electric stiffness block K_phi are
nonsingular, in which case it has exactly n_u finite eigenvalues (the
eigenvalues of the reduced symmetric pencil lambda*M_u + S, where S is
the Schur complement of K_phi in K) and n_phi eigenvalues at infinity.

Nothing in this module ever materializes the n x n mass matrix; all
products with M are evaluated block-wise.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    AsymmetricInput,
    DegenerateSpectrum,
    DimensionMismatch,
    SingularBlock,
)

DEFAULT_RCOND = 1e-12
SYMMETRY_TOL = 1e-8
DEGENERACY_TOL = 1e-8

# An eigenvalue whose imaginary part is below this (relative to the
# spectral radius) is treated as real when classifying conjugate pairs.
_REAL_AXIS_TOL = 1e-10


def _as_matrix(A, name):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be a square matrix, got shape {A.shape}")
    if A.size and not np.all(np.isfinite(A)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return A


def _check_symmetric(A, name, tol):
    if A.size == 0:
        return A
    dev = np.abs(A - A.T).max()
    scale = max(np.abs(A).max(), 1e-300)
    if dev > tol * scale:
        raise AsymmetricInput(
            f"{name} deviates from symmetry by {dev:.3e} (relative {dev / scale:.3e}, "
            f"tolerance {tol:.1e})"
        )
    return 0.5 * (A + A.T)


def rcond_estimate(A):
    """Reciprocal 2-norm condition number, 0.0 for a structurally empty
    or exactly singular matrix. Dense SVD; fine at the sizes used here."""
    if A.size == 0:
        return 1.0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0:
        return 0.0
    return float(s[-1] / s[0])


class StructuredPencil:
    """Validated pencil data (M_u, K, n_u, n_phi).

    Matrices are symmetrized on construction and stored read-only.
    The electric dimension n_phi may be zero (pure structural pencil),
    in which case K_phi is an empty block and trivially nonsingular.
    """

    def __init__(self, M_u, K, n_u, n_phi, *, rcond=DEFAULT_RCOND, symmetry_tol=SYMMETRY_TOL):
        n_u = int(n_u)
        n_phi = int(n_phi)
        if n_u <= 0:
            raise DimensionMismatch(f"n_u must be positive, got {n_u}")
        if n_phi < 0:
            raise DimensionMismatch(f"n_phi must be nonnegative, got {n_phi}")
        M_u = _as_matrix(M_u, "M_u")
        K = _as_matrix(K, "K")
        if M_u.shape[0] != n_u:
            raise DimensionMismatch(f"M_u has order {M_u.shape[0]}, expected n_u={n_u}")
        if K.shape[0] != n_u + n_phi:
            raise DimensionMismatch(
                f"K has order {K.shape[0]}, expected n_u+n_phi={n_u + n_phi}"
            )
        M_u = _check_symmetric(M_u, "M_u", symmetry_tol)
        K = _check_symmetric(K, "K", symmetry_tol)

        r = rcond_estimate(M_u)
        if r < rcond:
            raise SingularBlock(
                f"structural mass block M_u is numerically singular "
                f"(rcond {r:.3e} < {rcond:.1e}); pencil regularity cannot be certified"
            )
        r = rcond_estimate(K[n_u:, n_u:])
        if r < rcond:
            raise SingularBlock(
                f"electric stiffness block K_phi is numerically singular "
                f"(rcond {r:.3e} < {rcond:.1e}); pencil regularity cannot be certified"
            )

        M_u.setflags(write=False)
        K.setflags(write=False)
        self.M_u = M_u
        self.K = K
        self.n_u = n_u
        self.n_phi = n_phi
        self._schur = None
        self._k_lu = None
        self._k_rcond = None

    @property
    def n(self):
        return self.n_u + self.n_phi

    @property
    def K_u(self):
        return self.K[: self.n_u, : self.n_u]

    @property
    def K_uphi(self):
        return self.K[: self.n_u, self.n_u :]

    @property
    def K_phi(self):
        return self.K[self.n_u :, self.n_u :]

    def mass_action(self, X):
        """Product diag(M_u, 0) @ X without forming the full mass matrix."""
        X = np.asarray(X)
        if X.shape[0] != self.n:
            raise DimensionMismatch(
                f"operand has {X.shape[0]} rows, pencil order is {self.n}"
            )
        out = np.zeros(X.shape, dtype=X.dtype)
        out[: self.n_u] = self.M_u @ X[: self.n_u]
        return out

    def k_solve(self, B):
        """Solve K @ X = B reusing a cached LU factorization of K."""
        if self._k_lu is None:
            self._k_lu = sla.lu_factor(self.K)
        return sla.lu_solve(self._k_lu, B)

    def k_rcond(self):
        """Cached reciprocal condition estimate of the full K."""
        if self._k_rcond is None:
            self._k_rcond = rcond_estimate(self.K)
        return self._k_rcond

    def __repr__(self):
        return f"StructuredPencil(n_u={self.n_u}, n_phi={self.n_phi})"


def validate_pencil(M_u, K, n_u, n_phi, *, rcond=DEFAULT_RCOND, symmetry_tol=SYMMETRY_TOL):
    """Construct a StructuredPencil, certifying regularity.

    Nonsingular M_u and K_phi imply det(lambda*M + K) is not identically
    zero, because the determinant factors through the Schur complement
    of K_phi. Symmetry deviations up to `symmetry_tol` (relative) are
    silently symmetrized; larger ones raise AsymmetricInput.
    """
    return StructuredPencil(
        M_u, K, n_u, n_phi, rcond=rcond, symmetry_tol=symmetry_tol
    )


def schur_reduce(p):
    """Reduce the pencil to its structural block.

    Returns (S, R) with S = K_u - K_uphi @ K_phi^{-1} @ K_uphi^T the
    symmetric Schur complement and R = -K_phi^{-1} @ K_uphi^T the
    recovery map: (lambda, u) solves the reduced pencil
    (lambda*M_u + S) u = 0 exactly when (lambda, [u; R u]) solves the
    full one. Results are cached on the pencil.
    """
    if p._schur is not None:
        return p._schur
    if p.n_phi == 0:
        S = p.K_u.copy()
        R = np.zeros((0, p.n_u))
    else:
        try:
            lu = sla.lu_factor(p.K_phi)
        except sla.LinAlgError as exc:  # pragma: no cover - caught at validation
            raise SingularBlock(f"K_phi factorization failed: {exc}") from exc
        R = -sla.lu_solve(lu, p.K_uphi.T)
        S = p.K_u + p.K_uphi @ R
        S = 0.5 * (S + S.T)
    S.setflags(write=False)
    R.setflags(write=False)
    p._schur = (S, R)
    return p._schur


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    residual: float
    threshold: float
    passed: bool


class CheckReport:
    """Outcome of a multi-condition verification."""

    def __init__(self, checks):
        self.checks = tuple(checks)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed_names(self):
        return [c.name for c in self.checks if not c.passed]

    def __repr__(self):
        parts = ", ".join(
            f"{c.name}={'ok' if c.passed else 'FAIL'}({c.residual:.2e})"
            for c in self.checks
        )
        return f"CheckReport({parts})"


@dataclass(frozen=True)
class JordanPairCandidate:
    """A pair (X, J) proposed to satisfy the pencil relations.

    J must be block diagonal diag(J1, 0) with J1 nonsingular; for finite
    eigendata J1 carries the eigenvalues in real block form. The zero
    block (if any) corresponds to eigenvalues at infinity.
    """

    X: np.ndarray
    J: np.ndarray


@dataclass(frozen=True)
class SpectrumResult:
    """Complete eigendata of a structured pencil.

    finite_pairs holds (eigenvalue, eigenvector) with conjugate pairs
    adjacent, the positive-imaginary-part member first and its partner
    stored as the exact conjugate. Pairs come first (sorted by real then
    imaginary part), real eigenvalues after (ascending).
    condition_summary[i] is the gap from finite eigenvalue i to its
    nearest distinct neighbor.
    """

    finite_pairs: tuple
    infinite_basis: np.ndarray
    condition_summary: np.ndarray
    n_u: int
    n_phi: int

    @property
    def eigenvalues(self):
        return np.array([lam for lam, _ in self.finite_pairs])

    def real_count(self):
        return sum(1 for lam, _ in self.finite_pairs if lam.imag == 0.0)

    def pair_count(self):
        return (len(self.finite_pairs) - self.real_count()) // 2


def _normalize_vector(v):
    """Unit 2-norm, first significant component rotated real-positive."""
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        return v
    v = v / nrm
    mags = np.abs(v)
    j = int(np.argmax(mags > 1e-12 * mags.max()))
    pivot = v[j]
    if pivot != 0.0:
        v = v * (np.conj(pivot) / abs(pivot))
    return v


def solve_spectrum(p, *, degeneracy_tol=DEGENERACY_TOL):
    """All finite eigenpairs plus the infinite basis.

    The reduced pencil from schur_reduce is handed to the dense QZ
    solver; eigenvectors are lifted back to full length with the
    recovery map and normalized deterministically. The infinite
    eigendata needs no solve: the kernel of M is spanned by [0; I].

    Raises DegenerateSpectrum when two finite eigenvalues (or one and
    zero) are closer than degeneracy_tol times the spectral radius:
    downstream embedding assumes simple nonzero finite eigenvalues.
    """
    S, R = schur_reduce(p)
    w, V = sla.eig(S, p.M_u)
    if not np.all(np.isfinite(w)):
        raise SingularBlock(
            "reduced eigenproblem returned non-finite eigenvalues; "
            "M_u is effectively singular"
        )
    lam = -w

    scale = float(np.abs(lam).max()) if lam.size else 0.0
    gaps = np.empty(p.n_u)
    for i in range(p.n_u):
        others = np.abs(lam - lam[i])
        others[i] = np.inf
        gaps[i] = others.min()
    worst = gaps.min() if p.n_u > 1 else np.inf
    if worst < degeneracy_tol * scale:
        raise DegenerateSpectrum(
            f"two finite eigenvalues are only {worst:.3e} apart "
            f"(tolerance {degeneracy_tol:.1e} x spectral radius {scale:.3e}); "
            f"simple-eigenvalue assumption violated"
        )
    small = np.abs(lam).min()
    if small < degeneracy_tol * scale:
        raise DegenerateSpectrum(
            f"a finite eigenvalue has modulus {small:.3e}, too close to zero "
            f"(tolerance {degeneracy_tol:.1e} x spectral radius {scale:.3e})"
        )

    # Classify and pair. Real QZ on symmetric real data returns exact
    # conjugate partners; the greedy matching below is belt and braces.
    real_idx = [i for i in range(p.n_u) if abs(lam[i].imag) <= _REAL_AXIS_TOL * max(scale, 1.0)]
    pos_idx = [i for i in range(p.n_u) if i not in real_idx and lam[i].imag > 0]
    neg_idx = [i for i in range(p.n_u) if i not in real_idx and lam[i].imag < 0]
    if len(pos_idx) != len(neg_idx):
        raise DegenerateSpectrum(
            "complex eigenvalues do not split into conjugate pairs; "
            "the spectrum is too close to the real axis to classify"
        )

    def lift(u):
        if p.n_phi == 0:
            return u.copy()
        return np.concatenate([u, R @ u])

    pairs = []
    remaining = list(neg_idx)
    for i in pos_idx:
        dists = [abs(lam[i] - np.conj(lam[j])) for j in remaining]
        k = int(np.argmin(dists))
        remaining.pop(k)
        x = _normalize_vector(lift(V[:, i]))
        pairs.append((lam[i], x))
    pairs.sort(key=lambda t: (t[0].real, t[0].imag))

    reals = []
    for i in real_idx:
        x = _normalize_vector(lift(V[:, i]))
        if np.linalg.norm(x.imag) > 1e-8:
            raise DegenerateSpectrum(
                f"eigenvector of the nearly real eigenvalue {lam[i]:.6e} "
                f"could not be rotated real"
            )
        reals.append((lam[i].real, x.real))
    reals.sort(key=lambda t: t[0])

    finite = []
    for lv, x in pairs:
        finite.append((lv, x))
        finite.append((np.conj(lv), np.conj(x)))
    for lv, x in reals:
        finite.append((complex(lv), x.astype(complex)))

    ordered = np.array([l for l, _ in finite])
    margins = np.empty(len(finite))
    for i in range(len(finite)):
        d = np.abs(ordered - ordered[i])
        d[i] = np.inf
        margins[i] = d.min()

    basis = np.zeros((p.n, p.n_phi))
    if p.n_phi:
        basis[p.n_u :, :] = np.eye(p.n_phi)

    return SpectrumResult(
        finite_pairs=tuple(finite),
        infinite_basis=basis,
        condition_summary=margins,
        n_u=p.n_u,
        n_phi=p.n_phi,
    )


def _zero_block_order(J):
    """Trailing zero-block size of a block-diagonal J = diag(J1, 0)."""
    m = J.shape[0]
    q = m
    while q > 0 and not J[q - 1, :].any() and not J[:, q - 1].any():
        q -= 1
    return q


def check_jordan_pair(p, c, tol):
    """Evaluate the pencil relations a candidate (X, J) must satisfy.

    Checked, as applicable to the candidate's shape:

    - rank(X) = m (column count) at the given tolerance;
    - with no zero block in J, the finite relation M X J + K X = 0;
    - with a zero block (infinite directions present), the inverted
      relation M X + K X diag(J1^{-1}, 0) = 0, which reduces to the
      kernel condition M X = 0 when J = 0;
    - for a full-size candidate (m = n), the block-triangular shape of
      X: its upper-right n_u x n_phi block must vanish.

    All residuals are measured relative to a norm-based scale; the
    report carries one entry per condition.
    """
    X = np.asarray(c.X, dtype=float)
    J = np.asarray(c.J, dtype=float)
    n = p.n
    if X.ndim != 2 or X.shape[0] != n:
        raise DimensionMismatch(
            f"candidate X has shape {X.shape}, expected {n} rows"
        )
    m = X.shape[1]
    if J.shape != (m, m):
        raise DimensionMismatch(
            f"candidate J has shape {J.shape}, expected ({m}, {m})"
        )

    checks = []
    sv = np.linalg.svd(X, compute_uv=False)
    rank_resid = float(sv[-1] / sv[0]) if sv.size and sv[0] > 0 else 0.0
    rank_ok = rank_resid > tol
    checks.append(ConditionCheck("rank", rank_resid, tol, rank_ok))

    norm_M = np.linalg.norm(p.M_u, 2)
    norm_K = np.linalg.norm(p.K, 2)
    norm_X = np.linalg.norm(X, 2) if X.size else 0.0

    q = _zero_block_order(J)
    MX = p.mass_action(X)
    if q == m:
        resid = np.linalg.norm(MX @ J + p.K @ X, 2)
        scale = (norm_M * np.linalg.norm(J, 2) + norm_K) * norm_X
        checks.append(
            ConditionCheck(
                "finite_relation", float(resid), tol * scale, resid <= tol * scale
            )
        )
    else:
        J1 = J[:q, :q]
        if q and rcond_estimate(J1) < 1e-14:
            raise DimensionMismatch(
                "the nonzero block J1 of the candidate J is singular; "
                "J must have the form diag(J1, 0) with J1 invertible"
            )
        Jp = np.zeros((m, m))
        if q:
            Jp[:q, :q] = np.linalg.inv(J1)
        resid = np.linalg.norm(MX + p.K @ X @ Jp, 2)
        scale = (norm_M + norm_K * (np.linalg.norm(Jp, 2) if q else 0.0)) * norm_X
        if scale == 0.0:
            scale = 1.0
        name = "infinite_relation" if q == 0 else "pencil_relation"
        checks.append(
            ConditionCheck(name, float(resid), tol * scale, resid <= tol * scale)
        )

    if m == n and p.n_phi:
        block = X[: p.n_u, q:]
        resid = np.linalg.norm(block, 2) if block.size else 0.0
        scale = norm_X if norm_X else 1.0
        checks.append(
            ConditionCheck(
                "block_form", float(resid), tol * scale, resid <= tol * scale
            )
        )

    return CheckReport(checks)
