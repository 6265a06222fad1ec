"""Parametric eigenvalue updates that leave the rest of the spectrum alone.

Given p true eigenpairs (Lambda_1, X_1) of a structured pencil and a
replacement eigenvalue matrix Lambda_1~, the update

    M_u~ = (M_u^-1 - X_1u G1^-1 X_1u^T + X_1u Th Gt^-1 Th^T X_1u^T)^-1
    K~   = (K^-1 + X_1 L1^-1 G1^-1 X_1^T - X_1 Th Lt^-1 Gt^-1 Th^T X_1^T)^-1

(G1 = X_1u^T M_u X_1u, Th and Gt free parameters, Lt the target) moves
exactly the selected eigenvalues to the targets and keeps every other
finite eigenvalue, every eigenvalue at infinity, and symmetry. The new
eigenvectors are X_1 Th: the updated pairs span the same subspace.

Both coefficient updates are congruent low-rank corrections, so they
also come in Sherman-Morrison-Woodbury form where only p x p systems
are solved; that path is cheaper for small p and, with identity
parameters, returns the original matrices bit for bit.

The module also contains the verifier and reconstructor for the
spectral characterization of this pencil class: which (X, J, Gamma, Phi)
data can be realized by some symmetric pencil with singular mass, and
the explicit inverse formulas recovering M_u and K from such data.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    DimensionMismatch,
    IllDefined,
    MalformedBlocks,
    RankDeficient,
    Singular,
    SingularT,
)
from .pencil import (
    CheckReport,
    ConditionCheck,
    DEFAULT_RCOND,
    StructuredPencil,
    rcond_estimate,
    validate_pencil,
)
from .spectral import RealSpectralData, infer_pair_count

log = logging.getLogger(__name__)

# Reciprocal condition estimate below which an inversion is refused.
ILL_DEFINED_RCOND = 1e-13
# Relative asymmetry above which a computed symmetric matrix is flagged.
ASYMMETRY_WARN = 1e-8
# Default tolerance for the reconstruction preflight verification.
RECONSTRUCT_TOL = 1e-8

_COMMUTATION_TOL = 1e-10
_PATTERN_TOL = 1e-8


def _structure_deviation(G, s_tilde):
    """Largest entry of G outside the paired block pattern, plus the
    mismatch of each 2x2 block against [[a, b], [b, -a]]."""
    p = G.shape[0]
    dev = 0.0
    mask = np.zeros((p, p), dtype=bool)
    for j in range(s_tilde):
        i = 2 * j
        dev = max(
            dev,
            abs(G[i, i] + G[i + 1, i + 1]),
            abs(G[i, i + 1] - G[i + 1, i]),
        )
        mask[i : i + 2, i : i + 2] = True
    for i in range(2 * s_tilde, p):
        mask[i, i] = True
    off = np.abs(np.where(mask, 0.0, G))
    if off.size:
        dev = max(dev, float(off.max()))
    return dev


def structured_gamma(values, s_tilde, p):
    """Assemble the symmetric block matrix from its p free parameters:
    (a_j, b_j) per 2x2 block [[a, b], [b, -a]], then the scalars."""
    values = np.asarray(values, dtype=float)
    if values.shape != (p,):
        raise DimensionMismatch(
            f"expected {p} free parameters, got shape {values.shape}"
        )
    G = np.zeros((p, p))
    for j in range(s_tilde):
        a, b = values[2 * j], values[2 * j + 1]
        G[2 * j, 2 * j] = a
        G[2 * j + 1, 2 * j + 1] = -a
        G[2 * j, 2 * j + 1] = b
        G[2 * j + 1, 2 * j] = b
    for i in range(2 * s_tilde, p):
        G[i, i] = values[i]
    return G


def gamma_free_params(G, s_tilde):
    """Inverse of structured_gamma: extract the p free parameters."""
    G = np.asarray(G, dtype=float)
    p = G.shape[0]
    out = np.empty(p)
    for j in range(s_tilde):
        out[2 * j] = G[2 * j, 2 * j]
        out[2 * j + 1] = G[2 * j, 2 * j + 1]
    for i in range(2 * s_tilde, p):
        out[i] = G[i, i]
    return out


@dataclass(frozen=True)
class ParameterSet:
    """Update parameters (Theta, GammaTilde1) for a target with s_tilde
    conjugate-pair blocks.

    GammaTilde1 must be symmetric with the same block layout as the
    target eigenvalue matrix: s_tilde trace-free 2x2 blocks
    [[a, b], [b, -a]], then nonzero scalars. mode records how the set
    was produced: "choice_a" is the trivial seed (Theta = I,
    GammaTilde1 = Gamma1, only available when the block structure is
    unchanged), "choice_b" an optimized set, "custom" anything else.
    """

    Theta: np.ndarray
    GammaTilde1: np.ndarray
    s_tilde: int
    mode: str = "custom"

    def __post_init__(self):
        Th = np.ascontiguousarray(np.asarray(self.Theta, dtype=float))
        G = np.ascontiguousarray(np.asarray(self.GammaTilde1, dtype=float))
        object.__setattr__(self, "Theta", Th)
        object.__setattr__(self, "GammaTilde1", G)
        if self.mode not in ("choice_a", "choice_b", "custom"):
            raise MalformedBlocks(f"unknown parameter mode {self.mode!r}")
        p = Th.shape[0]
        if Th.ndim != 2 or Th.shape != (p, p):
            raise DimensionMismatch(f"Theta must be square, got {Th.shape}")
        if G.shape != (p, p):
            raise DimensionMismatch(
                f"GammaTilde1 has shape {G.shape}, expected {(p, p)}"
            )
        if not (0 <= 2 * self.s_tilde <= p):
            raise MalformedBlocks(f"s_tilde={self.s_tilde} impossible for p={p}")
        if rcond_estimate(Th) < DEFAULT_RCOND:
            raise Singular("Theta is numerically singular")
        if rcond_estimate(G) < DEFAULT_RCOND:
            raise Singular("GammaTilde1 is numerically singular")
        scale = max(np.abs(G).max(), 1e-300)
        dev = np.abs(G - G.T).max()
        if dev > _PATTERN_TOL * scale:
            raise MalformedBlocks(
                f"GammaTilde1 deviates from symmetry by {dev / scale:.3e} relative"
            )
        dev = _structure_deviation(G, self.s_tilde)
        if dev > _PATTERN_TOL * scale:
            raise MalformedBlocks(
                f"GammaTilde1 does not conform to the block pattern for "
                f"s_tilde={self.s_tilde} (deviation {dev / scale:.3e} relative)"
            )

    @property
    def p(self):
        return self.Theta.shape[0]


@dataclass(frozen=True)
class UpdatedSystem:
    """Result of one embedding: updated coefficients, the parameters
    that produced them, and the updated eigenvectors X1_tilde = X1 @ Theta."""

    M_u_tilde: np.ndarray
    K_tilde: np.ndarray
    params: ParameterSet
    method: str
    X1_tilde: np.ndarray

    @property
    def n_u(self):
        return self.M_u_tilde.shape[0]

    @property
    def n(self):
        return self.K_tilde.shape[0]


def compute_gamma1(p, X1, s=None):
    """Gram matrix Gamma_1 = X_1u^T M_u X_1u of the selected vectors.

    X_1u is the top n_u block of X1. When the selection count s of
    conjugate-pair blocks is supplied, the characteristic block pattern
    (trace-free 2x2 blocks, then scalars) is measured and a warning is
    logged if the matrix strays from it, which indicates the columns are
    not eigendata of the pencil.
    """
    X1 = np.asarray(X1, dtype=float)
    if X1.ndim != 2 or X1.shape[0] != p.n:
        raise DimensionMismatch(
            f"X1 has shape {X1.shape}, expected {p.n} rows"
        )
    X1u = X1[: p.n_u]
    cols = X1.shape[1]
    sv = np.linalg.svd(X1u, compute_uv=False) if X1u.size else np.array([])
    if cols and (sv.size < cols or sv[0] == 0.0 or sv[cols - 1] / sv[0] < DEFAULT_RCOND):
        raise RankDeficient(
            "the structural block X_1u of the selected eigenvectors is "
            "numerically rank-deficient; the update hypothesis fails"
        )
    G = X1u.T @ p.M_u @ X1u
    G = 0.5 * (G + G.T)
    r = rcond_estimate(G)
    if r < DEFAULT_RCOND:
        raise Singular(
            f"Gamma_1 is numerically singular (rcond {r:.3e}); the selected "
            f"eigenvectors are degenerate with respect to M_u"
        )
    if s is not None:
        scale = max(np.abs(G).max(), 1e-300)
        dev = _structure_deviation(G, s) / scale
        if dev > _COMMUTATION_TOL:
            log.warning(
                "Gamma_1 deviates from its expected block pattern by %.3e "
                "relative; X1 may not be eigendata of this pencil", dev
            )
        else:
            log.debug("Gamma_1 block pattern confirmed (deviation %.3e)", dev)
    return G


def default_gamma_tilde(Gamma1, s, s_tilde):
    """Trivial parameter seed.

    With an unchanged block structure (s_tilde = s) this is Theta = I,
    GammaTilde1 = Gamma1, which reproduces the original normalization
    (mode "choice_a"). A changed structure rules that out; the seed is
    then identity-like, with unit 2x2 blocks and unit scalars whose
    signs copy Gamma1's scalar entries where the shapes align (mode
    "custom", signalling that the trivial choice is unavailable).
    """
    Gamma1 = np.asarray(Gamma1, dtype=float)
    p = Gamma1.shape[0]
    if s_tilde == s:
        return ParameterSet(
            Theta=np.eye(p), GammaTilde1=Gamma1, s_tilde=s_tilde, mode="choice_a"
        )
    vals = np.ones(p)
    for j in range(s_tilde):
        vals[2 * j] = 1.0
        vals[2 * j + 1] = 0.0
    for i in range(2 * s_tilde, p):
        if i >= 2 * s and Gamma1[i, i] < 0:
            vals[i] = -1.0
    G = structured_gamma(vals, s_tilde, p)
    return ParameterSet(Theta=np.eye(p), GammaTilde1=G, s_tilde=s_tilde, mode="custom")


def _inverse_of(A, name):
    r = rcond_estimate(A)
    if r < ILL_DEFINED_RCOND:
        raise IllDefined(
            f"{name} is not invertible at working precision "
            f"(rcond {r:.3e} < {ILL_DEFINED_RCOND:.1e}); the update is not well defined"
        )
    return sla.solve(A, np.eye(A.shape[0]))


def _symmetrized(A, name):
    scale = max(np.abs(A).max(), 1e-300)
    dev = np.abs(A - A.T).max() / scale
    if dev > ASYMMETRY_WARN:
        log.warning(
            "%s came out asymmetric by %.3e relative; conditioning is suspect",
            name, dev,
        )
    return 0.5 * (A + A.T)


def _prepare_update(p, old, target_Lambda, params):
    """Shared validation and ingredient assembly for both update paths.

    Returns (X1, X1u, iL1, iLt, iG1, iGt, Theta). All four inverses are
    computed with the same solver call shape, so that identical inputs
    give bitwise identical inverses (the low-rank paths cancel exactly
    for the trivial parameter choice).
    """
    if not isinstance(old, RealSpectralData):
        raise DimensionMismatch("old eigendata must be RealSpectralData")
    X1 = old.X
    if X1.shape[0] != p.n:
        raise DimensionMismatch(
            f"eigendata has {X1.shape[0]} rows, pencil order is {p.n}"
        )
    q = old.p
    Lt = np.ascontiguousarray(np.asarray(target_Lambda, dtype=float))
    if Lt.shape != (q, q):
        raise DimensionMismatch(
            f"target matrix has shape {Lt.shape}, expected {(q, q)}"
        )
    if params.p != q:
        raise DimensionMismatch(
            f"parameter set is {params.p}x{params.p}, eigendata has p={q}"
        )
    s_t = infer_pair_count(Lt)
    if s_t != params.s_tilde:
        raise MalformedBlocks(
            f"target has {s_t} conjugate-pair blocks but the parameter set "
            f"declares s_tilde={params.s_tilde}"
        )

    iL1 = _inverse_of(np.ascontiguousarray(old.Lambda), "Lambda_1")
    iLt = _inverse_of(Lt, "the target eigenvalue matrix")
    G1 = compute_gamma1(p, X1, s=old.s)
    iG1 = _inverse_of(G1, "Gamma_1")
    iGt = _inverse_of(params.GammaTilde1, "GammaTilde_1")

    # The block layouts make Gamma * Lambda^-1 symmetric; confirm, since
    # everything downstream silently assumes it.
    for nm, G, iL in (("Gamma_1", G1, iL1), ("GammaTilde_1", params.GammaTilde1, iLt)):
        C = G @ iL
        dev = np.abs(C - C.T).max() / max(np.abs(C).max(), 1e-300)
        if dev > _COMMUTATION_TOL:
            raise MalformedBlocks(
                f"{nm} does not commute with its eigenvalue matrix "
                f"(relative deviation {dev:.3e}); block layouts disagree"
            )

    r = p.k_rcond()
    if r < ILL_DEFINED_RCOND:
        raise IllDefined(
            f"the stiffness matrix K is not invertible at working precision "
            f"(rcond {r:.3e}); the update is not well defined"
        )
    if r < DEFAULT_RCOND:
        log.warning("K condition estimate %.3e exceeds 1e12; results are suspect", 1.0 / r)

    return X1, X1[: p.n_u], iL1, iLt, iG1, iGt, params.Theta


def embed_direct(p, old, target_Lambda, params):
    """Update by forming and inverting the corrected full-size matrices.

    Cost is two dense inversions of orders n_u and n; prefer the
    Woodbury path when p is small relative to n_u.
    """
    X1, X1u, iL1, iLt, iG1, iGt, Th = _prepare_update(p, old, target_Lambda, params)

    iMu = _inverse_of(p.M_u, "M_u")
    inner_m = iMu - X1u @ iG1 @ X1u.T + X1u @ Th @ iGt @ Th.T @ X1u.T
    inner_m = _symmetrized(inner_m, "the inverse-form mass update")
    Mt = _inverse_of(inner_m, "the updated mass matrix inverse")

    iK = _inverse_of(p.K, "K")
    inner_k = iK + X1 @ iL1 @ iG1 @ X1.T - X1 @ Th @ iLt @ iGt @ Th.T @ X1.T
    inner_k = _symmetrized(inner_k, "the inverse-form stiffness update")
    Kt = _inverse_of(inner_k, "the updated stiffness matrix inverse")

    return UpdatedSystem(
        M_u_tilde=_symmetrized(Mt, "M_u_tilde"),
        K_tilde=_symmetrized(Kt, "K_tilde"),
        params=params,
        method="direct",
        X1_tilde=X1 @ Th,
    )


def embed_smw(p, old, target_Lambda, params):
    """Update via the Woodbury identity: the same coefficients as
    embed_direct, but only p x p systems are formed and solved.

    Both corrections are rank-p congruences. With the trivial parameter
    choice the p x p cores vanish identically and the original matrices
    are returned exactly.
    """
    X1, X1u, iL1, iLt, iG1, iGt, Th = _prepare_update(p, old, target_Lambda, params)
    q = old.p
    eye = np.eye(q)

    core_m = Th @ iGt @ Th.T - iG1
    W = p.M_u @ X1u
    cap = eye + (X1u.T @ W) @ core_m
    if rcond_estimate(cap) < ILL_DEFINED_RCOND:
        raise IllDefined(
            "the p x p capacitance matrix of the mass update is singular; "
            "the update is not well defined"
        )
    Mt = p.M_u - W @ core_m @ sla.solve(cap, W.T)

    core_k = iL1 @ iG1 - Th @ iLt @ iGt @ Th.T
    Z = p.K @ X1
    cap = eye + (X1.T @ Z) @ core_k
    if rcond_estimate(cap) < ILL_DEFINED_RCOND:
        raise IllDefined(
            "the p x p capacitance matrix of the stiffness update is singular; "
            "the update is not well defined"
        )
    Kt = p.K - Z @ core_k @ sla.solve(cap, Z.T)

    return UpdatedSystem(
        M_u_tilde=_symmetrized(Mt, "M_u_tilde"),
        K_tilde=_symmetrized(Kt, "K_tilde"),
        params=params,
        method="smw",
        X1_tilde=X1 @ Th,
    )


def embed(p, old, target_Lambda, params, method="auto"):
    """Dispatch between the two equivalent update paths.

    "auto" picks the Woodbury form when p <= n_u / 4 (cheaper and
    typically more accurate for small updates), the direct form
    otherwise.
    """
    if not isinstance(old, RealSpectralData):
        raise DimensionMismatch("old eigendata must be RealSpectralData")
    if method == "auto":
        method = "smw" if 4 * old.p <= p.n_u else "direct"
    if method == "direct":
        return embed_direct(p, old, target_Lambda, params)
    if method == "smw":
        return embed_smw(p, old, target_Lambda, params)
    raise DimensionMismatch(f"unknown embedding method {method!r}")


def verify_theorem1(X, J1, Gamma11, Phi, tol):
    """Check whether (X, diag(J1, 0), Gamma11, Phi) is realizable
    spectral data for some symmetric pencil with mass diag(M_u, 0).

    The four conditions, each reported with its residual:

    - nonsingular_x: X invertible at working precision;
    - commutation: J1^T Gamma11 = Gamma11 J1;
    - off_block: X_u T X_phi^T = 0, T = (diag(Gamma11,0) + X_phi^T Phi X_phi)^-1;
    - phi_normalization: X_phi T X_phi^T = Phi^-1.

    The last two are vacuous without an electric block. A numerically
    singular T^-1 raises SingularT since the remaining conditions are
    then meaningless.
    """
    X = np.asarray(X, dtype=float)
    J1 = np.asarray(J1, dtype=float)
    Gamma11 = np.asarray(Gamma11, dtype=float)
    Phi = np.asarray(Phi, dtype=float)
    n = X.shape[0]
    if X.ndim != 2 or X.shape != (n, n):
        raise DimensionMismatch(f"X must be square, got {X.shape}")
    n_u = J1.shape[0]
    if J1.shape != (n_u, n_u):
        raise DimensionMismatch(f"J1 must be square, got {J1.shape}")
    if Gamma11.shape != (n_u, n_u):
        raise DimensionMismatch(
            f"Gamma11 has shape {Gamma11.shape}, expected {(n_u, n_u)}"
        )
    n_phi = n - n_u
    if n_phi < 0:
        raise DimensionMismatch(
            f"J1 order {n_u} exceeds the full order {n}"
        )
    if Phi.shape != (n_phi, n_phi):
        raise DimensionMismatch(
            f"Phi has shape {Phi.shape}, expected {(n_phi, n_phi)}"
        )

    X_u = X[:n_u]
    X_phi = X[n_u:]
    checks = []

    rx = rcond_estimate(X)
    checks.append(ConditionCheck("nonsingular_x", rx, ILL_DEFINED_RCOND, rx > ILL_DEFINED_RCOND))

    sG = max(np.linalg.norm(Gamma11, 2), 1e-300)
    resid = np.linalg.norm(J1.T @ Gamma11 - Gamma11 @ J1, 2)
    scale = sG * max(np.linalg.norm(J1, 2), 1e-300)
    checks.append(
        ConditionCheck("commutation", float(resid), tol * scale, resid <= tol * scale)
    )

    Tinv = X_phi.T @ Phi @ X_phi
    Tinv[:n_u, :n_u] += Gamma11
    rt = rcond_estimate(Tinv)
    if rt < ILL_DEFINED_RCOND:
        raise SingularT(
            f"the normalization matrix T^-1 is numerically singular "
            f"(rcond {rt:.3e}); the data cannot be realized"
        )
    checks.append(ConditionCheck("nonsingular_t", rt, ILL_DEFINED_RCOND, True))

    if n_phi:
        T = sla.solve(Tinv, np.eye(n), assume_a="sym")
        B = X_u @ T @ X_phi.T
        scale = max(
            np.linalg.norm(X_u, 2) * np.linalg.norm(T, 2) * np.linalg.norm(X_phi, 2),
            1e-300,
        )
        resid = np.linalg.norm(B, 2)
        checks.append(
            ConditionCheck("off_block", float(resid), tol * scale, resid <= tol * scale)
        )

        rp = rcond_estimate(Phi)
        if rp < ILL_DEFINED_RCOND:
            raise IllDefined(
                f"Phi is numerically singular (rcond {rp:.3e}); "
                f"its inverse enters the normalization condition"
            )
        iPhi = sla.solve(Phi, np.eye(n_phi), assume_a="sym")
        resid = np.linalg.norm(X_phi @ T @ X_phi.T - iPhi, 2)
        scale = max(np.linalg.norm(iPhi, 2), 1e-300)
        checks.append(
            ConditionCheck(
                "phi_normalization", float(resid), tol * scale, resid <= tol * scale
            )
        )

    return CheckReport(checks)


def reconstruct_theorem1(X, J1, Gamma11, Phi, K22prime=None, *, tol=RECONSTRUCT_TOL):
    """Build the unique pencil realizing verified spectral data.

        M_u = (X_u T X_u^T)^-1
        K   = X^-T diag(-Gamma11 J1^-1, K22prime) X^-1

    with T from the verification conditions. The result satisfies
    M X + K X diag(J1, 0) = 0; K22prime (any nonsingular symmetric
    matrix, identity when omitted) parameterizes the genuine freedom in
    the electric stiffness block.
    """
    X = np.asarray(X, dtype=float)
    J1 = np.asarray(J1, dtype=float)
    Gamma11 = np.asarray(Gamma11, dtype=float)
    Phi = np.asarray(Phi, dtype=float)

    report = verify_theorem1(X, J1, Gamma11, Phi, tol)
    if not report.passed:
        raise IllDefined(
            "spectral data fails realizability conditions: "
            + ", ".join(report.failed_names())
        )

    n = X.shape[0]
    n_u = J1.shape[0]
    n_phi = n - n_u
    if K22prime is None:
        K22prime = np.eye(n_phi)
    K22prime = np.asarray(K22prime, dtype=float)
    if K22prime.shape != (n_phi, n_phi):
        raise DimensionMismatch(
            f"K22prime has shape {K22prime.shape}, expected {(n_phi, n_phi)}"
        )
    if n_phi:
        dev = np.abs(K22prime - K22prime.T).max()
        if dev > ASYMMETRY_WARN * max(np.abs(K22prime).max(), 1e-300):
            raise IllDefined("K22prime must be symmetric")
        if rcond_estimate(K22prime) < DEFAULT_RCOND:
            raise IllDefined("K22prime must be nonsingular")

    X_u = X[:n_u]
    X_phi = X[n_u:]
    Tinv = X_phi.T @ Phi @ X_phi
    Tinv[:n_u, :n_u] += Gamma11
    T = sla.solve(Tinv, np.eye(n), assume_a="sym")

    Mu = _inverse_of(_symmetrized(X_u @ T @ X_u.T, "X_u T X_u^T"), "X_u T X_u^T")

    iJ1 = _inverse_of(J1, "J1")
    D11 = -Gamma11 @ iJ1
    D11 = _symmetrized(D11, "the finite stiffness core -Gamma11 J1^-1")
    D = np.zeros((n, n))
    D[:n_u, :n_u] = D11
    D[n_u:, n_u:] = K22prime
    Xinv = _inverse_of(X, "X")
    K = Xinv.T @ D @ Xinv

    return validate_pencil(
        _symmetrized(Mu, "the reconstructed M_u"),
        _symmetrized(K, "the reconstructed K"),
        n_u,
        n_phi,
    )
