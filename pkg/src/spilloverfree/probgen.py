"""Random admissible test problems and perturbed target spectra.

Instances follow the experimental recipe: dense uniform random symmetric
matrices, with M_u pushed away from singularity by shifting each of its
eigenvalues one unit further from zero (keeping it indefinite, so the
finite spectrum has both conjugate pairs and real eigenvalues) and the
electric stiffness block made diagonally dominant. Everything is
deterministic in the seed.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSpectrum,
    DimensionMismatch,
    GenerationFailed,
    NotConjugateClosed,
    StructureInfeasible,
    ZeroEigenvalue,
)
from .pencil import solve_spectrum, validate_pencil

# Targets (and their imaginary parts, for conjugate pairs) must keep at
# least this modulus: zero and near-axis targets break the simple
# nonzero-eigenvalue assumptions.
MIN_TARGET_MODULUS = 1e-3
_DISJOINT_TOL = 1e-6
_RESAMPLE_BUDGET = 100


@dataclass(frozen=True)
class ProblemSpec:
    """Dimensions and replacement layout of one generated instance."""

    n_u: int
    n_phi: int
    p: int
    s_tilde: int
    max_perturbation: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.n_u < 1:
            raise DimensionMismatch(f"n_u must be positive, got {self.n_u}")
        if self.n_phi < 0:
            raise DimensionMismatch(f"n_phi must be nonnegative, got {self.n_phi}")
        if not (1 <= self.p <= self.n_u):
            raise StructureInfeasible(
                f"selection size p={self.p} must satisfy 1 <= p <= n_u={self.n_u}"
            )
        if not (0 <= 2 * self.s_tilde <= self.p):
            raise StructureInfeasible(
                f"s_tilde={self.s_tilde} conjugate pairs do not fit into p={self.p}"
            )
        if self.max_perturbation < 0:
            raise DimensionMismatch("max_perturbation must be nonnegative")


def _random_symmetric(rng, n):
    A = rng.uniform(-1.0, 1.0, (n, n))
    return 0.5 * (A + A.T)


def generate_pencil(spec, *, retries=5):
    """Deterministic random pencil for a ProblemSpec.

    M_u is an indefinite symmetric matrix with all eigenvalue moduli
    >= 1 (each eigenvalue of a uniform symmetric draw is shifted one
    unit away from zero). K is uniform symmetric with n added to the
    K_phi diagonal. Draws whose spectrum is degenerate are retried with
    a derived seed; running out of retries raises GenerationFailed.
    """
    n = spec.n_u + spec.n_phi
    for attempt in range(retries + 1):
        rng = np.random.default_rng((spec.seed, attempt))
        d, Q = np.linalg.eigh(_random_symmetric(rng, spec.n_u))
        shift = np.where(d >= 0, d + 1.0, d - 1.0)
        M_u = Q @ (shift[:, None] * Q.T)
        K = _random_symmetric(rng, n)
        K[spec.n_u :, spec.n_u :] += n * np.eye(spec.n_phi)
        pencil = validate_pencil(M_u, K, spec.n_u, spec.n_phi)
        try:
            solve_spectrum(pencil)
        except DegenerateSpectrum:
            continue
        return pencil
    raise GenerationFailed(
        f"no admissible pencil within {retries + 1} attempts for seed "
        f"{spec.seed}; reseed the spec"
    )


def _classify(old_eigs):
    """Split a conjugate-closed list into pair representatives
    (positive imaginary part) and reals."""
    vals = [complex(v) for v in old_eigs]
    scale = max(abs(v) for v in vals) if vals else 0.0
    if not vals or min(abs(v) for v in vals) < 1e-14 * max(scale, 1e-300):
        raise ZeroEigenvalue("eigenvalues to perturb must be nonzero")
    pairs = []
    reals = []
    used = [False] * len(vals)
    for i, v in enumerate(vals):
        if used[i]:
            continue
        if v.imag == 0.0:
            reals.append(v.real)
            used[i] = True
            continue
        partner = None
        for j in range(len(vals)):
            if j != i and not used[j] and abs(vals[j] - v.conjugate()) <= 1e-10 * scale:
                partner = j
                break
        if partner is None:
            raise NotConjugateClosed(
                f"eigenvalue {v:.8e} has no conjugate partner; cannot perturb"
            )
        used[i] = used[partner] = True
        pairs.append(v if v.imag > 0 else v.conjugate())
    return pairs, reals


def _ordered(pairs, reals):
    pairs = sorted(pairs, key=lambda z: (z.real, z.imag))
    reals = sorted(reals)
    out = []
    for z in pairs:
        out.extend([z, z.conjugate()])
    out.extend(complex(r) for r in reals)
    return out


def _admissible(z, chosen, avoid, *, needs_imag):
    if abs(z) < MIN_TARGET_MODULUS:
        return False
    if needs_imag and abs(z.imag) < MIN_TARGET_MODULUS:
        return False
    for w in chosen:
        if abs(z - w) < _DISJOINT_TOL * max(abs(w), 1.0):
            return False
        if abs(z - w.conjugate()) < _DISJOINT_TOL * max(abs(w), 1.0):
            return False
    for w in avoid:
        if abs(z - w) < _DISJOINT_TOL * max(abs(w), 1.0):
            return False
    return True


def perturb_targets(old_eigs, s_tilde, max_perturbation, seed, avoid=()):
    """Conjugate-closed target set replacing `old_eigs`.

    With the block structure unchanged (s_tilde equals the old pair
    count) each target is the corresponding old eigenvalue moved by at
    most max_perturbation; max_perturbation = 0 returns the old values.
    A changed structure forces fresh draws from a unit box instead.
    Either way targets stay nonzero, mutually distinct, and disjoint
    from `avoid` (pass the retained spectrum there). Targets are
    returned pairs first, conjugate partners adjacent.
    """
    pairs, reals = _classify(old_eigs)
    m = len(old_eigs)
    if not (0 <= 2 * s_tilde <= m):
        raise StructureInfeasible(
            f"s_tilde={s_tilde} conjugate pairs do not fit into {m} targets"
        )
    avoid = [complex(a) for a in avoid]
    rng = np.random.default_rng(seed)

    if s_tilde == len(pairs):
        if max_perturbation == 0.0:
            return _ordered(pairs, reals)
        new_pairs = []
        for z in pairs:
            for _ in range(_RESAMPLE_BUDGET):
                r = rng.uniform(0.0, max_perturbation)
                th = rng.uniform(0.0, 2.0 * np.pi)
                cand = z + r * np.exp(1j * th)
                if _admissible(cand, new_pairs, avoid, needs_imag=True):
                    new_pairs.append(cand if cand.imag > 0 else cand.conjugate())
                    break
            else:
                raise StructureInfeasible(
                    f"could not place a perturbed conjugate pair near {z:.6e} "
                    f"within {_RESAMPLE_BUDGET} draws"
                )
        new_reals = []
        taken = [complex(w) for w in new_pairs]
        for x in reals:
            for _ in range(_RESAMPLE_BUDGET):
                cand = complex(x + rng.uniform(-max_perturbation, max_perturbation))
                if _admissible(cand, taken + [complex(v) for v in new_reals], avoid, needs_imag=False):
                    new_reals.append(cand.real)
                    break
            else:
                raise StructureInfeasible(
                    f"could not place a perturbed real target near {x:.6e} "
                    f"within {_RESAMPLE_BUDGET} draws"
                )
        return _ordered(new_pairs, new_reals)

    # Structure change: fresh draws in a bounded box, nothing to stay
    # near. Real parts and moduli stay order-one.
    new_pairs = []
    for _ in range(s_tilde):
        for _ in range(_RESAMPLE_BUDGET):
            cand = complex(rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0))
            if _admissible(cand, new_pairs, avoid, needs_imag=True):
                new_pairs.append(cand)
                break
        else:
            raise StructureInfeasible(
                f"could not draw {s_tilde} fresh conjugate pairs within budget"
            )
    new_reals = []
    taken = list(new_pairs)
    for _ in range(m - 2 * s_tilde):
        for _ in range(_RESAMPLE_BUDGET):
            cand = complex(rng.uniform(0.05, 1.0))
            if _admissible(cand, taken + [complex(v) for v in new_reals], avoid, needs_imag=False):
                new_reals.append(cand.real)
                break
        else:
            raise StructureInfeasible(
                "could not draw enough fresh real targets within budget"
            )
    return _ordered(new_pairs, new_reals)
