"""Shared fixtures and reference computations for the test suite.

The dense reference solver here deliberately ignores the block
structure: it forms the full singular mass matrix and runs the
generalized eigensolver with homogeneous output, so structured results
can be checked against an independent path.
"""

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import HealthCheck, settings

import spilloverfree as sf

settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def make_pencil(n_u, n_phi, seed, p=2, s_tilde=1):
    spec = sf.ProblemSpec(n_u=n_u, n_phi=n_phi, p=p, s_tilde=s_tilde, seed=seed)
    return sf.generate_pencil(spec)


@pytest.fixture
def small_pencil():
    """8 structural plus 3 electric unknowns, fixed seed."""
    return make_pencil(8, 3, seed=7)


def full_mass(p):
    M = np.zeros((p.n, p.n))
    M[: p.n_u, : p.n_u] = p.M_u
    return M


def dense_finite_eigs(p):
    """Finite eigenvalues of lambda*M + K via the unreduced problem.

    Homogeneous output (alpha, beta) keeps the infinite eigenvalues
    explicit: beta ~ 0 flags them, the rest are lambda = -alpha/beta.
    Returns (finite eigenvalues, number at infinity).
    """
    wh, _ = sla.eig(p.K, full_mass(p), homogeneous_eigvals=True)
    alpha, beta = wh[0], wh[1]
    finite = np.abs(beta) > 1e-8 * np.abs(alpha)
    lams = -alpha[finite] / beta[finite]
    return lams, int(np.count_nonzero(~finite))


def multiset_match(got, want, tol):
    """Greedy nearest-neighbor matching of two eigenvalue multisets.

    Asserts equal size and that every matched distance is below tol
    relative to max(|value|, 1). Returns the worst relative distance.
    """
    got = [complex(v) for v in got]
    want = [complex(v) for v in want]
    assert len(got) == len(want), f"multiset sizes differ: {len(got)} vs {len(want)}"
    used = [False] * len(want)
    worst = 0.0
    for g in got:
        best, best_d = None, np.inf
        for i, w in enumerate(want):
            if used[i]:
                continue
            d = abs(g - w)
            if d < best_d:
                best, best_d = i, d
        used[best] = True
        worst = max(worst, best_d / max(abs(want[best]), 1.0))
    assert worst <= tol, f"eigenvalue multisets differ by {worst:.3e} (tol {tol:.1e})"
    return worst


def spectrum_values(spectrum):
    return [complex(l) for l, _ in spectrum.finite_pairs]


class EmbeddingCase:
    """One fully prepared replacement problem.

    Selection takes the first s_sel conjugate pairs and n_real real
    eigenvalues in canonical order, so a given (dims, seed) always
    produces the same case.
    """

    def __init__(self, n_u, n_phi, s_sel, n_real, s_tilde, seed, max_perturb=0.3):
        self.pencil = make_pencil(n_u, n_phi, seed=seed)
        self.spectrum = sf.solve_spectrum(self.pencil)
        vals = spectrum_values(self.spectrum)
        pair_vals = [v for v in vals if v.imag > 0]
        real_vals = [v for v in vals if v.imag == 0.0]
        if len(pair_vals) < s_sel or len(real_vals) < n_real:
            raise AssertionError(
                f"seed {seed} offers {len(pair_vals)} pairs / {len(real_vals)} "
                f"reals, case needs {s_sel} / {n_real}"
            )
        wanted = []
        for v in pair_vals[:s_sel]:
            wanted.extend([v, v.conjugate()])
        wanted.extend(real_vals[:n_real])
        self.old, retained_idx = sf.select_eigendata(self.spectrum, wanted)
        self.retained = (
            sf.retained_eigendata(self.spectrum, retained_idx) if retained_idx else None
        )
        self.retained_values = [vals[i] for i in retained_idx]
        values = sf.perturb_targets(
            [l for l, _ in sf.from_real_representation(self.old)],
            s_tilde,
            max_perturb,
            (seed, 77),
            avoid=self.retained_values,
        )
        self.target_values = values
        self.target = sf.real_lambda_from_eigenvalues(values)
        self.gamma1 = sf.compute_gamma1(self.pencil, self.old.X, s=self.old.s)
        self.params = sf.default_gamma_tilde(self.gamma1, self.old.s, self.target.s)


def theorem_data(n_u, n_phi, seed):
    """Realizable spectral data of a generated pencil: the full real
    eigenbasis [X_fin | infinite basis], the reciprocal eigenvalue
    block J1, its coupling Gamma11, and Phi = I."""
    pencil = make_pencil(n_u, n_phi, seed=seed)
    spectrum = sf.solve_spectrum(pencil)
    d = sf.to_real_representation(list(spectrum.finite_pairs))
    n = pencil.n
    X = np.zeros((n, n))
    X[:, :n_u] = d.X
    X[:, n_u:] = spectrum.infinite_basis
    J1 = np.linalg.inv(d.Lambda)
    Gamma11 = sf.compute_gamma1(pencil, d.X, s=d.s)
    Phi = np.eye(n_phi)
    return pencil, X, J1, Gamma11, Phi


# ---------------------------------------------------------------------------
# Acceptance criteria summary. test_acceptance.py holds one test per
# criterion; the table below maps them to one-line labels and the hook
# prints a PASS/FAIL line for each at the end of the run.

_CRITERIA = (
    ("test_criterion_1_residuals_at_scale", "1: residual bounds and runtime at scale"),
    ("test_criterion_2_identity_parameters", "2: trivial parameters return the original system"),
    ("test_criterion_3_spectrum_replacement", "3: updated spectrum equals the prescribed multiset"),
    ("test_criterion_4_direct_matches_smw", "4: direct and Woodbury paths agree"),
    ("test_criterion_5_optimizer_improves", "5: optimized distance never above the trivial choice"),
    ("test_criterion_6_structure_change", "6: pair count change embeds cleanly"),
    ("test_criterion_7_reconstruction_roundtrip", "7: spectral data reconstruction round trip"),
    ("test_criterion_8_invariants_and_detection", "8: invariants hold, violations are detected"),
)

_acceptance_outcomes = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _acceptance_outcomes[name] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        _acceptance_outcomes[name] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for test_name, label in _CRITERIA:
        outcome = _acceptance_outcomes.get(test_name)
        if outcome == "passed":
            word = "PASS"
        elif outcome is None:
            word = "NOT RUN"
        elif outcome == "skipped":
            word = "SKIP"
        else:
            word = "FAIL"
        terminalreporter.write_line(f"criterion {label:<55s} {word}")
