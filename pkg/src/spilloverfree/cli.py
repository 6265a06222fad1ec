"""Batch command line driver.

Subcommands cover the full workflow on directories of artifact files:

  gen       draw a random admissible pencil and solve its spectrum
  solve     solve the spectrum of a stored pencil
  embed     replace selected eigenvalues, write the updated system
  optimize  same, then minimize the update distance over GammaTilde1
  verify    re-derive residuals and hashes of a stored run
  demo      canned end-to-end scenarios (perturb / restructure)

Matrices travel as Matrix Market files, eigendata in the spectral text
format, run summaries as key-value reports. Every domain error exits
with its own code; I/O failures exit 29. The SPILLOVERFREE_LOG
environment variable sets the log level.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import mmio
from .embedding import ParameterSet, UpdatedSystem, compute_gamma1, default_gamma_tilde, embed
from .errors import (
    DimensionMismatch,
    SpilloverError,
    StructureInfeasible,
    VerificationFailed,
)
from .objective import OptimizeConfig, optimize_gamma_tilde, residual_report
from .pencil import solve_spectrum, validate_pencil
from .probgen import ProblemSpec, generate_pencil, perturb_targets
from .spectral import (
    block_eigenvalues,
    real_lambda_from_eigenvalues,
    retained_eigendata,
    select_eigendata,
    to_real_representation,
)

log = logging.getLogger(__name__)

OS_ERROR_EXIT = 29

_PENCIL_FILES = ("M_u.mtx", "K.mtx")


def _read_pencil(directory):
    M_u = mmio.read_matrix(os.path.join(directory, "M_u.mtx"))
    K = mmio.read_matrix(os.path.join(directory, "K.mtx"))
    n_u = M_u.shape[0]
    n_phi = K.shape[0] - n_u
    if n_phi < 0:
        raise DimensionMismatch(
            f"K (order {K.shape[0]}) is smaller than M_u (order {n_u})"
        )
    return validate_pencil(M_u, K, n_u, n_phi)


def _write_pencil(p, directory):
    mmio.write_matrix(p.M_u, os.path.join(directory, "M_u.mtx"))
    mmio.write_matrix(p.K, os.path.join(directory, "K.mtx"))


def _hash_entries(directory, names):
    return {
        f"sha256_{name}": mmio.sha256_file(os.path.join(directory, name))
        for name in names
        if os.path.exists(os.path.join(directory, name))
    }


def _spectrum_entries(spectrum):
    return {
        "finite_count": len(spectrum.finite_pairs),
        "pair_count": spectrum.pair_count(),
        "real_count": spectrum.real_count(),
        "min_gap": float(spectrum.condition_summary.min()),
    }


def _select_values(spectrum, p_sel, s_sel, rng):
    """Pick s_sel conjugate pairs and p_sel - 2*s_sel real eigenvalues
    from a solved spectrum, by seeded draw without replacement."""
    lams = spectrum.eigenvalues
    pair_idx = [i for i, l in enumerate(lams) if l.imag > 0]
    real_idx = [i for i, l in enumerate(lams) if l.imag == 0.0]
    n_real = p_sel - 2 * s_sel
    if s_sel > len(pair_idx) or n_real > len(real_idx):
        raise StructureInfeasible(
            f"spectrum offers {len(pair_idx)} conjugate pairs and "
            f"{len(real_idx)} real eigenvalues; cannot select s={s_sel} "
            f"pairs plus {n_real} reals"
        )
    chosen = []
    for i in sorted(rng.choice(len(pair_idx), size=s_sel, replace=False)):
        l = lams[pair_idx[i]]
        chosen.extend([l, l.conjugate()])
    for i in sorted(rng.choice(len(real_idx), size=n_real, replace=False)):
        chosen.append(lams[real_idx[i]])
    return chosen


def _residual_entries(report, prefix=""):
    out = {
        prefix + "res1_original": report.res1_original,
        prefix + "res1_updated": report.res1_updated,
        prefix + "rec_mk": report.rec_mk,
        prefix + "method": report.method,
        prefix + "params_mode": report.params_mode,
    }
    for key, val in (
        ("res2_original", report.res2_original),
        ("res2_updated", report.res2_updated),
    ):
        out[prefix + key] = "unavailable" if val is None else val
    return out


def _embed_pipeline(args, *, optimize):
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    pencil = _read_pencil(args.in_dir)
    spectrum = solve_spectrum(pencil)

    if args.select is not None:
        sel_data = mmio.read_spectral(args.select)
        wanted = []
        vals = block_eigenvalues(sel_data.Lambda, sel_data.s)
        for j, z in enumerate(vals):
            if j < sel_data.s:
                wanted.extend([z, z.conjugate()])
            else:
                wanted.append(z)
    else:
        if args.p is None:
            raise DimensionMismatch("provide --p (with optional --s) or --select FILE")
        s_sel = args.s if args.s is not None else args.stilde
        if 2 * s_sel > args.p:
            raise StructureInfeasible(
                f"s={s_sel} conjugate pairs do not fit into p={args.p}"
            )
        rng = np.random.default_rng((args.seed, 1))
        wanted = _select_values(spectrum, args.p, s_sel, rng)

    old, retained_idx = select_eigendata(spectrum, wanted, match_tol=args.tol_match)
    retained = retained_eigendata(spectrum, retained_idx) if retained_idx else None
    retained_values = [spectrum.eigenvalues[i] for i in retained_idx]

    if args.targets is not None:
        tgt = mmio.read_spectral(args.targets)
        if tgt.p != old.p:
            raise DimensionMismatch(
                f"targets file has p={tgt.p}, selection has p={old.p}"
            )
        target = tgt
    else:
        values = perturb_targets(
            [l for l, _ in _expand(old)],
            args.stilde,
            args.max_perturb,
            (args.seed, 2),
            avoid=retained_values,
        )
        target = real_lambda_from_eigenvalues(values)

    gamma1 = compute_gamma1(pencil, old.X, s=old.s)
    seed_params = default_gamma_tilde(gamma1, old.s, target.s)

    entries = {
        "command": "optimize" if optimize else "embed",
        "input_dir": args.in_dir,
        "n_u": pencil.n_u,
        "n_phi": pencil.n_phi,
        "p": old.p,
        "s": old.s,
        "s_tilde": target.s,
        "seed": args.seed,
        "max_perturb": args.max_perturb,
        "tau1": args.tau1,
        "tau2": args.tau2,
    }
    entries.update(_hash_entries(args.in_dir, _PENCIL_FILES))

    if optimize:
        config = OptimizeConfig(
            max_evals=args.max_evals,
            restarts=args.restarts,
            method=args.method,
            tau1=args.tau1,
            tau2=args.tau2,
        )
        result = optimize_gamma_tilde(
            pencil, old, target.Lambda, np.eye(old.p), seed_params, config
        )
        params = result.best_params
        entries.update(
            {
                "best_rec_mk": result.best_rec_mk,
                "baseline_rec_mk": (
                    "unavailable"
                    if result.baseline_rec_mk is None
                    else result.baseline_rec_mk
                ),
                "iterations": result.iterations,
                "converged": result.converged,
            }
        )
    else:
        params = seed_params

    updated = embed(pencil, old, target.Lambda, params, method=args.method)
    report = residual_report(
        pencil,
        updated,
        old,
        target.Lambda,
        retained,
        args.tau1,
        args.tau2,
        match_tol=args.tol_match,
    )
    entries.update(_residual_entries(report))

    mmio.write_matrix(updated.M_u_tilde, os.path.join(out_dir, "M_u_tilde.mtx"))
    mmio.write_matrix(updated.K_tilde, os.path.join(out_dir, "K_tilde.mtx"))
    mmio.write_matrix(updated.X1_tilde, os.path.join(out_dir, "X1_tilde.mtx"))
    mmio.write_matrix(params.Theta, os.path.join(out_dir, "theta.mtx"))
    mmio.write_matrix(params.GammaTilde1, os.path.join(out_dir, "gamma_tilde.mtx"))
    mmio.write_spectral(old, os.path.join(out_dir, "selection.spectral"))
    mmio.write_spectral(target, os.path.join(out_dir, "targets.spectral"))
    entries.update(
        _hash_entries(
            out_dir,
            (
                "M_u_tilde.mtx",
                "K_tilde.mtx",
                "X1_tilde.mtx",
                "theta.mtx",
                "gamma_tilde.mtx",
                "selection.spectral",
                "targets.spectral",
            ),
        )
    )
    name = "optimize.report" if optimize else "embed.report"
    mmio.write_report(entries, os.path.join(out_dir, name))
    print(
        f"{entries['command']}: p={old.p} s={old.s} s_tilde={target.s} "
        f"res1_updated={report.res1_updated:.3e} rec_mk={report.rec_mk:.6f} "
        f"-> {out_dir}"
    )
    return 0


def _expand(d):
    """(eigenvalue, None) list of a RealSpectralData, conjugates included."""
    vals = block_eigenvalues(d.Lambda, d.s)
    out = []
    for j, z in enumerate(vals):
        if j < d.s:
            out.extend([(z, None), (z.conjugate(), None)])
        else:
            out.append((z, None))
    return out


def _cmd_gen(args):
    os.makedirs(args.out_dir, exist_ok=True)
    p_sel = args.p if args.p is not None else min(6, args.nu)
    s_tilde = args.stilde if args.stilde is not None else min(2, p_sel // 2)
    spec = ProblemSpec(
        n_u=args.nu,
        n_phi=args.nphi,
        p=p_sel,
        s_tilde=s_tilde,
        max_perturbation=args.max_perturb,
        seed=args.seed,
    )
    pencil = generate_pencil(spec)
    spectrum = solve_spectrum(pencil)
    _write_pencil(pencil, args.out_dir)
    full = to_real_representation(list(spectrum.finite_pairs))
    mmio.write_spectral(full, os.path.join(args.out_dir, "spectrum.spectral"))
    entries = {
        "command": "gen",
        "n_u": pencil.n_u,
        "n_phi": pencil.n_phi,
        "p": spec.p,
        "s_tilde": spec.s_tilde,
        "max_perturb": spec.max_perturbation,
        "seed": spec.seed,
    }
    entries.update(_spectrum_entries(spectrum))
    entries.update(
        _hash_entries(args.out_dir, _PENCIL_FILES + ("spectrum.spectral",))
    )
    mmio.write_report(entries, os.path.join(args.out_dir, "gen.report"))
    print(
        f"gen: n_u={pencil.n_u} n_phi={pencil.n_phi} "
        f"pairs={spectrum.pair_count()} reals={spectrum.real_count()} "
        f"-> {args.out_dir}"
    )
    return 0


def _cmd_solve(args):
    out_dir = args.out_dir or args.in_dir
    os.makedirs(out_dir, exist_ok=True)
    pencil = _read_pencil(args.in_dir)
    spectrum = solve_spectrum(pencil)
    full = to_real_representation(list(spectrum.finite_pairs))
    mmio.write_spectral(full, os.path.join(out_dir, "spectrum.spectral"))
    entries = {
        "command": "solve",
        "input_dir": args.in_dir,
        "n_u": pencil.n_u,
        "n_phi": pencil.n_phi,
    }
    entries.update(_spectrum_entries(spectrum))
    entries.update(_hash_entries(args.in_dir, _PENCIL_FILES))
    entries.update(_hash_entries(out_dir, ("spectrum.spectral",)))
    mmio.write_report(entries, os.path.join(out_dir, "solve.report"))
    print(
        f"solve: {len(spectrum.finite_pairs)} finite eigenvalues "
        f"({spectrum.pair_count()} pairs, {spectrum.real_count()} real), "
        f"{pencil.n_phi} at infinity -> {out_dir}"
    )
    return 0


def _cmd_embed(args):
    return _embed_pipeline(args, optimize=False)


def _cmd_optimize(args):
    return _embed_pipeline(args, optimize=True)


def _cmd_verify(args):
    report = None
    for name in ("embed.report", "optimize.report", "demo.report"):
        path = os.path.join(args.in_dir, name)
        if os.path.exists(path):
            report = mmio.read_report(path)
            break
    if report is None:
        raise VerificationFailed(f"no run report found in {args.in_dir}")
    pencil_dir = args.pencil or report.get("input_dir")
    if not pencil_dir and os.path.exists(os.path.join(args.in_dir, "M_u.mtx")):
        pencil_dir = args.in_dir
    if not pencil_dir:
        raise VerificationFailed("report does not record input_dir; pass --pencil")

    failures = []

    def check_hashes(directory, names):
        for name in names:
            key = f"sha256_{name}"
            if key not in report:
                continue
            path = os.path.join(directory, name)
            if not os.path.exists(path):
                failures.append(f"{name}: file missing")
                continue
            actual = mmio.sha256_file(path)
            if actual != report[key]:
                failures.append(f"{name}: hash mismatch (stored {report[key][:12]}.., actual {actual[:12]}..)")

    check_hashes(pencil_dir, _PENCIL_FILES)
    check_hashes(
        args.in_dir,
        (
            "M_u_tilde.mtx",
            "K_tilde.mtx",
            "X1_tilde.mtx",
            "theta.mtx",
            "gamma_tilde.mtx",
            "selection.spectral",
            "targets.spectral",
        ),
    )

    pencil = _read_pencil(pencil_dir)
    old = mmio.read_spectral(os.path.join(args.in_dir, "selection.spectral"))
    target = mmio.read_spectral(os.path.join(args.in_dir, "targets.spectral"))
    M_u_t = mmio.read_matrix(os.path.join(args.in_dir, "M_u_tilde.mtx"))
    K_t = mmio.read_matrix(os.path.join(args.in_dir, "K_tilde.mtx"))
    X1_t = mmio.read_matrix(os.path.join(args.in_dir, "X1_tilde.mtx"))
    theta = mmio.read_matrix(os.path.join(args.in_dir, "theta.mtx"))
    gamma_t = mmio.read_matrix(os.path.join(args.in_dir, "gamma_tilde.mtx"))
    params = ParameterSet(
        Theta=theta,
        GammaTilde1=gamma_t,
        s_tilde=target.s,
        mode=report.get("params_mode", "custom"),
    )
    updated = UpdatedSystem(
        M_u_tilde=M_u_t,
        K_tilde=K_t,
        params=params,
        method=report.get("method", "unknown"),
        X1_tilde=X1_t,
    )

    spectrum = solve_spectrum(pencil)
    wanted = [l for l, _ in _expand(old)]
    _, retained_idx = select_eigendata(spectrum, wanted, match_tol=args.tol_match)
    retained = retained_eigendata(spectrum, retained_idx) if retained_idx else None

    recomputed = residual_report(
        pencil,
        updated,
        old,
        target.Lambda,
        retained,
        args.tau1,
        args.tau2,
        match_tol=args.tol_match,
    )

    if recomputed.res1_updated > args.tol_check:
        failures.append(
            f"res1_updated = {recomputed.res1_updated:.3e} exceeds "
            f"tolerance {args.tol_check:.1e}"
        )
    if recomputed.res2_updated is not None and recomputed.res2_updated > args.tol_check:
        failures.append(
            f"res2_updated = {recomputed.res2_updated:.3e} exceeds "
            f"tolerance {args.tol_check:.1e}"
        )
    for key, value in (
        ("res1_updated", recomputed.res1_updated),
        ("res2_updated", recomputed.res2_updated),
        ("rec_mk", recomputed.rec_mk),
    ):
        if key not in report or value is None:
            continue
        stored = report[key]
        if stored == "unavailable":
            continue
        stored = float(stored)
        if abs(stored - value) > 1e-6 * max(abs(stored), abs(value), 1e-30):
            failures.append(
                f"{key}: stored {stored:.6e} but recomputed {value:.6e}"
            )

    entries = {
        "command": "verify",
        "input_dir": args.in_dir,
        "pencil_dir": pencil_dir,
        "failures": len(failures),
        "res1_updated": recomputed.res1_updated,
        "res2_updated": (
            "unavailable" if recomputed.res2_updated is None else recomputed.res2_updated
        ),
        "rec_mk": recomputed.rec_mk,
    }
    mmio.write_report(entries, os.path.join(args.in_dir, "verify.report"))

    if failures:
        raise VerificationFailed(
            "verification failed:\n  " + "\n  ".join(failures)
        )
    print(f"verify: all checks passed for {args.in_dir}")
    return 0


def _cmd_demo(args):
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    spec = ProblemSpec(
        n_u=args.nu,
        n_phi=args.nphi,
        p=6,
        s_tilde=2 if args.example == 1 else 1,
        max_perturbation=0.3,
        seed=args.seed,
    )
    pencil = generate_pencil(spec)
    spectrum = solve_spectrum(pencil)
    _write_pencil(pencil, out_dir)

    rng = np.random.default_rng((args.seed, 1))
    wanted = _select_values(spectrum, 6, 2, rng)
    old, retained_idx = select_eigendata(spectrum, wanted)
    retained = retained_eigendata(spectrum, retained_idx) if retained_idx else None
    retained_values = [spectrum.eigenvalues[i] for i in retained_idx]

    values = perturb_targets(
        [l for l, _ in _expand(old)],
        spec.s_tilde,
        spec.max_perturbation,
        (args.seed, 2),
        avoid=retained_values,
    )
    target = real_lambda_from_eigenvalues(values)

    gamma1 = compute_gamma1(pencil, old.X, s=old.s)
    seed_params = default_gamma_tilde(gamma1, old.s, target.s)
    seed_label = "choice_a" if seed_params.mode == "choice_a" else "seed"

    entries = {
        "command": "demo",
        "example": args.example,
        "n_u": pencil.n_u,
        "n_phi": pencil.n_phi,
        "p": old.p,
        "s": old.s,
        "s_tilde": target.s,
        "seed": args.seed,
    }

    baseline = embed(pencil, old, target.Lambda, seed_params, method=args.method)
    rep_a = residual_report(
        pencil, baseline, old, target.Lambda, retained, args.tau1, args.tau2
    )
    entries.update(_residual_entries(rep_a, prefix=seed_label + "_"))

    result = optimize_gamma_tilde(
        pencil,
        old,
        target.Lambda,
        np.eye(old.p),
        seed_params,
        OptimizeConfig(method=args.method, tau1=args.tau1, tau2=args.tau2),
    )
    optimized = embed(pencil, old, target.Lambda, result.best_params, method=args.method)
    rep_b = residual_report(
        pencil, optimized, old, target.Lambda, retained, args.tau1, args.tau2
    )
    entries.update(_residual_entries(rep_b, prefix="choice_b_"))
    entries["choice_b_iterations"] = result.iterations
    entries["choice_b_converged"] = result.converged

    mmio.write_matrix(optimized.M_u_tilde, os.path.join(out_dir, "M_u_tilde.mtx"))
    mmio.write_matrix(optimized.K_tilde, os.path.join(out_dir, "K_tilde.mtx"))
    mmio.write_matrix(optimized.X1_tilde, os.path.join(out_dir, "X1_tilde.mtx"))
    mmio.write_matrix(result.best_params.Theta, os.path.join(out_dir, "theta.mtx"))
    mmio.write_matrix(
        result.best_params.GammaTilde1, os.path.join(out_dir, "gamma_tilde.mtx")
    )
    mmio.write_spectral(old, os.path.join(out_dir, "selection.spectral"))
    mmio.write_spectral(target, os.path.join(out_dir, "targets.spectral"))
    entries.update(
        _hash_entries(
            out_dir,
            _PENCIL_FILES
            + (
                "M_u_tilde.mtx",
                "K_tilde.mtx",
                "X1_tilde.mtx",
                "theta.mtx",
                "gamma_tilde.mtx",
                "selection.spectral",
                "targets.spectral",
            ),
        )
    )
    mmio.write_report(entries, os.path.join(out_dir, "demo.report"))
    print(
        f"demo {args.example}: {seed_label} rec_mk={rep_a.rec_mk:.4f} "
        f"res1={rep_a.res1_updated:.3e} | choice_b rec_mk={rep_b.rec_mk:.4f} "
        f"res1={rep_b.res1_updated:.3e} -> {out_dir}"
    )
    return 0


def _add_common_embed_flags(sub):
    sub.add_argument("--p", type=int, default=None, help="number of eigenvalues to replace")
    sub.add_argument("--s", type=int, default=None,
                     help="conjugate pairs in the selection (default: --stilde)")
    sub.add_argument("--stilde", type=int, default=2,
                     help="conjugate pairs among the targets")
    sub.add_argument("--max-perturb", type=float, default=0.3, dest="max_perturb")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--method", choices=("direct", "smw", "auto"), default="auto")
    sub.add_argument("--tau1", type=float, default=1.0)
    sub.add_argument("--tau2", type=float, default=1.0)
    sub.add_argument("--tol-match", type=float, default=1e-6, dest="tol_match")
    sub.add_argument("--select", default=None,
                     help="spectral file naming the eigenvalues to replace")
    sub.add_argument("--targets", default=None,
                     help="spectral file with the replacement eigenvalues")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spilloverfree",
        description="eigenvalue embedding for structured pencils with singular mass",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("gen", help="generate a random admissible pencil")
    sub.add_argument("--nu", type=int, required=True)
    sub.add_argument("--nphi", type=int, required=True)
    sub.add_argument("--p", type=int, default=None)
    sub.add_argument("--stilde", type=int, default=None)
    sub.add_argument("--max-perturb", type=float, default=0.3, dest="max_perturb")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True, dest="out_dir")
    sub.set_defaults(func=_cmd_gen)

    sub = subs.add_parser("solve", help="solve the spectrum of a stored pencil")
    sub.add_argument("--in", required=True, dest="in_dir")
    sub.add_argument("--out", default=None, dest="out_dir")
    sub.set_defaults(func=_cmd_solve)

    sub = subs.add_parser("embed", help="replace selected eigenvalues")
    sub.add_argument("--in", required=True, dest="in_dir")
    sub.add_argument("--out", required=True, dest="out_dir")
    _add_common_embed_flags(sub)
    sub.set_defaults(func=_cmd_embed)

    sub = subs.add_parser("optimize", help="embed, minimizing the update distance")
    sub.add_argument("--in", required=True, dest="in_dir")
    sub.add_argument("--out", required=True, dest="out_dir")
    _add_common_embed_flags(sub)
    sub.add_argument("--restarts", type=int, default=3)
    sub.add_argument("--max-evals", type=int, default=0, dest="max_evals")
    sub.set_defaults(func=_cmd_optimize)

    sub = subs.add_parser("verify", help="re-derive residuals and hashes of a run")
    sub.add_argument("--in", required=True, dest="in_dir")
    sub.add_argument("--pencil", default=None,
                     help="directory with the original pencil (default: from report)")
    sub.add_argument("--tau1", type=float, default=1.0)
    sub.add_argument("--tau2", type=float, default=1.0)
    sub.add_argument("--tol-match", type=float, default=1e-6, dest="tol_match")
    sub.add_argument("--tol-check", type=float, default=1e-10, dest="tol_check")
    sub.set_defaults(func=_cmd_verify)

    sub = subs.add_parser("demo", help="canned end-to-end scenarios")
    sub.add_argument("--example", type=int, choices=(1, 2), required=True)
    sub.add_argument("--nu", type=int, default=100)
    sub.add_argument("--nphi", type=int, default=40)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--method", choices=("direct", "smw", "auto"), default="auto")
    sub.add_argument("--tau1", type=float, default=1.0)
    sub.add_argument("--tau2", type=float, default=1.0)
    sub.add_argument("--out", required=True, dest="out_dir")
    sub.set_defaults(func=_cmd_demo)

    return parser


def main(argv=None):
    level = os.environ.get("SPILLOVERFREE_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpilloverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return OS_ERROR_EXIT


if __name__ == "__main__":
    sys.exit(main())
