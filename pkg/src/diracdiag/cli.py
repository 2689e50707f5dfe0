"""Command line driver: validate | one-particle | converge | nbody.

Only standard-library modules are imported at module scope.  numpy and the
numerical modules load inside the command bodies, after --threads has been
translated into BLAS environment variables, so the flag actually controls
the thread pool of the linear algebra backend.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import (
    GAMMA_CRITICAL,
    RunConfig,
    config_digest,
    load_config,
    require_convergence_window,
)
from .errors import ConfigError, NumericalError

_THREAD_ENV = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def set_thread_env(n_threads: int) -> None:
    for var in _THREAD_ENV:
        os.environ[var] = str(n_threads)


def peek_threads(argv: list[str]) -> int | None:
    """Read --threads before argparse runs; must happen before numpy loads."""
    for i, arg in enumerate(argv):
        val = None
        if arg == "--threads" and i + 1 < len(argv):
            val = argv[i + 1]
        elif arg.startswith("--threads="):
            val = arg.split("=", 1)[1]
        if val is not None:
            try:
                return int(val)
            except ValueError:
                return None
    return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diracdiag",
        description="Block-diagonalization of projected Coulomb-Dirac operators "
                    "and its perturbative expansion, at finite matrix scale.")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = (
        ("validate", cmd_validate, "run the oracle suite and report pass/fail"),
        ("one-particle", cmd_one_particle, "eigenvalues and residuals per coupling"),
        ("converge", cmd_converge, "norm-resolvent convergence tables"),
        ("nbody", cmd_nbody, "N-particle spectra and inequality diagnostics"),
    )
    for name, func, help_text in commands:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", metavar="PATH", default=None,
                        help="JSON config file (defaults used when omitted)")
        sp.add_argument("--output", metavar="DIR", default=None,
                        help="output directory (overrides config)")
        sp.add_argument("--threads", metavar="N", type=int, default=None,
                        help="BLAS thread count (default: leave environment alone)")
        sp.add_argument("--seed", metavar="INT", type=int, default=None,
                        help="seed recorded in metadata; no command draws random numbers")
        sp.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    threads = peek_threads(argv)
    if threads is not None and threads > 0:
        set_thread_env(threads)
    args = build_parser().parse_args(argv)
    try:
        if args.threads is not None and args.threads <= 0:
            raise ConfigError(f"--threads must be positive, got {args.threads}")
        cfg = load_config(args.config)
        if args.output is not None:
            cfg = dataclasses.replace(cfg, output_dir=args.output)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        return args.func(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def cmd_validate(cfg: RunConfig) -> int:
    import numpy as np

    from . import manybody as mb
    from . import oneparticle as op
    from .grids import build_channel_grid
    from .report import write_json_summary, write_text_report

    grid = build_channel_grid(cfg.grid.n, cfg.grid.map_scale, cfg.grid.kappa)
    checks: list[dict] = []

    def record(name: str, value: float, threshold: float, passed: bool, hard: bool = True):
        checks.append({"name": name, "value": float(value), "threshold": float(threshold),
                       "passed": bool(passed), "hard": hard})

    # nonrelativistic limit of the Coulomb kernel: lowest hydrogen level in
    # the upper channel, -1/(2(l+1)^2)
    t_kin = np.diag(grid.p ** 2 / 2.0)
    v_chan = op.coulomb_channel_matrix(grid.p, grid.w, grid.l_upper)
    ground = float(np.linalg.eigvalsh(t_kin + v_chan)[0])
    ref = -0.5 / (grid.l_upper + 1) ** 2
    rel = abs(ground - ref) / abs(ref)
    record("hydrogen_momentum_ground", rel, 1e-6, rel <= 1e-6)

    systems = {}
    for gamma in cfg.gamma_list:
        systems[gamma] = op.assemble_system(grid, gamma)

    for gamma, sys_g in systems.items():
        if gamma == 0.0:
            continue
        e_ref = op.sommerfeld_energy(gamma, 1, cfg.grid.kappa)
        e_num = op.positive_levels(sys_g, 1)[0]
        rel = abs(e_num - e_ref) / e_ref
        record(f"sommerfeld_ground_gamma_{gamma:.4f}", rel, 1e-3, rel <= 1e-3)

    any_sys = next(iter(systems.values()))
    kato = op.check_kato(any_sys)
    kato_floor = -1e-4 * float(np.linalg.norm(any_sys.v, 2))
    record("kato_lower_bound", kato, kato_floor, kato >= kato_floor)

    for gamma, sys_g in systems.items():
        if gamma == 0.0:
            continue
        margin = op.check_dgamma_bound(sys_g)
        record(f"dgamma_bound_gamma_{gamma:.4f}", margin, -1e-4, margin >= -1e-4)

    try:
        pair = mb.build_pair_interaction(grid)
        for q in (0.5, 1.0):
            val = mb.slater_monopole_value(pair, q)
            ref = 5.0 * q / 8.0
            rel = abs(val - ref) / ref
            record(f"slater_monopole_q_{q:g}", rel, 1e-4, rel <= 1e-4)
    except NumericalError as exc:
        record("pair_round_trip", float("inf"), 1e-6, False)
        print(f"pair interaction unavailable: {exc}", file=sys.stderr)

    for gamma, sys_g in systems.items():
        uni = float(np.linalg.norm(sys_g.u_gamma @ sys_g.u_gamma.conj().T - np.eye(grid.dim), 2))
        inter = float(np.linalg.norm(
            sys_g.u_gamma @ sys_g.p_plus_gamma - sys_g.p_plus_0 @ sys_g.u_gamma, 2))
        record(f"unitarity_gamma_{gamma:.4f}", uni, 1e-10, uni <= 1e-10)
        record(f"intertwining_gamma_{gamma:.4f}", inter, 1e-10, inter <= 1e-10)

    for gamma, sys_g in systems.items():
        ok = op.check_gap_bound(sys_g, cfg.tolerances.tol_gap)
        record(f"gap_bound_gamma_{gamma:.4f}", sys_g.gap,
               (1.0 - gamma ** 2) ** 0.5 - cfg.tolerances.tol_gap, ok, hard=False)

    lines = []
    for c in checks:
        status = "PASS" if c["passed"] else ("FAIL" if c["hard"] else "WARN")
        lines.append(f"{c['name']:<34} value={c['value']: .6e}  "
                     f"threshold={c['threshold']: .2e}  {status}")
    failed = [c for c in checks if c["hard"] and not c["passed"]]
    lines.append(f"{len(checks)} checks, {len(failed)} hard failures")
    for ln in lines:
        print(ln)
    out = cfg.output_dir
    write_text_report(os.path.join(out, "validation_report.txt"), lines)
    write_json_summary(os.path.join(out, "validation.json"), "validate",
                       cfg.to_dict(), config_digest(cfg), {"checks": checks})
    if failed:
        print(f"validation failed: {failed[0]['name']} "
              f"(value {failed[0]['value']:.3e}, threshold {failed[0]['threshold']:.1e})",
              file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# one-particle
# ---------------------------------------------------------------------------

def cmd_one_particle(cfg: RunConfig) -> int:
    import numpy as np

    from . import oneparticle as op
    from .grids import build_channel_grid
    from .report import gamma_tag, write_json_summary, write_table_csv

    grid = build_channel_grid(cfg.grid.n, cfg.grid.map_scale, cfg.grid.kappa)
    out = cfg.output_dir
    summary_rows = []
    summary_json = []
    for gamma in cfg.gamma_list:
        sys_g = op.assemble_system(grid, gamma)
        evals = sys_g.evals
        bound = evals[(evals > 0.0) & (evals < 1.0)]
        n_labeled = min(bound.size, 12)
        refs = {}
        for idx in range(n_labeled):
            refs[int(np.searchsorted(evals, bound[idx]))] = op.sommerfeld_energy(
                gamma, idx + 1, cfg.grid.kappa)
        rows = []
        for i, e in enumerate(evals):
            if i in refs:
                ref = refs[i]
                rows.append((i, float(e), ref, abs(e - ref) / ref))
            else:
                rows.append((i, float(e), "", ""))
        write_table_csv(os.path.join(out, f"one_particle_gamma_{gamma_tag(gamma)}.csv"),
                        ("index", "eigenvalue", "sommerfeld_reference", "rel_error"), rows)

        uni = float(np.linalg.norm(sys_g.u_gamma @ sys_g.u_gamma.conj().T - np.eye(grid.dim), 2))
        inter = float(np.linalg.norm(
            sys_g.u_gamma @ sys_g.p_plus_gamma - sys_g.p_plus_0 @ sys_g.u_gamma, 2))
        kato = op.check_kato(sys_g)
        dg = op.check_dgamma_bound(sys_g) if gamma > 0 else 0.0
        ground = float(op.positive_levels(sys_g, 1)[0])
        if gamma > 0:
            e_ref = op.sommerfeld_energy(gamma, 1, cfg.grid.kappa)
            s_rel = abs(ground - e_ref) / e_ref
        else:
            s_rel = 0.0
        summary_rows.append((gamma, ground, s_rel, uni, inter, kato, dg, sys_g.gap))
        summary_json.append({
            "gamma": gamma, "ground_energy": ground, "sommerfeld_rel_error": s_rel,
            "unitarity_residual": uni, "intertwining_residual": inter,
            "kato_margin": kato, "dgamma_margin": dg, "gap": sys_g.gap,
        })
    write_table_csv(os.path.join(out, "one_particle_summary.csv"),
                    ("gamma", "ground_energy", "sommerfeld_rel_error",
                     "unitarity_residual", "intertwining_residual",
                     "kato_margin", "dgamma_margin", "gap"), summary_rows)
    write_json_summary(os.path.join(out, "one_particle.json"), "one-particle",
                       cfg.to_dict(), config_digest(cfg), {"per_gamma": summary_json})
    return 0


# ---------------------------------------------------------------------------
# converge
# ---------------------------------------------------------------------------

def _build_shared(cfg: RunConfig):
    """Grid, base system, and decoupling bundle used by converge and nbody."""
    from .decoupling import build_decoupling_bundle, default_contour
    from .grids import build_channel_grid
    from .oneparticle import assemble_system

    grid = build_channel_grid(cfg.grid.n, cfg.grid.map_scale, cfg.grid.kappa)
    sys0 = assemble_system(grid, cfg.gamma_list[0])
    contour = default_contour(sys0, margin=cfg.contour.margin, m_nodes=cfg.contour.m_nodes)
    bundle = build_decoupling_bundle(sys0, contour=contour, order=cfg.series_order)
    return grid, sys0, bundle


def cmd_converge(cfg: RunConfig) -> int:
    from . import manybody as mb
    from .report import write_json_summary, write_report_csv

    require_convergence_window(cfg)
    grid, sys0, bundle = _build_shared(cfg)
    out = cfg.output_dir
    gammas = list(cfg.gamma_list)
    k_max = cfg.series_order
    results = {}

    cfg1 = mb.FurryConfig(n_particles=1, z_charge=cfg.nbody.z_charge,
                          n_plus=cfg.nbody.n_plus, antisymmetrize=False)
    fs1 = mb.assemble_furry_exact(sys0, cfg1, None, bundle)
    rows1 = mb.converge_main_theorem(fs1, gammas, k_max)
    write_report_csv(os.path.join(out, "converge_n1.csv"), rows1)
    results["n1"] = {"rows": rows1}

    n_particles = cfg.nbody.n_particles
    if n_particles >= 2:
        pair = mb.build_pair_interaction(grid)
        cfg_n = mb.FurryConfig(n_particles=n_particles, z_charge=cfg.nbody.z_charge,
                               n_plus=cfg.nbody.n_plus,
                               antisymmetrize=cfg.nbody.antisymmetrize)
        gate = mb.check_restriction_consistency(gammas[0] or GAMMA_CRITICAL / 2, cfg_n)
        if gate > 1e-8:
            from .errors import ConsistencyError
            raise ConsistencyError(
                f"restriction/conjugation order disagreement {gate:.3e} > 1e-8 "
                f"on the small cross-check instance")
        fs_n = mb.assemble_furry_exact(sys0, cfg_n, pair, bundle)
        rows_n = mb.converge_main_theorem(fs_n, gammas, k_max)
        write_report_csv(os.path.join(out, f"converge_n{n_particles}.csv"), rows_n)
        results[f"n{n_particles}"] = {"rows": rows_n, "restriction_gate": gate}

    write_json_summary(os.path.join(out, "converge.json"), "converge",
                       cfg.to_dict(), config_digest(cfg), results)
    return 0


# ---------------------------------------------------------------------------
# nbody
# ---------------------------------------------------------------------------

def cmd_nbody(cfg: RunConfig) -> int:
    import numpy as np

    from . import manybody as mb
    from .oneparticle import assemble_system, d_gamma
    from .report import gamma_tag, write_json_summary, write_table_csv
    from .series import series_eval, series_truncate

    require_convergence_window(cfg)
    grid, sys0, bundle = _build_shared(cfg)
    out = cfg.output_dir
    n_particles = cfg.nbody.n_particles
    cfg_n = mb.FurryConfig(n_particles=n_particles, z_charge=cfg.nbody.z_charge,
                           n_plus=cfg.nbody.n_plus,
                           antisymmetrize=cfg.nbody.antisymmetrize)
    pair = mb.build_pair_interaction(grid) if n_particles >= 2 else None
    per_gamma = []
    for gamma in cfg.gamma_list:
        sys_g = sys0 if gamma == sys0.gamma else assemble_system(grid, gamma)
        fs = mb.assemble_furry_exact(sys_g, cfg_n, pair, bundle)
        e_furry = np.sort(np.linalg.eigvalsh(fs.h_furry_exact))
        e_diag = np.sort(np.linalg.eigvalsh(fs.h_diag_exact))
        rows = [(i, float(a), float(b), float(abs(a - b)))
                for i, (a, b) in enumerate(zip(e_furry, e_diag))]
        write_table_csv(os.path.join(out, f"nbody_levels_gamma_{gamma_tag(gamma)}.csv"),
                        ("index", "furry_eigenvalue", "diag_eigenvalue", "abs_diff"), rows)

        series = fs.h_diag_series_N
        ground_exact = float(e_diag[0])
        series_rows = []
        for k in range(cfg.series_order + 1):
            hk = series_eval(series_truncate(series, k), gamma)
            gk = float(np.linalg.eigvalsh(0.5 * (hk + hk.conj().T))[0])
            series_rows.append((k, gk, abs(gk - ground_exact)))
        write_table_csv(os.path.join(out, f"nbody_series_gamma_{gamma_tag(gamma)}.csv"),
                        ("k", "series_ground_energy", "ground_error"), series_rows)

        diag = {
            "gamma": gamma,
            "dim": fs.dim,
            "ground_furry": float(e_furry[0]),
            "ground_diag": ground_exact,
            "spectrum_agreement": float(np.max(np.abs(e_furry - e_diag))),
            "positivity_floor": n_particles * float(np.sqrt(1.0 - gamma ** 2)),
            "min_eigenvalue": float(e_furry[0]),
            "kinetic_weight_value": mb.check_kinetic_weight_bound(fs),
            "kinetic_weight_limit": mb.kinetic_weight_limit(fs),
        }
        if n_particles >= 2:
            diag["form_bound_value"] = mb.check_form_bound(fs)
            diag["form_bound_limit"] = mb.form_bound_limit(fs)
        per_gamma.append(diag)
    write_json_summary(os.path.join(out, "nbody.json"), "nbody",
                       cfg.to_dict(), config_digest(cfg), {"per_gamma": per_gamma})
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
