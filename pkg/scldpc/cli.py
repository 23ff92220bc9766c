"""
scldpc command line.

    scldpc [--config FILE] [--out DIR] [--workers N] [-v] <command> [options]

Commands: sample-graph, simulate, mean-evo, cov-evo, theta, scaling-params,
predict, reproduce, init-config. Every command that writes results also writes
resolved_config.json next to them.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import ScalingLab
from .exceptions import ScldpcError, UnknownTargetError
from .models import ExperimentConfig, PredictionVariant, ScalingParams
from .util_deps.config import PACKAGE_VERSION
from .util_deps.ensemble import check_degree_histogram, design_rate
from .util_deps.formatters import format_manifest_table, write_csv, write_json, write_run_metadata
from .util_deps.reproduce import TARGETS, run_target
from .util_deps.scaling_law import predict_L_rescaling, predict_M_rescaling, published_scaling_params

logger = logging.getLogger("scldpc")


# =============================================================================
# ARGUMENTS
# =============================================================================

def _ensemble_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("ensemble")
    g.add_argument("--experiment", type=Path, help="ExperimentConfig JSON; flags below override it")
    g.add_argument("--l", type=int, help="variable degree")
    g.add_argument("--r", type=int, help="check degree")
    g.add_argument("--big-l", dest="L", type=int, help="chain length L")
    g.add_argument("--m", dest="M", type=int, help="variables per position M")
    g.add_argument("--w", type=int, help="stretch factor (1 = plain coupled ensemble)")
    g.add_argument("--seed", type=int, help="base seed")
    g.add_argument("--eps", type=float, nargs="+", help="channel erasure probabilities")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scldpc", description="Finite-length analysis of SC-LDPC codes on the BEC.")
    parser.add_argument("--config", type=Path, help="config.json layered over the user and project configs")
    parser.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    parser.add_argument("--workers", type=int, help="worker processes for Monte Carlo trials")
    parser.add_argument("--dtau", type=float, help="Euler step")
    parser.add_argument("--no-cache", action="store_true", help="bypass the result cache")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command", required=True)
    ens = _ensemble_parent()

    sub.add_parser("sample-graph", parents=[ens], help="sample one Tanner graph")

    p = sub.add_parser("simulate", parents=[ens], help="Monte Carlo block error of the peeling decoder")
    p.add_argument("--trials", type=int)

    p = sub.add_parser("mean-evo", parents=[ens], help="integrate the mean evolution")
    p.add_argument("--snapshots", type=float, nargs="*", default=[], help="tau values for p_u profiles")
    p.add_argument("--threshold", action="store_true", help="also compute the threshold")

    sub.add_parser("cov-evo", parents=[ens], help="integrate the covariance evolution")

    p = sub.add_parser("theta", parents=[ens], help="temporal covariance and its decay rate")
    p.add_argument("--zeta", type=float)
    p.add_argument("--samples", type=int, help="Gaussian draws N")

    p = sub.add_parser("scaling-params", parents=[ens], help="all scaling-law parameters of an ensemble")
    p.add_argument("--reference-eps", type=float)

    p = sub.add_parser("predict", parents=[ens], help="scaling-law block error curves")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--params", type=Path, help="ScalingParams JSON")
    src.add_argument("--published", action="store_true", help="use the published parameters")
    p.add_argument("--variant", choices=[v.value for v in PredictionVariant], default=PredictionVariant.FULL.value)
    p.add_argument("--m-sl", type=float, help="effective M inside the law")
    p.add_argument("--scale-l", type=float, nargs="*", default=[], help="chain-length what-if factors c")
    p.add_argument("--scale-m", type=float, nargs="*", default=[], help="M what-if factors k")

    p = sub.add_parser("reproduce", help="reproduce a table or figure and check it")
    p.add_argument("target", nargs="?", help="target id; omit to list them")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per point")

    p = sub.add_parser("init-config", help="write the default config.json")
    p.add_argument("path", nargs="?", type=Path)
    return parser


def _overrides(args: argparse.Namespace, experiment: Optional[ExperimentConfig]) -> dict:
    overrides: dict = {}
    if experiment is not None and "lab" in experiment.model_fields_set:
        overrides = experiment.lab.model_dump(mode="json", exclude_unset=True)
    if args.workers:
        overrides.setdefault("simulation", {})["workers"] = args.workers
    if getattr(args, "seed", None) is not None:
        overrides.setdefault("simulation", {})["base_seed"] = args.seed
    if args.dtau:
        overrides.setdefault("integration", {})["dtau"] = args.dtau
    if getattr(args, "samples", None):
        overrides.setdefault("temporal", {})["samples"] = args.samples
    if args.no_cache:
        overrides.setdefault("cache", {})["enabled"] = False
    return overrides


def _experiment(args: argparse.Namespace) -> Optional[ExperimentConfig]:
    if getattr(args, "experiment", None) is None and not hasattr(args, "l"):
        return None
    base: dict = {}
    if getattr(args, "experiment", None) is not None:
        base = ExperimentConfig.model_validate_json(args.experiment.read_text()).model_dump(exclude_unset=True)
    ensemble = {"l": 3, "r": 6, "L": 50, "M": 1000} | base.get("ensemble", {})
    for field in ("l", "r", "L", "M", "w"):
        value = getattr(args, field, None)
        if value is not None:
            ensemble[field] = value
    base["ensemble"] = ensemble
    if getattr(args, "eps", None):
        base["epsilons"] = args.eps
    if getattr(args, "seed", None) is not None:
        base["seed"] = args.seed
    if getattr(args, "trials", None):
        base["trials"] = args.trials
    if args.workers:
        base["workers"] = args.workers
    base["out_dir"] = str(args.out)
    return ExperimentConfig.model_validate(base)


def _epsilons(exp: ExperimentConfig, default: Sequence[float]) -> list[float]:
    return list(exp.epsilons) or list(default)


def _explicit(exp: ExperimentConfig, field: str):
    """The field when given on the command line or in the experiment file, else None (config decides)."""
    return getattr(exp, field) if field in exp.model_fields_set else None


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_sample_graph(lab: ScalingLab, exp: ExperimentConfig, out: Path) -> int:
    spec = exp.ensemble
    graph = lab.sample_graph(spec, _explicit(exp, "seed"))
    histogram = [check_degree_histogram(graph, u).tolist() for u in range(1, spec.D + 1)]
    summary = {
        "spec": spec.model_dump(), "seed": graph.seed, "n_variables": graph.n_variables,
        "n_checks": graph.n_checks, "nonempty_checks": int(np.count_nonzero(graph.check_degrees())),
        "check_degree_histogram": histogram,
    }
    if not spec.stretched:
        summary["design_rate"] = design_rate(spec)
    write_json(out / "graph.json", summary)
    var_pos = np.repeat(np.arange(1, spec.L + 1), spec.M)
    write_csv(out / "edges.csv", ("variable", "variable_position", "check", "check_position"),
              ((v, var_pos[v], c, int(graph.check_position[c])) for v in range(graph.n_variables)
               for c in graph.var_checks[v]))
    print(f"{spec.label}: {graph.n_variables} variables, {graph.n_checks} checks "
          f"({summary['nonempty_checks']} nonempty)")
    return 0


def cmd_simulate(lab: ScalingLab, exp: ExperimentConfig, out: Path) -> int:
    spec = exp.ensemble
    trials, seed, workers = (_explicit(exp, f) for f in ("trials", "seed", "workers"))
    results = [lab.simulate(spec, eps, trials, seed, workers, progress=True) for eps in _epsilons(exp, [0.44])]
    write_csv(out / "monte_carlo.csv",
              ("epsilon", "trials", "failures", "p_b", "ci_low", "ci_high"),
              ((m.epsilon, m.trials, m.failures, m.p_b, m.ci_low, m.ci_high) for m in results))
    write_json(out / "monte_carlo.json", [m.model_dump(mode="json") for m in results])
    for m in results:
        print(f"{spec.label} eps={m.epsilon:g}: P_B={m.p_b:.4g} [{m.ci_low:.3g}, {m.ci_high:.3g}] "
              f"({m.failures}/{m.trials})")
    return 0


def cmd_mean_evo(lab: ScalingLab, exp: ExperimentConfig, out: Path, snapshots: Sequence[float],
                 with_threshold: bool) -> int:
    spec = exp.ensemble
    summary: dict = {"spec": spec.model_dump(), "runs": []}
    for eps in _epsilons(exp, [0.45]):
        run = lab.mean_evolution(spec, eps, snapshot_taus=snapshots)
        write_csv(out / f"mean_eps{eps:g}.csv", ("tau", "r1"), zip(run.tau, run.r1))
        if run.p_profile is not None:
            write_csv(out / f"profile_eps{eps:g}.csv", ("tau", "u", "p_u"),
                      ((tau, u + 1, p) for tau, row in zip(run.profile_tau, run.p_profile) for u, p in enumerate(row)))
        summary["runs"].append({"epsilon": eps, "final_tau": run.final_tau, "decoded": run.decoded,
                                "stalled": run.stalled, "remaining": run.remaining,
                                "clamp_events": run.clamp_events})
        print(f"{spec.label} eps={eps:g}: {'decoded' if run.decoded else 'stalled' if run.stalled else 'stopped'} "
              f"at tau={run.final_tau:.3f}")
    if with_threshold:
        summary["epsilon_th"] = lab.threshold(spec)
        print(f"{spec.label}: threshold {summary['epsilon_th']:.5f}")
    write_json(out / "mean_evolution.json", summary)
    return 0


def cmd_cov_evo(lab: ScalingLab, exp: ExperimentConfig, out: Path) -> int:
    spec = exp.ensemble
    records = []
    for eps in _epsilons(exp, [0.45]):
        run = lab.covariance(spec, eps)
        write_csv(out / f"delta1_eps{eps:g}.csv", ("tau", "r1", "delta1"), zip(run.tau, run.r1, run.delta1))
        records.append({"epsilon": eps, "delta1_star": run.delta1_star, "tau_star": run.tau_star,
                        "min_eigenvalue": run.min_eigenvalue, "clamp_events": run.clamp_events})
        print(f"{spec.label} eps={eps:g}: delta1*={run.delta1_star}")
    write_json(out / "covariance.json", {"spec": spec.model_dump(), "runs": records})
    return 0


def cmd_theta(lab: ScalingLab, exp: ExperimentConfig, out: Path, zeta: Optional[float]) -> int:
    spec = exp.ensemble
    eps = exp.epsilons[0] if exp.epsilons else None
    estimate = lab.theta(spec, eps, zeta=zeta, seed=_explicit(exp, "seed"))
    write_csv(out / "phi.csv", ("tau", "phi", "normalized"), zip(estimate.tau, estimate.phi, estimate.normalized))
    write_json(out / "theta.json", estimate.model_dump(mode="json"))
    print(f"{spec.label}: theta={estimate.theta:.4f} (zeta={estimate.zeta:g}, N={estimate.N})")
    return 0


def cmd_scaling_params(lab: ScalingLab, exp: ExperimentConfig, out: Path, reference_eps: Optional[float]) -> int:
    params = lab.scaling_params(exp.ensemble, reference_eps, _explicit(exp, "seed"))
    write_json(out / "scaling_params.json", params.model_dump(mode="json") | {"alpha": params.alpha})
    print(params.model_dump_json(indent=2))
    return 0


def cmd_predict(lab: ScalingLab, exp: ExperimentConfig, out: Path, args: argparse.Namespace) -> int:
    spec = exp.ensemble
    if args.params:
        params = ScalingParams.model_validate_json(args.params.read_text())
    elif args.published:
        params = published_scaling_params(spec.l, spec.r, spec.L)
    elif exp.scaling is not None:
        params = exp.scaling
    else:
        raise ValueError("predict needs --params FILE, --published or a 'scaling' block in the experiment")

    variant = PredictionVariant(args.variant)
    m_sl = args.m_sl if args.m_sl is not None else exp.m_sl
    epsilons = _epsilons(exp, np.round(np.arange(0.40, params.epsilon_th, 0.005), 4))
    rows = []
    curves = []
    for L in exp.L_values or [spec.L]:
        for M in exp.M_values or [spec.M]:
            curve = lab.predict(params, L, M, epsilons, variant, m_sl)
            curves.append(curve)
            rows += [(L, M, m_sl or "", variant.value, e, p) for e, p in zip(curve.epsilon, curve.p_b)]
            for c in args.scale_l:
                rows += [(c * L, M, m_sl or "", f"what-if L x{c:g}", e,
                          predict_L_rescaling(params, p, L, c, e)) for e, p in zip(curve.epsilon, curve.p_b)]
            for k in args.scale_m:
                rows += [(L, k * M, m_sl or "", f"what-if M x{k:g}", e,
                          predict_M_rescaling(params, p, m_sl or M, k, e)) for e, p in zip(curve.epsilon, curve.p_b)]
    write_csv(out / "prediction.csv", ("L", "M", "m_sl", "variant", "epsilon", "p_b"), rows)
    write_json(out / "prediction.json", [c.model_dump(mode="json") for c in curves])
    for c in curves:
        for caveat in c.caveats:
            logger.info("%s", caveat)
    print(f"wrote {len(rows)} points for {len(curves)} curve(s) to {out / 'prediction.csv'}")
    return 0


def cmd_reproduce(lab: ScalingLab, target: str, trials: Optional[int], out: Path) -> int:
    manifest = run_target(target, lab, out, trials)
    print(format_manifest_table(manifest))
    return 0 if manifest.passed else 1


# =============================================================================
# ENTRY POINT
# =============================================================================

def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "init-config":
        path = ScalingLab.init_config(str(args.path) if args.path else None)
        print(f"config written to {path}")
        return 0

    if args.command == "reproduce":
        if not args.target:
            print("\n".join(TARGETS))
            return 0
        if args.target not in TARGETS:
            raise UnknownTargetError(args.target, list(TARGETS))

    exp = _experiment(args)
    lab = ScalingLab(config_file=str(args.config) if args.config else None, overrides=_overrides(args, exp))
    out = args.out
    run_dir = out / (args.target if args.command == "reproduce" else args.command)
    run_dir.mkdir(parents=True, exist_ok=True)
    resolved = {"command": args.command, "lab": lab.config.model_dump(mode="json"),
                "experiment": exp.model_dump(mode="json") if exp else None}
    write_run_metadata(run_dir, resolved, PACKAGE_VERSION, {"base_seed": lab.config.simulation.base_seed})

    if args.command == "sample-graph":
        return cmd_sample_graph(lab, exp, run_dir)
    if args.command == "simulate":
        return cmd_simulate(lab, exp, run_dir)
    if args.command == "mean-evo":
        return cmd_mean_evo(lab, exp, run_dir, args.snapshots, args.threshold)
    if args.command == "cov-evo":
        return cmd_cov_evo(lab, exp, run_dir)
    if args.command == "theta":
        return cmd_theta(lab, exp, run_dir, args.zeta)
    if args.command == "scaling-params":
        return cmd_scaling_params(lab, exp, run_dir, args.reference_eps)
    if args.command == "predict":
        return cmd_predict(lab, exp, run_dir, args)
    return cmd_reproduce(lab, args.target, args.trials, out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return _dispatch(args)
    except (ScldpcError, ValueError) as e:
        logger.debug("command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
