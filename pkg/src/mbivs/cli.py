"""Command line interface.

Subcommands: ``simulate`` writes one scenario dataset, ``fit`` runs the
sampler on a dataset directory, ``infer`` turns saved chains into a
selection report, ``bench`` replicates a scenario end to end, and
``validate`` runs a self-check suite. Every command that writes a directory
drops a manifest.json recording how it was produced.

Exit codes: 0 success, 2 usage error, 3 validation failure (bad inputs or a
failed validate suite), 4 numerical breakdown, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BenchmarkConfig, headline_level, run_benchmark
from .errors import MbivsError, NumericalBreakdown, ValidationError
from .geweke import geweke_validation, test_priors
from .gibbs import SamplerConfig, run_chains
from .inference import build_report
from .io import (
    load_dataset,
    load_samples,
    prior_config_from_json,
    read_vector_csv,
    save_dataset,
    save_report,
    save_samples,
    write_manifest,
)
from .model import AnnotationPriorConfig, GroupedDesign, PriorConfig, concat_samples
from .oracle import inclusion_probability, numeric_median, threshold_estimate
from .rng import (
    normal_cdf,
    sample_bernoulli_logodds,
    sample_beta,
    sample_inverse_gamma,
    sample_inverse_wishart,
    sample_truncated_normal,
    substream,
)
from .simdata import ScenarioSpec, scenario_spec, simulate_scenario

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4
EXIT_IO = 5

_SCENARIOS = ("I", "II", "III", "IV", "V")

# Substream roles, mirroring bench: (seed, replicate, role).
_ROLE_DATA = 0
_ROLE_PERMUTE = 2


def _resolve_spec(args) -> ScenarioSpec:
    if args.scenario is not None:
        return scenario_spec(args.scenario)
    return ScenarioSpec.from_json(Path(args.spec_file).read_text())


def _resolve_threads(value: int | None) -> int:
    if value is None:
        env = os.environ.get("MBIVS_THREADS")
        if env is None:
            return 1
        try:
            value = int(env)
        except ValueError:
            raise ValidationError(f"MBIVS_THREADS must be an integer, got {env!r}") from None
    if value < 1:
        raise ValidationError("thread count must be >= 1")
    return value


# -- subcommands ---------------------------------------------------------------


def _cmd_simulate(args) -> int:
    spec = _resolve_spec(args)
    data = simulate_scenario(spec, substream(args.seed, args.replicate, _ROLE_DATA))
    files = save_dataset(args.out, data)
    write_manifest(
        args.out,
        "simulate",
        params={
            "scenario": args.scenario,
            "spec_file": args.spec_file,
            "seed": args.seed,
            "replicate": args.replicate,
        },
        outputs=files,
    )
    print(
        f"simulated scenario {spec.name}: n={spec.n} p={spec.p} q={spec.q} "
        f"causal={len(spec.effect_sizes)} -> {args.out}"
    )
    return EXIT_OK


def _cmd_fit(args) -> int:
    design, responses, _ = load_dataset(args.data, annotations_path=args.annotations)
    priors = (
        prior_config_from_json(Path(args.priors).read_text())
        if args.priors is not None
        else PriorConfig()
    )
    if args.annotations is not None or args.mu_d is not None:
        mu_d = args.mu_d if args.mu_d is not None else 0.0
        priors = PriorConfig(
            beta_a=priors.beta_a,
            beta_b=priors.beta_b,
            s2_shape=priors.s2_shape,
            s2_rate=priors.s2_rate,
            iw_df=priors.iw_df,
            iw_scale=priors.iw_scale,
            annotation=AnnotationPriorConfig(mu_d=mu_d),
        )
    config = SamplerConfig(
        iterations=args.iterations,
        burn_in=args.burn_in,
        thin=args.thin,
        chains=args.chains,
        seed=args.seed,
    )
    chains = run_chains(design, responses, priors, config)
    outputs = []
    for c, samples in enumerate(chains):
        sub = f"chain_{c:02d}"
        save_samples(Path(args.out) / sub, samples)
        outputs.append(sub)
        print(
            f"{sub}: {samples.n_draws} retained draws, "
            f"mean active entries {samples.active.mean():.1f}"
        )
    write_manifest(
        args.out,
        "fit",
        params={
            "data": str(args.data),
            "iterations": args.iterations,
            "burn_in": args.burn_in,
            "thin": args.thin,
            "chains": args.chains,
            "seed": args.seed,
            "annotations": args.annotations,
            "mu_d": args.mu_d,
            "priors": args.priors,
        },
        inputs=[str(args.data)],
        outputs=outputs,
    )
    return EXIT_OK


def _chain_dirs(samples_dir: Path) -> list[Path]:
    dirs = sorted(d for d in samples_dir.glob("chain_*") if d.is_dir())
    if dirs:
        return dirs
    if (samples_dir / "meta.json").exists():
        return [samples_dir]
    raise ValidationError(f"no chain directories under {samples_dir}")


def _cmd_infer(args) -> int:
    chains = [load_samples(d) for d in _chain_dirs(Path(args.samples))]
    samples = concat_samples(chains)
    groups = None
    if args.data is not None:
        groups = read_vector_csv(Path(args.data) / "groups.csv").astype(np.int64)
    report = build_report(
        samples,
        args.alpha,
        substream(args.seed, 0, _ROLE_PERMUTE),
        n_permutations=args.permutations,
    )
    save_report(args.out, report, groups)
    write_manifest(
        args.out,
        "infer",
        params={
            "samples": str(args.samples),
            "data": args.data,
            "alpha": args.alpha,
            "permutations": args.permutations,
            "seed": args.seed,
        },
        inputs=[str(args.samples)],
        outputs=["report.json", "pip_table.csv", "subsets.csv"],
    )
    print(f"{samples.n_draws} pooled draws, {report.selected.size} predictors selected")
    for j in sorted(report.best):
        resp = ",".join(str(k + 1) for k in report.best[j])
        print(f"  predictor {j + 1}: responses {{{resp}}} (subset PIP {report.best_pip[j]:.3f})")
    return EXIT_OK


def _cmd_bench(args) -> int:
    spec = _resolve_spec(args)
    threads = _resolve_threads(args.threads)
    config = BenchmarkConfig(
        n_replicates=args.replicates,
        iterations=args.iterations,
        burn_in=args.burn_in,
        thin=args.thin,
        seed=args.seed,
        alpha=args.alpha,
        n_permutations=args.permutations,
    )
    result = run_benchmark(spec, config, out_dir=args.out, n_jobs=threads)
    write_manifest(
        args.out,
        "bench",
        params={
            "scenario": args.scenario,
            "spec_file": args.spec_file,
            "replicates": args.replicates,
            "iterations": args.iterations,
            "burn_in": args.burn_in,
            "thin": args.thin,
            "seed": args.seed,
            "alpha": args.alpha,
            "permutations": args.permutations,
            "threads": threads,
        },
        outputs=["replicates.csv", "summary.csv"],
    )
    level = headline_level(spec.name)
    print(f"scenario {spec.name}: {config.n_replicates} replicates, {level}-level headline")
    short = "pred" if level == "predictor" else "entry"
    for metric in (f"auc_{short}", f"fdr_{short}", f"for_{short}", "mse_ratio", "subset_exact"):
        mean, se = result.summary[metric]
        print(f"  {metric:13s} {mean:8.4f} (se {se:.4f})")
    return EXIT_OK


# -- validation suites ---------------------------------------------------------


def _suite_oracle(seed: int, lines: list[str]) -> bool:
    del seed  # deterministic grid
    beta = np.linspace(-3.0, 3.0, 41)
    grid = [
        (b, n, s2, pi, skk)
        for b in beta
        for n in (5, 50, 500, 5000)
        for s2 in (0.05, 1.0, 25.0)
        for pi in (0.0, 0.1, 0.5, 0.9, 1.0)
        for skk in (0.5, 1.0, 4.0)
    ]
    b_arr, n_arr, s2_arr, pi_arr, skk_arr = (np.asarray(v) for v in zip(*grid))
    analytic = threshold_estimate(b_arr, n_arr, s2_arr, pi_arr, skk_arr)
    numeric = numeric_median(b_arr, n_arr, s2_arr, pi_arr, skk_arr)
    worst = float(np.max(np.abs(analytic - numeric)))
    ok_grid = worst <= 1e-6
    lines.append(f"median agreement over {len(grid)} points: max |diff| {worst:.3g} "
                 f"{'ok' if ok_grid else 'FAIL'}")
    ref = 1.0 / (1.0 + np.sqrt(101.0))
    got = float(inclusion_probability(0.0, 100, 1.0, 0.5))
    ok_ref = abs(got - ref) <= 1e-12
    lines.append(f"null-point inclusion probability {got:.6f} vs {ref:.6f} "
                 f"{'ok' if ok_ref else 'FAIL'}")
    return ok_grid and ok_ref


def _suite_distributions(seed: int, lines: list[str]) -> bool:
    ok = True

    def check(name: str, got: float, want: float, tol: float) -> None:
        nonlocal ok
        good = abs(got - want) <= tol
        ok = ok and good
        lines.append(f"{name}: {got:.5f} vs {want:.5f} (tol {tol:g}) {'ok' if good else 'FAIL'}")

    rng = substream(seed, 90, 0)
    q, df = 4, 12.0
    scale = np.diag(np.arange(1.0, q + 1.0))
    draws = np.stack([sample_inverse_wishart(rng, df, scale) for _ in range(20000)])
    want = scale / (df - q - 1)
    err = float(np.max(np.abs(draws.mean(axis=0) - want)))
    check("inverse-wishart mean (max entry error)", err, 0.0, 0.02)

    ig = sample_inverse_gamma(substream(seed, 90, 1), 3.0, 2.0, size=200000)
    check("inverse-gamma(3, 2) mean", float(ig.mean()), 1.0, 0.01)

    be = sample_beta(substream(seed, 90, 2), 2.0, 5.0, size=200000)
    check("beta(2, 5) mean", float(be.mean()), 2.0 / 7.0, 0.005)

    rng_t = substream(seed, 90, 3)
    tn = np.array([sample_truncated_normal(rng_t, 0.0, 1.0, lower=3.0) for _ in range(50000)])
    phi3 = np.exp(-4.5) / np.sqrt(2 * np.pi)
    check("truncated normal mean (lower 3)", float(tn.mean()), phi3 / normal_cdf(-3.0), 0.01)
    far = np.array([sample_truncated_normal(rng_t, 0.0, 1.0, lower=25.0) for _ in range(20000)])
    check("truncated normal mean (lower 25)", float(far.mean()), 25.0399, 0.005)

    rng_b = substream(seed, 90, 4)
    bern = np.asarray([sample_bernoulli_logodds(rng_b, 0.0) for _ in range(100000)])
    check("bernoulli(logodds 0) frequency", float(bern.mean()), 0.5, 0.01)
    sure = sample_bernoulli_logodds(rng_b, np.array([np.inf, -np.inf]))
    good = sure[0] == 1 and sure[1] == 0
    ok = ok and good
    lines.append(f"bernoulli at +-inf logodds: {sure.tolist()} {'ok' if good else 'FAIL'}")
    return ok


def _suite_geweke(seed: int, draws: int, lines: list[str]) -> bool:
    rng = substream(seed, 91, 0)
    n, p, q = 20, 4, 2
    x = rng.normal(size=(n, p))
    design = GroupedDesign(x, np.array([1, 1, 2, 2]))
    report = geweke_validation(design, q, test_priors(q), draws, substream(seed, 91, 1))
    lines.extend(report.lines())
    lines.append(f"max |z| = {report.max_abs_z:.2f} (threshold 4.0)")
    return report.passed()


def _cmd_validate(args) -> int:
    lines: list[str] = []
    if args.suite == "oracle":
        passed = _suite_oracle(args.seed, lines)
    elif args.suite == "distributions":
        passed = _suite_distributions(args.seed, lines)
    else:
        passed = _suite_geweke(args.seed, args.draws, lines)
    for line in lines:
        print(line)
    print(f"suite {args.suite}: {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_VALIDATION


# -- parser --------------------------------------------------------------------


def _add_spec_source(parser: argparse.ArgumentParser) -> None:
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", choices=_SCENARIOS, help="named benchmark scenario")
    src.add_argument("--spec-file", help="path to a scenario JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbivs",
        description="Multivariate Bayesian indicator variable selection.",
    )
    parser.add_argument("--version", action="version", version=f"mbivs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write one simulated scenario dataset")
    _add_spec_source(sim)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--replicate", type=int, default=0, help="replicate index keying the data stream")
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(handler=_cmd_simulate)

    fit = sub.add_parser("fit", help="run the Gibbs sampler on a dataset directory")
    fit.add_argument("--data", required=True, help="dataset directory (x.csv, y.csv, groups.csv)")
    fit.add_argument("--out", required=True, help="output directory for chains")
    fit.add_argument("--iterations", type=int, default=7500)
    fit.add_argument("--burn-in", type=int, default=2500)
    fit.add_argument("--thin", type=int, default=1)
    fit.add_argument("--chains", type=int, default=1)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--priors", help="prior configuration JSON file")
    fit.add_argument("--annotations", help="annotation CSV enabling the probit inclusion prior")
    fit.add_argument("--mu-d", type=float, default=None, dest="mu_d",
                     help="prior mean of the annotation effect (enables the probit prior)")
    fit.set_defaults(handler=_cmd_fit)

    inf = sub.add_parser("infer", help="build a selection report from saved chains")
    inf.add_argument("--samples", required=True, help="fit output directory (or one chain directory)")
    inf.add_argument("--out", required=True, help="output directory for the report")
    inf.add_argument("--data", help="dataset directory, for group labels in pip_table.csv")
    inf.add_argument("--alpha", type=float, default=0.1, help="BFDR level")
    inf.add_argument("--permutations", type=int, default=1000)
    inf.add_argument("--seed", type=int, default=0)
    inf.set_defaults(handler=_cmd_infer)

    ben = sub.add_parser("bench", help="replicate a scenario end to end")
    _add_spec_source(ben)
    ben.add_argument("--replicates", type=int, default=20)
    ben.add_argument("--iterations", type=int, default=3000)
    ben.add_argument("--burn-in", type=int, default=1000)
    ben.add_argument("--thin", type=int, default=1)
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--alpha", type=float, default=0.1)
    ben.add_argument("--permutations", type=int, default=1000)
    ben.add_argument("--threads", type=int, default=None,
                     help="worker processes (default: MBIVS_THREADS or 1)")
    ben.add_argument("--out", required=True, help="output directory")
    ben.set_defaults(handler=_cmd_bench)

    val = sub.add_parser("validate", help="run a self-check suite")
    val.add_argument("--suite", required=True, choices=("oracle", "distributions", "geweke"))
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--draws", type=int, default=20000, help="draws for the geweke suite")
    val.set_defaults(handler=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except NumericalBreakdown as exc:
        print(f"mbivs: numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MbivsError, ValueError) as exc:
        print(f"mbivs: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"mbivs: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
