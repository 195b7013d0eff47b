"""Command-line experiment runner.

Subcommands: ``theory`` (closed-form constants as JSON), ``simulate`` (path
CSV + manifest), ``tailproc`` / ``ei`` / ``cluster`` / ``anticluster``
(simulate + estimate end-to-end, manifest with verdicts against theory
targets, CSV curves and PNG figures), and ``selftest`` (reduced-scale
property suite).

Exit codes: 0 ok, 2 bad usage, 3 domain error, 4 strict-mode check failure.
The default output directory is ``$STABREG_OUT`` or ``./stabreg-out``.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import itertools
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, extremes, plots
from .manifest import ExperimentManifest, load_manifest, result_entry
from .pathsim import (
    SeriesConfig,
    default_truncation,
    elementary_symmetric,
    iter_ensemble,
    replicate_rng,
    simulate_ensemble,
    simulate_path,
    write_ensemble_csv,
)
from .renewal import (
    DiscreteParetoLaw,
    renewal_mass,
    sample_renewal_path,
    sample_window_hitting_set,
    window_weight,
)
from .theory import (
    SUB_CRITICAL,
    BracketToleranceError,
    ModelParams,
    classify_regime,
    extremal_index,
    normalizer_b,
    normalizer_b_critical,
    shape_D,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_STRICT = 4

DOMAIN_ERRORS = (
    ValueError,
    OverflowError,
    BracketToleranceError,
    extremes.InsufficientSamplesError,
)


def parse_beta(text: str):
    """Beta as a decimal or an exact ratio string such as "1/2"."""
    if "/" in text:
        return Fraction(text)
    return float(text)


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _outdir(args, experiment_id: str) -> Path:
    base = Path(args.out or os.environ.get("STABREG_OUT", "stabreg-out"))
    d = base / experiment_id
    d.mkdir(parents=True, exist_ok=True)
    return d


def _params(args) -> ModelParams:
    return ModelParams(alpha=args.alpha, beta=parse_beta(args.beta), p=args.p)


def _config(args, params, law) -> SeriesConfig:
    trunc = args.truncation
    if trunc is None:
        trunc = default_truncation(params, law, max(args.window, 2))
    if args.min_truncation:
        trunc = max(trunc, args.min_truncation)
    return SeriesConfig(params=params, window=args.window, truncation=trunc, seed=args.seed)


def within_3sigma(phat: float, target: float, n: int) -> bool:
    """Binomial three-sigma band around the target, with a 1/n continuity slack."""
    var = max(target * (1.0 - target), phat * (1.0 - phat)) / n
    return abs(phat - target) <= 3.0 * math.sqrt(var) + 1.0 / n


def _finish(args, manifest: ExperimentManifest, outdir: Path) -> int:
    manifest.finished = _now()
    manifest.save(outdir / "manifest.json")
    print(json.dumps({"experiment": manifest.experiment_id, "dir": str(outdir),
                      "verdicts": manifest.verdicts}, indent=2))
    if getattr(args, "strict", False) and "fail" in manifest.verdicts:
        return EXIT_STRICT
    return EXIT_OK


def _manifest(experiment_id: str, config: dict) -> ExperimentManifest:
    return ExperimentManifest(
        experiment_id=experiment_id,
        tool_version=__version__,
        started=_now(),
        finished="",
        config=config,
        results=[],
    )


# ---------------------------------------------------------------- subcommands


def cmd_theory(args) -> int:
    params = _params(args)
    law = DiscreteParetoLaw(params.beta_float)
    report = classify_regime(params)
    constants = extremal_index(params, law, tol=args.tol)
    out = {
        "alpha": params.alpha,
        "beta": str(params.beta),
        "p": params.p,
        "beta_p": float(report.beta_p),
        "regime": report.regime,
        "q_beta_p": report.q_beta_p,
        "shape_D": constants.shape,
        "candidate_ei_bracket": (
            [constants.q_lower, constants.q_upper] if constants.q_lower is not None else None
        ),
        "vartheta": constants.vartheta,
        "theta": constants.theta,
        "b_n": {str(args.n): normalizer_b(params, args.n)},
    }
    if report.regime == "critical":
        out["b_n_critical"] = {str(args.n): normalizer_b_critical(params, max(args.n, 16))}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = _params(args)
    law = DiscreteParetoLaw(params.beta_float)
    config = _config(args, params, law)
    outdir = _outdir(args, f"simulate-seed{args.seed}")
    paths = simulate_ensemble(config, law, args.replicates)
    csv_path = outdir / "paths.csv"
    write_ensemble_csv(config, paths, csv_path)
    manifest = _manifest("simulate-seed%d" % args.seed, _config_echo(config, args.replicates))
    manifest.results.append(
        result_entry("truncation_bound", paths[0].truncation_bound, None, None, "diagnostic")
    )
    return _finish(args, manifest, outdir)


def _config_echo(config: SeriesConfig, replicates: int, **extra) -> dict:
    echo = {
        "alpha": config.params.alpha,
        "beta": str(config.params.beta),
        "p": config.params.p,
        "window": config.window,
        "truncation": config.truncation,
        "seed": config.seed,
        "replicates": replicates,
        "rng_derivation": "pcg64-seedseq-v1",
    }
    echo.update(extra)
    return echo


def cmd_tailproc(args) -> int:
    params = _params(args)
    law = DiscreteParetoLaw(params.beta_float)
    config = _config(args, params, law)
    lags = list(range(0, args.max_lag + 1))
    est = extremes.estimate_tail_process(
        iter_ensemble(config, law, args.replicates),
        quantile=args.quantile,
        lags=lags,
        delta=args.delta,
    )
    u = renewal_mass(law, max(lags))
    targets = u[lags] ** params.p

    outdir = _outdir(args, f"tailproc-seed{args.seed}")
    manifest = _manifest(
        f"tailproc-seed{args.seed}",
        _config_echo(config, args.replicates, quantile=args.quantile, delta=args.delta),
    )
    for i, k in enumerate(lags):
        ok = within_3sigma(est.mass_plus1[i], targets[i], est.count)
        manifest.results.append(
            result_entry(f"mass_plus1_lag{k}", float(est.mass_plus1[i]), None,
                         float(targets[i]), "pass" if ok else "fail")
        )
        ok0 = within_3sigma(est.mass_minus1[i], 0.0, est.count)
        manifest.results.append(
            result_entry(f"mass_minus1_lag{k}", float(est.mass_minus1[i]), None, 0.0,
                         "pass" if ok0 else "fail")
        )
    with open(outdir / "tailproc.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lag", "mass_plus1", "mass_minus1", "mass_zero", "residual", "target"])
        for i, k in enumerate(lags):
            w.writerow([k, est.mass_plus1[i], est.mass_minus1[i], est.mass_zero[i],
                        est.residual[i], targets[i]])
    plots.save_tail_process_figure(est, targets, outdir / "tailproc.png")
    return _finish(args, manifest, outdir)


def cmd_ei(args) -> int:
    params = _params(args)
    law = DiscreteParetoLaw(params.beta_float)
    if args.truncation is None:
        # block maxima are the most truncation-sensitive statistic, so this
        # experiment defaults to the upper end of the admissible truncation
        # window (w_m^2/m) rather than the geometric-mean default
        w = window_weight(law, max(args.window, 2))
        args.truncation = max(params.p + 1, round(w * w / max(args.window, 2)))
    config = _config(args, params, law)
    levels = [float(x) for x in args.levels.split(",")]
    maxima = extremes.block_maxima(iter_ensemble(config, law, args.replicates))
    bn = normalizer_b(params, config.window)
    est = extremes.estimate_extremal_index(maxima, bn, params.alpha, levels)

    constants = extremal_index(params, law, tol=args.tol)
    target = constants.theta

    # calibration: i.i.d. standard alpha-Frechet block maxima must give theta = 1.
    # The control uses its own levels around the unit scale, where the exact
    # Frechet cdf exp(-x^-alpha) is informative at the given replicate count.
    rng = replicate_rng(config.seed, 2**32)
    frechet = (-np.log(rng.random(args.replicates))) ** (-1.0 / params.alpha)
    control_levels = [float(x) for x in args.control_levels.split(",")]
    control = extremes.estimate_extremal_index(frechet, 1.0, params.alpha, control_levels)

    ok = abs(est.pooled - target) <= 0.15 * target or est.ci_low <= target <= est.ci_high
    ok_control = abs(control.pooled - 1.0) <= 0.10

    outdir = _outdir(args, f"ei-seed{args.seed}")
    manifest = _manifest(
        f"ei-seed{args.seed}", _config_echo(config, args.replicates, levels=levels)
    )
    manifest.results.append(
        result_entry("pooled_theta", est.pooled, [est.ci_low, est.ci_high], target,
                     "pass" if ok else "fail")
    )
    manifest.results.append(
        result_entry("iid_control_theta", control.pooled,
                     [control.ci_low, control.ci_high], 1.0,
                     "pass" if ok_control else "fail")
    )
    with open(outdir / "ei.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "theta_hat"])
        for x, t in zip(est.levels, est.theta_by_level):
            w.writerow([x, t])
    plots.save_ei_figure(est, target, outdir / "ei.png")
    return _finish(args, manifest, outdir)


def cmd_cluster(args) -> int:
    params = _params(args)
    law = DiscreteParetoLaw(params.beta_float)
    config = _config(args, params, law)
    paths = simulate_ensemble(config, law, args.replicates)
    absmax = np.array([float(np.max(np.abs(p.values))) for p in paths])
    level = float(np.quantile(absmax, args.quantile))
    est = extremes.estimate_cluster_law(paths, level)

    constants = extremal_index(params, law, tol=args.tol)
    target_mean = 1.0 / constants.vartheta
    sizes = np.concatenate(
        [np.full(c, k, dtype=float) for k, c in est.size_histogram.items()]
    )
    sigma = float(np.std(sizes, ddof=1)) / math.sqrt(est.n_blocks)
    ok = abs(est.mean_cluster_size - target_mean) <= 3.0 * sigma

    outdir = _outdir(args, f"cluster-seed{args.seed}")
    manifest = _manifest(
        f"cluster-seed{args.seed}",
        _config_echo(config, args.replicates, level=level, level_quantile=args.quantile),
    )
    manifest.results.append(
        result_entry("mean_cluster_size", est.mean_cluster_size,
                     [est.mean_cluster_size - 3 * sigma, est.mean_cluster_size + 3 * sigma],
                     target_mean, "pass" if ok else "fail")
    )
    manifest.results.append(
        result_entry("common_sign_frequency", est.common_sign_frequency, None, 1.0,
                     "diagnostic")
    )
    manifest.results.append(
        result_entry("positive_sign_frequency", est.positive_sign_frequency, None, 0.5,
                     "pass" if within_3sigma(est.positive_sign_frequency, 0.5,
                                             max(est.n_blocks, 1)) else "fail")
    )
    with open(outdir / "cluster.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["size", "count"])
        for k in sorted(est.size_histogram):
            w.writerow([k, est.size_histogram[k]])
    plots.save_cluster_figure(est, target_mean, outdir / "cluster.png")
    return _finish(args, manifest, outdir)


def cmd_anticluster(args) -> int:
    params = _params(args)
    law = DiscreteParetoLaw(params.beta_float)
    # block length r = floor(c log b_n) at a notional path length n; only the
    # centered window of 2r+1 sites is simulated
    r = int(math.floor(args.schedule_c * math.log(normalizer_b(params, args.notional_n))))
    if r < 2:
        raise ValueError("schedule gives r < 2; increase --notional-n")
    args.window = 2 * r
    config = _config(args, params, law)
    paths = simulate_ensemble(config, law, args.replicates)
    ells, probs, level, count = extremes.anti_clustering_curve(
        paths, center=r, ell_grid=range(1, r + 1), quantile=args.quantile
    )

    outdir = _outdir(args, f"anticluster-seed{args.seed}")
    manifest = _manifest(
        f"anticluster-seed{args.seed}",
        _config_echo(config, args.replicates, notional_n=args.notional_n,
                     schedule_c=args.schedule_c, block_radius=r, quantile=args.quantile),
    )
    nonincreasing = bool(np.all(np.diff(probs) <= 1e-12))
    manifest.results.append(
        result_entry("curve_nonincreasing", nonincreasing, None, True,
                     "pass" if nonincreasing else "fail")
    )
    if r >= 20:
        val20 = float(probs[list(ells).index(20)])
        manifest.results.append(
            result_entry("curve_at_ell20", val20, None, "< 0.1",
                         "pass" if val20 < 0.1 else "fail")
        )
    with open(outdir / "anticluster.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ell", "probability"])
        for e, p_ in zip(ells, probs):
            w.writerow([e, p_])
    plots.save_anticluster_figure(ells, probs, level, outdir / "anticluster.png")
    return _finish(args, manifest, outdir)


def cmd_selftest(args) -> int:
    """Reduced-scale property suite; one pass/fail line per check."""
    checks = []

    def check(name, ok):
        checks.append((name, bool(ok)))
        print(f"{'PASS' if ok else 'FAIL'}  {name}")

    # shape-constant cross-check on a coarse grid
    ok = True
    for p in range(2, 7):
        for b in [0.05, 0.15, 0.25, 0.35, 0.45]:
            d = shape_D(b, p)
            ok &= 0.0 < d < 1.0 and abs(d - (1 - p * b ** (p - 1))) < 1e-12
    check("shape-constant dual formula + closed form", ok)

    # sampler vs exact renewal mass, small scale
    law = DiscreteParetoLaw(0.5)
    u = renewal_mass(law, 10)
    rng = replicate_rng(0, 0)
    hits = np.zeros(11)
    n_rep = 20000
    for _ in range(n_rep):
        pts = sample_renewal_path(law, 0, 10, rng).points
        hits[pts] += 1
    freq = hits / n_rep
    ok = all(
        abs(freq[k] - u[k]) <= 3 * math.sqrt(u[k] * (1 - u[k]) / n_rep) + 1.0 / n_rep
        for k in range(1, 11)
    )
    check("renewal sampler matches exact recursion (3 sigma)", ok)

    # window cover uniformity
    m, n_rep = 8, 20000
    hits = np.zeros(m + 1)
    for _ in range(n_rep):
        hits[sample_window_hitting_set(law, m, rng).points] += 1
    pk = 1.0 / (law.survival_cumsum(m)[m])
    ok = all(
        abs(hits[k] / n_rep - pk) <= 3 * math.sqrt(pk * (1 - pk) / n_rep) + 1.0 / n_rep
        for k in range(m + 1)
    )
    check("window hitting set covers uniformly (3 sigma)", ok)

    # elementary symmetric polynomial vs brute force
    rng2 = replicate_rng(1, 0)
    ok = True
    for p in range(1, 5):
        for size in range(0, 9):
            vals = rng2.standard_normal(size)
            brute = sum(
                np.prod(c) for c in itertools.combinations(vals, p)
            ) if size >= p else 0.0
            ok &= abs(elementary_symmetric(vals, p) - brute) < 1e-9 * max(1, abs(brute))
    check("elementary symmetric recurrence == brute force", ok)

    # simulation determinism
    params = ModelParams(alpha=1.0, beta=0.25, p=2)
    cfg = SeriesConfig(params=params, window=50, truncation=8, seed=123)
    a = simulate_path(cfg, law=DiscreteParetoLaw(0.25))
    b = simulate_path(cfg, law=DiscreteParetoLaw(0.25))
    check("simulation determinism (identical bytes)",
          a.values.tobytes() == b.values.tobytes())

    # manifest round trip
    import tempfile

    m_ = _manifest("selftest", {"seed": 0})
    m_.finished = m_.started
    with tempfile.TemporaryDirectory() as td:
        p_ = Path(td) / "m.json"
        m_.save(p_)
        loaded = load_manifest(p_)
        loaded.save(Path(td) / "m2.json")
        check("manifest round trip byte-exact",
              p_.read_bytes() == (Path(td) / "m2.json").read_bytes())

    failed = [n for n, ok in checks if not ok]
    if failed:
        print(f"{len(failed)} selftest check(s) failed", file=sys.stderr)
        return EXIT_STRICT if args.strict else EXIT_OK
    return EXIT_OK


# ------------------------------------------------------------------- parsing


def _add_model_flags(p):
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", required=True, help="decimal or exact ratio like 1/2")
    p.add_argument("--p", type=int, required=True)


def _add_sim_flags(p, window=True):
    if window:
        p.add_argument("--window", type=int, required=True)
    p.add_argument("--replicates", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--truncation", type=int, default=None)
    p.add_argument("--min-truncation", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--strict", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stabreg", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("theory", help="closed-form constants as JSON")
    _add_model_flags(p)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--n", type=int, default=10000, help="where to evaluate b_n")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("simulate", help="write path CSV + manifest")
    _add_model_flags(p)
    _add_sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tailproc", help="tail-process estimate vs u(k)^p")
    _add_model_flags(p)
    _add_sim_flags(p)
    p.add_argument("--quantile", type=float, default=0.99)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--max-lag", type=int, default=10)
    p.set_defaults(func=cmd_tailproc)

    p = sub.add_parser("ei", help="extremal index from block maxima")
    _add_model_flags(p)
    _add_sim_flags(p)
    p.add_argument(
        "--levels",
        default="0.1,0.15,0.2,0.3",
        help="levels x for theta(x); the low defaults sit where the "
        "finite-sample benchmark n*P(|X|>b_n x)*x^alpha stays near 1",
    )
    p.add_argument("--control-levels", default="0.5,1.0,2.0,4.0")
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_ei)

    p = sub.add_parser("cluster", help="cluster sizes over threshold in blocks")
    _add_model_flags(p)
    _add_sim_flags(p)
    p.add_argument("--quantile", type=float, default=0.99,
                   help="block-max quantile defining the level")
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("anticluster", help="anti-clustering curve")
    _add_model_flags(p)
    _add_sim_flags(p, window=False)
    p.add_argument("--notional-n", type=float, default=1e18,
                   help="notional path length fixing the block schedule")
    p.add_argument("--schedule-c", type=float, default=0.5)
    p.add_argument("--quantile", type=float, default=0.99)
    p.set_defaults(func=cmd_anticluster)

    p = sub.add_parser("selftest", help="reduced-scale property suite")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
