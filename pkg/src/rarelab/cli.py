"""Command-line harness emitting deterministic, plot-ready CSV.

Subcommands:

* ``estimate``    -- run one estimator (sus, mc, form, sorm, exact) on a
                     catalog limit state and write one CSV row per run/point.
* ``gallery``     -- run the full counterexample battery (all catalog
                     entries, canonical configuration) and write per-problem
                     run tables, sample dumps, per-run dominant-cluster
                     centroids and a master summary.
* ``fit``         -- fit the tail family c * beta^b * Phi(-beta) to subset
                     simulation medians over a list of betas.
* ``beta-points`` -- multi-start design-point search plus curvature factors.
* ``diagnose``    -- turn an estimate CSV into normality/qq and
                     delta-method c.o.v. reports.

Exit codes: 0 ok, 2 bad arguments, 3 unknown limit state, 4 runtime failure,
5 partial gallery failure.  All numeric cells use shortest round-trip float
formatting, so identical invocations produce byte-identical files.
"""

import argparse
import contextlib
import csv
import math
import sys

import numpy as np
from numpy.random import SeedSequence

from .diagnostics import (count_modes, delta_cov, normality_report,
                          run_ensemble, single_linkage_clusters)
from .lsf import UnknownLsfError, catalog_names, make_lsf
from .mc import run_mc
from .reference import reference_probability
from .sorm import SormCurvatureError, find_beta_points, fit_asymptotic, \
    sorm_correction
from .special import phi_cdf
from .sus import SusConfig, SusConfigError

OK, BAD_ARGS, UNKNOWN_LSF, RUNTIME_FAILURE, PARTIAL_GALLERY = 0, 2, 3, 4, 5

MISDIRECTION_DISTANCE = 1.0  # u-space distance for "cluster at the design point"


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "nan" if math.isnan(x) else repr(x)
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def _write_csv(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(c) for c in row])


@contextlib.contextmanager
def _out_stream(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _parse_params(pairs):
    params = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"--param expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        params[key.strip()] = float(value)
    return params


def _sus_config(args):
    return SusConfig(n_samples=args.samples or 500, p0=args.p0,
                     chain_len=args.chain_len, proposal_spread=args.spread,
                     max_levels=args.max_levels, seed=args.seed)


def _sus_rows(ensemble):
    for i in range(len(ensemble)):
        yield (int(ensemble.seeds[i]), float(ensemble.estimates[i]),
               int(ensemble.per_run_levels[i]), int(ensemble.total_evals[i]),
               int(ensemble.per_run_modes[i]),
               ";".join(repr(v) for v in ensemble.level_estimates[i]))


def _ensemble_summary(ensemble):
    est = ensemble.estimates
    pos = est[est > 0.0]
    log_sd = float(np.log10(pos).std(ddof=1)) if len(pos) > 1 else math.nan
    try:
        cov = delta_cov(ensemble.level_estimates, est).combined_cov
    except ValueError:
        cov = math.nan
    return float(np.median(est)), float(est.mean()), log_sd, cov


def _point_rows(lsf, points, with_sorm):
    """Per-point rows plus the total over the points with a valid factor.

    Curvature breakdowns (non-positive determinant) are reported as nan rows
    rather than aborting the whole table.
    """
    rows = []
    total = 0.0
    n_valid = 0
    for i, bp in enumerate(points):
        u1, u2 = (float(bp.location[0]), float(bp.location[1]))
        if with_sorm:
            try:
                sf = sorm_correction(lsf, bp)
                det, corr, p = sf.det_value, sf.correction, sf.probability
            except SormCurvatureError:
                det, corr, p = math.nan, math.nan, math.nan
        else:
            det, corr, p = "", "", bp.form_probability
        if not (isinstance(p, float) and math.isnan(p)):
            total += p
            n_valid += 1
        rows.append((f"point-{i}", u1, u2, bp.beta, int(bp.converged),
                     det, corr, p))
    rows.append(("total", "", "", "", "", "", "", total))
    return rows, total, n_valid


def cmd_estimate(args):
    lsf = make_lsf(args.lsf, _parse_params(args.param))
    ref = reference_probability(lsf)
    summary = None
    if args.method == "sus":
        ens = run_ensemble(lsf, _sus_config(args), args.runs)
        header = ("seed", "estimate", "levels", "evals", "modes",
                  "level_estimates")
        rows = list(_sus_rows(ens))
        med, mean, log_sd, cov = _ensemble_summary(ens)
        hist = _modes_hist(ens.per_run_modes)
        summary = (f"summary: lsf={lsf.name} method=sus runs={args.runs} "
                   f"median={_fmt(med)} mean={_fmt(mean)} "
                   f"log10_sd={_fmt(log_sd)} combined_cov={_fmt(cov)} "
                   f"modes={hist}")
    elif args.method == "mc":
        n = args.samples or 100000
        seeds = SeedSequence(args.seed).generate_state(args.runs, np.uint64)
        results = [run_mc(lsf, n, int(s)) for s in seeds]
        header = ("seed", "estimate", "n", "n_fail", "cov_hat")
        rows = [(int(s), r.p_hat, r.n, r.n_fail, r.cov_hat)
                for s, r in zip(seeds, results)]
        est = np.array([r.p_hat for r in results])
        summary = (f"summary: lsf={lsf.name} method=mc runs={args.runs} "
                   f"n={n} median={_fmt(float(np.median(est)))} "
                   f"mean={_fmt(float(est.mean()))}")
    elif args.method == "exact":
        if ref is None:
            raise ValueError(f"no reference probability for {lsf.name}")
        header = ("label", "probability", "kind")
        rows = [("exact", ref[0], ref[1])]
        summary = f"summary: lsf={lsf.name} method=exact probability={_fmt(ref[0])}"
    elif args.method in ("form", "sorm"):
        points = find_beta_points(lsf)
        if not points:
            raise RuntimeError(f"no design points found for {lsf.name}")
        header = ("label", "u1", "u2", "beta", "converged", "det",
                  "correction", "probability")
        rows, total, n_valid = _point_rows(lsf, points, args.method == "sorm")
        summary = (f"summary: lsf={lsf.name} method={args.method} "
                   f"points={len(points)} valid={n_valid} "
                   f"total={_fmt(total)}")
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown method {args.method}")
    if ref is not None and summary is not None:
        summary += f" reference={_fmt(ref[0])} ref_kind={ref[1]}"
    with _out_stream(args.out) as fh:
        _write_csv(fh, header, rows)
    if not args.quiet and summary:
        print(summary)
    return OK


def _modes_hist(per_run_modes):
    top = int(per_run_modes.max()) if len(per_run_modes) else 0
    return ";".join(f"{k}:{int((per_run_modes == k).sum())}"
                    for k in range(1, top + 1)) or "none"


def _dominant_cluster(points):
    clusters = single_linkage_clusters(points, MISDIRECTION_DISTANCE)
    if not clusters:
        return 0, None
    idx = clusters[0]
    return len(idx), points[idx].mean(axis=0)


def _gallery_one(name, master_seed, runs, out_dir, index):
    lsf = make_lsf(name)
    ref = reference_probability(lsf)
    points = find_beta_points(lsf)
    global_bp = points[0] if points else None
    # sum the curvature-corrected contributions of the points where the
    # second-order approximation is valid (det > 0)
    contributions = []
    for bp in points:
        try:
            contributions.append(sorm_correction(lsf, bp).probability)
        except SormCurvatureError:
            pass
    sorm_ref = sum(contributions) if contributions else math.nan
    seed = int(SeedSequence((master_seed, index)).generate_state(1, np.uint64)[0])
    cfg = SusConfig(seed=seed)
    ens = run_ensemble(lsf, cfg, runs, keep_final_samples=True)

    with open(out_dir / f"runs_{name}.csv", "w", newline="") as fh:
        _write_csv(fh, ("seed", "estimate", "levels", "evals", "modes",
                        "level_estimates"), _sus_rows(ens))

    # every-10th sample dump of the first run, for plotting
    from .sus import run_sus
    first = run_sus(lsf, SusConfig(seed=int(ens.seeds[0])))
    dump = []
    for lv in first.levels:
        for p, v in zip(lv.points[::10], lv.values[::10]):
            dump.append((lv.index, lv.threshold, float(p[0]), float(p[1]),
                         float(v)))
    with open(out_dir / f"points_{name}.csv", "w", newline="") as fh:
        _write_csv(fh, ("level", "threshold", "u1", "u2", "g"), dump)

    # per-run dominant failure cluster vs the global design point
    rows = []
    n_misdirected = 0
    n_with_fail = 0
    for i, pts in enumerate(ens.final_samples):
        n_fail = len(pts)
        if n_fail == 0:
            rows.append((i, int(ens.seeds[i]), 0, 0, math.nan, math.nan,
                         math.nan, ""))
            continue
        size, centroid = _dominant_cluster(pts)
        n_with_fail += 1
        if global_bp is not None:
            dist = float(np.linalg.norm(centroid - global_bp.location))
            mis = dist > MISDIRECTION_DISTANCE
            n_misdirected += mis
            rows.append((i, int(ens.seeds[i]), n_fail, size,
                         float(centroid[0]), float(centroid[1]), dist,
                         int(mis)))
        else:
            rows.append((i, int(ens.seeds[i]), n_fail, size,
                         float(centroid[0]), float(centroid[1]), math.nan,
                         ""))
    with open(out_dir / f"centroids_{name}.csv", "w", newline="") as fh:
        _write_csv(fh, ("run", "seed", "n_fail", "dominant_size",
                        "centroid_u1", "centroid_u2", "dist_to_beta_point",
                        "misdirected"), rows)

    med, mean, log_sd, cov = _ensemble_summary(ens)
    ref_value = ref[0] if ref else math.nan
    verdict = _verdict(med, ref_value, cov)
    max_modes = int(ens.per_run_modes.max()) if len(ens) else 0
    hist = _modes_hist(ens.per_run_modes)
    mis_frac = n_misdirected / n_with_fail if n_with_fail else math.nan
    return (name, ref_value, ref[1] if ref else "", sorm_ref,
            global_bp.beta if global_bp else math.nan, len(points),
            med, mean, log_sd, cov,
            float(np.median(ens.per_run_levels)),
            float(ens.total_evals.mean()), hist,
            float((ens.per_run_modes == max_modes).mean()) if max_modes else math.nan,
            mis_frac, verdict)


def _verdict(median, reference, combined_cov):
    if math.isnan(reference) or reference <= 0.0:
        return "NO-REFERENCE"
    if median <= 0.0:
        return "MISLEADING"
    ratio = median / reference
    if ratio >= 10.0 or ratio <= 0.1:
        return "MISLEADING"
    band = 3.0 * combined_cov if math.isfinite(combined_cov) else 0.5
    if abs(median - reference) <= band * reference:
        return "OK"
    return "SUSPECT"


def cmd_gallery(args):
    import pathlib
    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = args.lsf or list(catalog_names())
    for n in names:
        if n not in catalog_names():
            raise UnknownLsfError(f"unknown limit state {n!r}")
    summary_rows = []
    failures = []
    for index, name in enumerate(names):
        try:
            summary_rows.append(
                _gallery_one(name, args.seed, args.runs, out_dir, index))
        except Exception as exc:  # keep the battery going
            failures.append((name, exc))
            print(f"gallery: {name} failed: {exc}", file=sys.stderr)
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        _write_csv(fh, ("lsf", "reference", "ref_kind", "sorm_reference",
                        "global_beta", "n_beta_points", "median", "mean",
                        "log10_sd", "combined_cov", "median_levels",
                        "mean_evals", "modes_hist", "frac_max_modes",
                        "misdirect_frac", "verdict"), summary_rows)
    if not args.quiet:
        for row in summary_rows:
            print(f"gallery: {row[0]}: median={_fmt(row[6])} "
                  f"reference={_fmt(row[1])} verdict={row[-1]}")
    return PARTIAL_GALLERY if failures else OK


def cmd_fit(args):
    betas = [float(b) for b in args.betas.split(",") if b.strip()]
    if len(betas) < 2 and not args.pin_b:
        raise ValueError("fit needs at least two beta values (or --pin-b)")
    lsf_name = args.lsf
    medians = []
    rows = []
    for i, beta in enumerate(betas):
        lsf = make_lsf(lsf_name, {"beta": beta})
        seed = int(SeedSequence((args.seed, i)).generate_state(1, np.uint64)[0])
        cfg = SusConfig(n_samples=args.samples or 500, p0=args.p0,
                        chain_len=args.chain_len,
                        proposal_spread=args.spread,
                        max_levels=args.max_levels, seed=seed)
        ens = run_ensemble(lsf, cfg, args.runs)
        med = float(np.median(ens.estimates))
        medians.append(med)
        rows.append(("sus-median", beta, med))
    fit = fit_asymptotic(betas, medians, pin_b=args.pin_b)
    rows.append(("fit-c", "", fit.c))
    rows.append(("fit-b", "", fit.b))
    rows.append(("fit-residual", "", fit.residual))
    grid = np.linspace(min(betas), max(betas), 50)
    for b in grid:
        rows.append(("curve", float(b),
                     fit.c * float(b) ** fit.b * phi_cdf(-float(b))))
    with _out_stream(args.out) as fh:
        _write_csv(fh, ("kind", "beta", "value"), rows)
    if not args.quiet:
        print(f"summary: lsf={lsf_name} fit c={_fmt(fit.c)} b={_fmt(fit.b)} "
              f"residual={_fmt(fit.residual)}")
    return OK


def cmd_beta_points(args):
    lsf = make_lsf(args.lsf, _parse_params(args.param))
    points = find_beta_points(lsf)
    header = ("label", "u1", "u2", "beta", "converged", "det", "correction",
              "probability")
    rows = []
    total = 0.0
    for i, bp in enumerate(points):
        try:
            sf = sorm_correction(lsf, bp)
            det, corr, p = sf.det_value, sf.correction, sf.probability
        except SormCurvatureError:
            det, corr, p = math.nan, math.nan, math.nan
        if not math.isnan(p):
            total += p
        rows.append((f"point-{i}", float(bp.location[0]),
                     float(bp.location[1]), bp.beta, int(bp.converged),
                     det, corr, p))
    rows.append(("total", "", "", "", "", "", "", total))
    with _out_stream(args.out) as fh:
        _write_csv(fh, header, rows)
    if not args.quiet:
        print(f"summary: lsf={lsf.name} beta-points={len(points)} "
              f"sorm_total={_fmt(total)}")
    return OK


def cmd_diagnose(args):
    estimates = []
    level_estimates = []
    with open(args.input, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "estimate" not in reader.fieldnames:
            raise ValueError(f"{args.input} is not an estimate CSV")
        for rec in reader:
            estimates.append(float(rec["estimate"]))
            if rec.get("level_estimates"):
                level_estimates.append(
                    [float(v) for v in rec["level_estimates"].split(";")])
    estimates = np.asarray(estimates)
    rep = normality_report(estimates)
    prefix = args.out
    with open(f"{prefix}_normality.csv", "w", newline="") as fh:
        _write_csv(fh, ("metric", "value"), [
            ("n", rep.n), ("n_zero_excluded", rep.n_zero_excluded),
            ("mean_raw", rep.mean_raw), ("sd_raw", rep.sd_raw),
            ("skew_raw", rep.skew_raw), ("exkurt_raw", rep.exkurt_raw),
            ("mean_log10", rep.mean_log), ("sd_log10", rep.sd_log),
            ("skew_log10", rep.skew_log), ("exkurt_log10", rep.exkurt_log),
            ("qq_corr_raw", rep.qq_corr_raw),
            ("qq_corr_log10", rep.qq_corr_log),
        ])
    with open(f"{prefix}_qq.csv", "w", newline="") as fh:
        rows = [("raw", float(t), float(s)) for t, s in rep.qq_raw]
        rows += [("log10", float(t), float(s)) for t, s in rep.qq_log]
        _write_csv(fh, ("scale", "theoretical", "sample"), rows)
    cov_rows = []
    if level_estimates:
        try:
            cov = delta_cov(level_estimates, estimates)
        except ValueError as exc:
            cov = None
            cov_rows.append(("error", "", "", str(exc)))
        if cov is not None:
            for i, c in enumerate(cov.per_level_cov):
                cov_rows.append(("level_cov", i, "", float(c)))
            n = len(cov.per_level_cov)
            for i in range(n):
                for j in range(n):
                    cov_rows.append(("corr", i, j,
                                     float(cov.per_level_corr[i, j])))
            cov_rows.append(("combined_cov", "", "", cov.combined_cov))
            cov_rows.append(("empirical_cov", "", "", cov.empirical_cov))
            cov_rows.append(("runs_used", "", "", cov.n_runs_used))
            cov_rows.append(("runs_excluded", "", "", cov.n_runs_excluded))
    with open(f"{prefix}_cov.csv", "w", newline="") as fh:
        _write_csv(fh, ("kind", "i", "j", "value"), cov_rows)
    if not args.quiet:
        print(f"summary: n={rep.n} skew_raw={_fmt(rep.skew_raw)} "
              f"skew_log10={_fmt(rep.skew_log)} "
              f"qq_corr_raw={_fmt(rep.qq_corr_raw)} "
              f"qq_corr_log10={_fmt(rep.qq_corr_log)}")
    return OK


def _add_sus_flags(p):
    p.add_argument("--samples", type=int, default=None,
                   help="samples per level (default 500)")
    p.add_argument("--p0", type=float, default=0.1)
    p.add_argument("--chain-len", type=int, default=10)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--max-levels", type=int, default=30)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rarelab",
        description="Rare-event reliability estimators and counterexample "
                    "benchmarks on standard normal space.")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="run a single estimator")
    est.add_argument("--lsf", required=True,
                     help=f"catalog name ({', '.join(catalog_names())})")
    est.add_argument("--param", action="append", default=[], metavar="K=V")
    est.add_argument("--method", default="sus",
                     choices=("sus", "mc", "form", "sorm", "exact"))
    est.add_argument("--runs", type=int, default=1)
    _add_sus_flags(est)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--out", default=None)
    est.add_argument("--quiet", action="store_true")
    est.set_defaults(func=cmd_estimate)

    gal = sub.add_parser("gallery", help="run the full benchmark battery")
    gal.add_argument("--seed", type=int, default=0)
    gal.add_argument("--out", dest="out_dir", required=True,
                     help="output directory")
    gal.add_argument("--runs", type=int, default=50)
    gal.add_argument("--lsf", action="append", default=None,
                     help="restrict to these catalog entries")
    gal.add_argument("--quiet", action="store_true")
    gal.set_defaults(func=cmd_gallery)

    fit = sub.add_parser("fit", help="fit the asymptotic tail family")
    fit.add_argument("--lsf", default="product")
    fit.add_argument("--betas", required=True, help="comma-separated list")
    fit.add_argument("--runs", type=int, default=40)
    fit.add_argument("--pin-b", action="store_true",
                     help="fit the constant only (b = 0)")
    _add_sus_flags(fit)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", default=None)
    fit.add_argument("--quiet", action="store_true")
    fit.set_defaults(func=cmd_fit)

    bp = sub.add_parser("beta-points", help="design points and curvatures")
    bp.add_argument("--lsf", required=True)
    bp.add_argument("--param", action="append", default=[], metavar="K=V")
    bp.add_argument("--out", default=None)
    bp.add_argument("--quiet", action="store_true")
    bp.set_defaults(func=cmd_beta_points)

    diag = sub.add_parser("diagnose", help="reports from an estimate CSV")
    diag.add_argument("--in", dest="input", required=True)
    diag.add_argument("--out", required=True, help="output prefix")
    diag.add_argument("--quiet", action="store_true")
    diag.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnknownLsfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return UNKNOWN_LSF
    except (ValueError, SusConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_ARGS
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_FAILURE


if __name__ == "__main__":
    sys.exit(main())
