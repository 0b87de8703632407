"""Command-line entry points.

Subcommands: generate, validate, solve, simulate, ses, regress, serve.
Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .dataio import load_district_dir, write_assignment_csv, write_district_dir
from .district import DistrictError, with_counts
from .harness import (
    DistrictFeatures,
    ExperimentConfig,
    build_regression_table,
    emit_report,
    run_experiment,
)
from .metrics import DegenerateDistrictError, compile_report, metrics_csv_header, metrics_csv_row
from .regression import LOCALES
from .ses import build_ses_counts, compute_ses, load_ses_csv, write_ses_csv
from .solver import InstanceTooLargeError, SolveParams, check_feasible, solve
from .synth import generate_synthetic, synthetic_ses_vars

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the CLI contract wants usage + exit 1
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    solve_params = SolveParams(
        alpha_t=args.alpha_t,
        alpha_p=args.alpha_p,
        mode=args.mode,
        restarts=args.restarts,
        max_iters=args.max_iters,
    )
    return ExperimentConfig(
        epsilons=tuple(args.epsilon) if args.epsilon else (2.0, 4.0),
        replicates=args.replicates,
        solve=solve_params,
        base_seed=args.seed,
        objective=args.objective,
        locale=args.locale,
        workers=args.workers,
    )


def _load_for_objective(args: argparse.Namespace):
    """Load the district; for the SES objective, swap in the SES counts matrix."""
    district = load_district_dir(args.data_dir)
    if args.objective == "ses":
        ses_path = Path(args.data_dir) / "ses.csv"
        scores = compute_ses(load_ses_csv(ses_path))
        district = with_counts(district, build_ses_counts(district, scores))
    return district


def _add_common_solve_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha-t", type=float, default=0.5, dest="alpha_t",
                   help="max relative travel-time increase (default 0.5)")
    p.add_argument("--alpha-p", type=float, default=0.15, dest="alpha_p",
                   help="max relative school-size increase (default 0.15)")
    p.add_argument("--objective", choices=("race", "ses"), default="race")
    p.add_argument("--mode", choices=("heuristic", "exact"), default="heuristic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--max-iters", type=int, default=None, dest="max_iters")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dp-rezone", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[], help="write a synthetic district as CSVs")
    p.add_argument("--rows", type=int, default=20)
    p.add_argument("--cols", type=int, default=20)
    p.add_argument("--schools", type=int, default=6)
    p.add_argument("--strength", type=float, default=0.8)
    p.add_argument("--mean-pop", type=float, default=8.0, dest="mean_pop")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("validate", help="load a district directory and report")
    p.add_argument("data_dir")

    p = sub.add_parser("solve", help="solve one non-private scenario")
    p.add_argument("data_dir")
    _add_common_solve_flags(p)
    p.add_argument("--out", default=None, help="directory for assignment/metrics output")

    p = sub.add_parser("simulate", help="run the full privacy experiment")
    p.add_argument("data_dir")
    _add_common_solve_flags(p)
    p.add_argument("--epsilon", type=float, action="append", default=None,
                   help="privacy budget; repeat for several (default 2 and 4)")
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--locale", choices=LOCALES, default="suburban")
    p.add_argument("--out", required=True)

    p = sub.add_parser("ses", help="compute SES scores and the SES counts matrix")
    p.add_argument("data_dir")
    p.add_argument("--out", default=None, help="output directory (default: data_dir)")

    p = sub.add_parser("regress", help="district-feature regression over results.json files")
    p.add_argument("results", nargs="+", help="results.json paths (>= number of features + 1)")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--out", default=None, help="write regression.json here")

    p = sub.add_parser("serve", help="run the HTTP job service")
    p.add_argument("--addr", default=None, help="bind address, default env DP_REZONE_ADDR or 127.0.0.1:8571")
    p.add_argument("--data-dir", default=None, dest="data_dir",
                   help="persistence directory, default env DP_REZONE_DATA or ./dp_rezone_data")
    p.add_argument("--workers", type=int, default=2, help="job worker threads")

    return parser


def _cmd_generate(args) -> int:
    district = generate_synthetic(
        args.rows, args.cols, args.schools, args.strength, args.mean_pop, args.seed
    )
    out = Path(args.out)
    write_district_dir(district, out)
    ses_rows = synthetic_ses_vars(district, args.strength, args.seed)
    write_ses_csv(out / "ses.csv", ses_rows)
    print(f"wrote synthetic district ({district.n_blocks} blocks, "
          f"{district.n_schools} schools) to {out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    district = load_district_dir(args.data_dir)
    totals = district.counts.totals.sum()
    print(f"{district.name}: {district.n_blocks} blocks, {district.n_schools} schools, "
          f"{int(totals)} students, {len(district.pinned)} pinned blocks")
    return EXIT_OK


def _cmd_solve(args) -> int:
    district = _load_for_objective(args)
    pair = (ExperimentConfig(objective=args.objective)).pair()
    params = SolveParams(
        alpha_t=args.alpha_t, alpha_p=args.alpha_p, pair=pair, mode=args.mode,
        restarts=args.restarts, max_iters=args.max_iters, seed=args.seed,
    )
    result = solve(district, district.counts, params)
    feas = check_feasible(district, result.assignment, params)
    report = compile_report(district, result.assignment, pair, scenario="nonprivate")
    print(f"objective (dissimilarity on solver counts): {result.objective:.6f}")
    print(f"dissimilarity current: "
          f"{compile_report(district, district.current, pair, 'current').dissimilarity:.6f}")
    print(f"blocks rezoned: {report.blocks_rezoned}  feasible: {feas.ok}  "
          f"proven optimal: {result.proven_optimal}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_assignment_csv(out / "assignment_nonprivate.csv", result.assignment)
        with open(out / "metrics.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(metrics_csv_header(district.groups)) + "\n")
            fh.write(",".join(metrics_csv_row(report, district.groups)) + "\n")
        print(f"wrote {out}/assignment_nonprivate.csv and metrics.csv")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    district = _load_for_objective(args)
    config = _experiment_config(args)
    result = run_experiment(district, config)
    written = emit_report(result, args.out)
    print(f"current DI {result.current.dissimilarity:.4f} | "
          f"nonprivate DI {result.nonprivate.dissimilarity:.4f} | "
          + " | ".join(
              f"eps={s.epsilon:g} mean DI {s.mean_dissimilarity:.4f}"
              for s in result.per_epsilon))
    print(f"wrote {len(written)} files to {args.out}")
    return EXIT_OK


def _cmd_ses(args) -> int:
    district = load_district_dir(args.data_dir)
    scores = compute_ses(load_ses_csv(Path(args.data_dir) / "ses.csv"))
    counts = build_ses_counts(district, scores)
    out = Path(args.out) if args.out else Path(args.data_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "ses_scores.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("block_group_id,composite_z,label\n")
        for s in scores:
            fh.write(f"{s.block_group_id},{s.composite_z:.6f},{s.label}\n")
    with open(out / "ses_counts.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("block_id,n_low_ses,n_high_ses,n_total\n")
        for i, bid in enumerate(district.block_ids):
            fh.write(f"{bid},{counts.data[0, i]},{counts.data[1, i]},{counts.data[2, i]}\n")
    n_high = sum(1 for s in scores if s.label == "high")
    print(f"scored {len(scores)} block groups ({n_high} high-SES); wrote ses_scores.csv, ses_counts.csv")
    return EXIT_OK


def _cmd_regress(args) -> int:
    entries = []
    for path in args.results:
        with open(path, encoding="utf-8") as fh:
            blob = json.load(fh)
        feats = DistrictFeatures(
            name=blob["district"]["name"],
            pct_white=blob["district"]["group_totals"].get("white", 0)
            / max(blob["district"]["total_students"], 1),
            pct_black=blob["district"]["group_totals"].get("black", 0)
            / max(blob["district"]["total_students"], 1),
            pct_asian=blob["district"]["group_totals"].get("asian", 0)
            / max(blob["district"]["total_students"], 1),
            pct_native=blob["district"]["group_totals"].get("native", 0)
            / max(blob["district"]["total_students"], 1),
            pct_hispanic=blob["district"]["group_totals"].get("hispanic", 0)
            / max(blob["district"]["total_students"], 1),
            n_students=blob["district"]["total_students"],
            n_schools=blob["district"]["n_schools"],
            locale=blob["config"].get("locale", "suburban"),
        )
        entries.append((feats, _result_stub_from_json(blob)))
    fit = build_regression_table(entries, epsilon=args.epsilon)
    print(f"{'feature':<24}{'coef':>12}{'se':>12}{'t':>9}{'p':>9}{'ci_low':>12}{'ci_high':>12}")
    for i, name in enumerate(fit.feature_names):
        print(f"{name:<24}{fit.coef[i]:>12.6f}{fit.stderr[i]:>12.6f}"
              f"{fit.tvalues[i]:>9.3f}{fit.pvalues[i]:>9.3f}"
              f"{fit.conf_low[i]:>12.6f}{fit.conf_high[i]:>12.6f}")
    print(f"n={fit.n} df={fit.df_resid} adj R^2={fit.adj_r2:.4f}"
          + (f"  dropped: {', '.join(fit.dropped)}" if fit.dropped else ""))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(fit.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


class _ResultStub:
    """Just enough of ExperimentResult for build_regression_table, read from results.json."""

    class _Eps:
        def __init__(self, epsilon: float, mean_dissimilarity: float):
            self.epsilon = epsilon
            self.mean_dissimilarity = mean_dissimilarity

    class _Report:
        def __init__(self, dissimilarity: float):
            self.dissimilarity = dissimilarity

    def __init__(self, blob: dict):
        self.per_epsilon = [
            self._Eps(p["epsilon"], p["mean_dissimilarity"]) for p in blob["private"]
        ]
        self.nonprivate = self._Report(blob["nonprivate"]["dissimilarity"])
        self.current = self._Report(blob["current"]["dissimilarity"])


def _result_stub_from_json(blob: dict) -> _ResultStub:
    return _ResultStub(blob)


def _cmd_serve(args) -> int:
    from .service import serve_forever  # imported lazily; pulls in the job runner

    addr = args.addr or os.environ.get("DP_REZONE_ADDR", "127.0.0.1:8571")
    data_dir = args.data_dir or os.environ.get("DP_REZONE_DATA", "./dp_rezone_data")
    host, _, port = addr.rpartition(":")
    serve_forever(host or "127.0.0.1", int(port), Path(data_dir), workers=args.workers)
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "validate": _cmd_validate,
    "solve": _cmd_solve,
    "simulate": _cmd_simulate,
    "ses": _cmd_ses,
    "regress": _cmd_regress,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (DistrictError, DegenerateDistrictError, InstanceTooLargeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
