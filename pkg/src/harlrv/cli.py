"""Command-line interface: ``harlrv {simulate,estimate,test,run,replicate,plot}``.

Exit codes: 0 on success, 1 when the data are statistically degenerate
(e.g. a zero variance estimate), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import DegenerateError
from .har_tests import dm_test, gr_test, t_test_regression
from .lrv import ESTIMATOR_ALIASES, DkConfig, estimate_lrv
from .montecarlo import SCHEMA_VERSION, ExperimentError, McConfig, McReport, replicate_table, run_experiment
from .sls_sim import DgpId, ForecastBreakdownData, LossDifferentialData, make_dgp


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# CSV helpers (RFC 4180, header row)


def read_csv(path: str) -> tuple[list[str], np.ndarray]:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {path}")
    with p.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise UsageError(f"{path}: need a header row and at least one data row")
    header = rows[0]
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise UsageError(f"{path}: non-numeric entry ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise UsageError(f"{path}: ragged rows")
    return header, data


def write_csv(path: str, header: list[str], columns: list[np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([repr(float(v)) for v in row])


def write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text)


def dump_json(obj: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **obj}, indent=2, sort_keys=True, default=float)


# --------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    data = make_dgp(DgpId(args.model.upper(), args.T, delta=args.delta, rho=args.rho, seed=args.seed))
    if isinstance(data, LossDifferentialData):
        write_csv(args.out, ["d"], [data.d])
    elif isinstance(data, ForecastBreakdownData):
        loss = np.concatenate([data.in_losses, data.out_losses])
        flag = np.concatenate([np.ones(data.in_losses.size), np.zeros(data.out_losses.size)])
        write_csv(args.out, ["loss", "in_sample"], [loss, flag])
    else:
        write_csv(args.out, ["y", "x"], [data.y, data.X[:, 1]])
    return 0


def _dk_config(args) -> DkConfig:
    return DkConfig(nt_exponent=float(Fraction(args.nt_exponent)), p_A=args.pa)


def cmd_estimate(args) -> int:
    header, V = read_csv(args.input)
    est = estimate_lrv(V, args.estimator, cfg=_dk_config(args))
    out = {"components": header, **est.to_dict(), "warnings": est.notes}
    write_text(args.json_out, dump_json(out))
    return 0


def cmd_test(args) -> int:
    header, data = read_csv(args.input)
    cfg = _dk_config(args)
    if args.test == "t":
        y, X = data[:, 0], data[:, 1:]
        if not args.no_intercept:
            X = np.column_stack([np.ones(len(y)), X])
        res = t_test_regression(y, X, args.coef_index, args.estimator, args.alpha, args.null_value, cfg=cfg)
    elif args.test == "dm":
        res = dm_test(data[:, 0], args.estimator, args.alpha, demean=args.demean, cfg=cfg)
    else:
        if "in_sample" not in header or "loss" not in header:
            raise UsageError("gr test needs columns 'loss' and 'in_sample'")
        loss = data[:, header.index("loss")]
        ins = data[:, header.index("in_sample")] != 0
        res = gr_test(
            loss[ins], loss[~ins], args.estimator, args.alpha, demean=args.demean, cfg=cfg,
            in_sample_correction=not args.no_in_sample_correction,
        )
    write_text(args.json_out, dump_json({"test": args.test, **res.to_dict()}))
    return 0


def cmd_run(args) -> int:
    p = Path(args.config)
    if not p.is_file():
        raise UsageError(f"config file not found: {args.config}")
    try:
        cfg = McConfig.from_dict(json.loads(p.read_text()))
    except (TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"invalid config: {exc}") from None
    try:
        report = run_experiment(cfg, args.threads)
        status = 0
    except ExperimentError as exc:
        print(str(exc), file=sys.stderr)
        report, status = exc.report, 1
    if args.csv_out:
        Path(args.csv_out).write_text(report.to_csv())
    write_text(args.json_out, report.to_json())
    return status


def cmd_replicate(args) -> int:
    cmp = replicate_table(args.table, args.reps, args.seed, args.threads)
    Path(args.csv_out or f"table{args.table}_replication.csv").write_text(cmp.to_csv())
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(cmp.to_dict(), indent=2, sort_keys=True))
    print(cmp.format())
    return 0


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#17becf", "#bcbd22"]


def power_curve_svg(report: McReport, width: int = 560, panel_height: int = 300) -> str:
    """Rejection rate against delta, one panel per (model, T), one line per estimator."""
    groups: dict[tuple, dict[str, list]] = {}
    for c in report.cells:
        groups.setdefault((c.model, c.T), {}).setdefault(c.estimator, []).append((c.delta, c.rate))
    estimators = sorted({c.estimator for c in report.cells})
    colors = {e: _PALETTE[i % len(_PALETTE)] for i, e in enumerate(estimators)}
    ml, mr, mt, mb = 50, 130, 30, 40
    pw, ph = width - ml - mr, panel_height - mt - mb
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{panel_height * max(1, len(groups))}" font-family="sans-serif" font-size="11">']
    for gi, ((model, T), lines) in enumerate(sorted(groups.items())):
        y0 = gi * panel_height
        deltas = sorted({d for pts in lines.values() for d, _ in pts})
        dmin, dmax = deltas[0], deltas[-1]
        span = (dmax - dmin) or 1.0

        def sx(d):
            return ml + (d - dmin) / span * pw

        def sy(r):
            return y0 + mt + (1.0 - r) * ph

        parts.append(f'<text x="{ml}" y="{y0 + 18}" font-size="13">{model}, T={T}</text>')
        parts.append(f'<rect x="{ml}" y="{y0 + mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>')
        for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
            parts.append(f'<line x1="{ml - 4}" x2="{ml}" y1="{sy(tick):.1f}" y2="{sy(tick):.1f}" stroke="#444"/>')
            parts.append(f'<text x="{ml - 8}" y="{sy(tick) + 4:.1f}" text-anchor="end">{tick:g}</text>')
        for d in deltas:
            parts.append(f'<text x="{sx(d):.1f}" y="{y0 + mt + ph + 16}" text-anchor="middle">{d:g}</text>')
        parts.append(f'<text x="{ml + pw / 2}" y="{y0 + mt + ph + 32}" text-anchor="middle">delta</text>')
        for li, (est, pts) in enumerate(sorted(lines.items())):
            pts = sorted(pts)
            path = " ".join(f"{sx(d):.1f},{sy(r):.1f}" for d, r in pts if r == r)
            parts.append(f'<polyline points="{path}" fill="none" stroke="{colors[est]}" stroke-width="2"/>')
            for d, r in pts:
                if r == r:
                    parts.append(f'<circle cx="{sx(d):.1f}" cy="{sy(r):.1f}" r="3" fill="{colors[est]}"/>')
            ly = y0 + mt + 12 + 16 * li
            parts.append(f'<line x1="{ml + pw + 10}" x2="{ml + pw + 30}" y1="{ly - 4}" y2="{ly - 4}" stroke="{colors[est]}" stroke-width="2"/>')
            parts.append(f'<text x="{ml + pw + 35}" y="{ly}">{est}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_plot(args) -> int:
    p = Path(args.input)
    if not p.is_file():
        raise UsageError(f"input file not found: {args.input}")
    doc = json.loads(p.read_text())
    report = McReport.from_dict(doc["report"] if "report" in doc else doc)
    Path(args.out).write_text(power_curve_svg(report))
    return 0


# --------------------------------------------------------------------------
# parser


def _threads(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("threads must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="harlrv", description="Long-run variance estimation and HAR tests.")
    sub = ap.add_subparsers(dest="command", required=True)
    estimators = sorted(ESTIMATOR_ALIASES)

    s = sub.add_parser("simulate", help="simulate one data set of a Monte Carlo design")
    s.add_argument("--model", choices=["m1", "m2", "m3", "m4"], required=True)
    s.add_argument("--rho", type=float, default=0.4)
    s.add_argument("--delta", type=float, default=0.0)
    s.add_argument("--T", type=int, default=400)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    def dk_flags(p):
        p.add_argument("--pa", type=int, default=1, help="VAR order of the prewhitening step")
        p.add_argument("--nt-exponent", default="2/3", help="block length n_T = floor(T**exponent)")

    e = sub.add_parser("estimate", help="estimate the long-run variance of the columns of a CSV file")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--estimator", choices=estimators, default="pwdk-sls")
    dk_flags(e)
    e.add_argument("--json-out")
    e.set_defaults(func=cmd_estimate)

    t = sub.add_parser("test", help="run a HAR test on a CSV file")
    t.add_argument("--test", choices=["t", "dm", "gr"], required=True)
    t.add_argument("--estimator", choices=estimators, default="pwdk-sls")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--in", dest="input", required=True)
    t.add_argument("--coef-index", type=int, default=0, help="t test: tested coefficient (0 = intercept)")
    t.add_argument("--null-value", type=float, default=0.0)
    t.add_argument("--no-intercept", action="store_true", help="t test: do not add a constant column")
    t.add_argument("--demean", action="store_true", help="dm/gr: estimate the LRV of the demeaned series")
    t.add_argument(
        "--no-in-sample-correction", action="store_true",
        help="gr: drop the 1 + n/m variance factor for the estimated in-sample mean loss",
    )
    dk_flags(t)
    t.add_argument("--json-out")
    t.set_defaults(func=cmd_test)

    r = sub.add_parser("run", help="run a Monte Carlo experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--threads", type=_threads, default=1)
    r.add_argument("--json-out")
    r.add_argument("--csv-out")
    r.set_defaults(func=cmd_run)

    p = sub.add_parser("replicate", help="replicate a published size or power table")
    p.add_argument("--table", type=int, choices=[1, 2, 3, 4], required=True)
    p.add_argument("--reps", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_threads, default=1)
    p.add_argument("--csv-out", help="comparison CSV (default: table<N>_replication.csv)")
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_replicate)

    g = sub.add_parser("plot", help="draw rejection rate against delta from a report JSON")
    g.add_argument("--in", dest="input", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateError as exc:
        print(f"harlrv: degenerate: {exc}", file=sys.stderr)
        return 1
    except (UsageError, ValueError) as exc:
        print(f"harlrv: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
