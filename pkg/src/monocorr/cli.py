"""Command-line interface.

    monocorr corr     --input data.csv [--x COL --y COL] [--lambda L]
    monocorr test     --input data.csv [--statistic S ...] [--method M] [--reps R]
    monocorr simulate --n N --reps R [--summary PATH]
    monocorr power    --family NAME [--statistic S ...] --n N --reps R
    monocorr verify   [--max-n K]

Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
Every command is a pure function of its flags and input bytes.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import correlations as corr
from . import nulldist, powerlab
from .rankcore import RngSeed, Sample, SampleError, harmonic
from .verification import run_exact_suite

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# ingestion


def _parse_real(text: str) -> float | None:
    text = text.strip()
    if not text:
        return None
    try:
        v = float(text)
    except ValueError:
        return None
    return v


def _resolve(selector: str, header: list[str] | None) -> int:
    if selector.lstrip("-").isdigit():
        return int(selector)
    if header is None:
        raise DataError(f"column {selector!r} given by name but the file has no header row")
    matches = [i for i, h in enumerate(header) if h.strip() == selector]
    if len(matches) != 1:
        raise DataError(f"column {selector!r} matches {len(matches)} header fields")
    return matches[0]


def ingest_csv(path: str, x_col: str = "0", y_col: str = "1") -> Sample:
    """Read two numeric columns from a comma-separated file.

    The first row is a header when any selected field fails to parse as a
    number.  Columns are chosen by header name or 0-based index.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    return parse_rows(rows, x_col, y_col)


def parse_rows(rows: list[list[str]], x_col: str = "0", y_col: str = "1") -> Sample:
    rows = [(i + 1, r) for i, r in enumerate(rows) if any(f.strip() for f in r)]
    if not rows:
        raise DataError("input has no rows")
    first_no, first = rows[0]
    header = None
    by_index = x_col.lstrip("-").isdigit() and y_col.lstrip("-").isdigit()
    if not by_index:
        header = first
    else:
        xi, yi = int(x_col), int(y_col)
        fields = [first[i] if -len(first) <= i < len(first) else "" for i in (xi, yi)]
        if any(_parse_real(f) is None for f in fields):
            header = first
    if header is not None:
        rows = rows[1:]
    xi, yi = _resolve(x_col, header), _resolve(y_col, header)
    if xi == yi:
        raise DataError("x and y select the same column")
    xs, ys, bad = [], [], []
    for line_no, r in rows:
        try:
            fx, fy = r[xi], r[yi]
        except IndexError:
            bad.append(line_no)
            continue
        vx, vy = _parse_real(fx), _parse_real(fy)
        if vx is None or vy is None:
            bad.append(line_no)
            continue
        if not (math.isfinite(vx) and math.isfinite(vy)):
            raise DataError(f"row {line_no}: NaN or infinite value")
        xs.append(vx)
        ys.append(vy)
    if bad:
        shown = ", ".join(str(b) for b in bad[:20])
        raise DataError(f"missing or non-numeric value in row(s) {shown}")
    if len(xs) < 2:
        raise DataError("need at least 2 valid rows")
    return Sample(np.array(xs), np.array(ys))


def _read_sample(args) -> Sample:
    if args.input is None:
        raise UsageError("--input is required")
    if args.input == "-":
        return parse_rows(list(csv.reader(io.StringIO(sys.stdin.read()))), args.x, args.y)
    return ingest_csv(args.input, args.x, args.y)


# ---------------------------------------------------------------------------
# output


def _emit_json(obj, out) -> None:
    out.write(json.dumps(obj, indent=2, allow_nan=True))
    out.write("\n")


def _emit_csv(rows: list[dict], out, columns=None) -> None:
    if not rows:
        return
    columns = columns or list(rows[0])
    w = csv.DictWriter(out, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})


# ---------------------------------------------------------------------------
# commands

CORR_STATS = ("cn", "cmon", "spearman", "combined")
TEST_STATS = ("cn", "cmon", "combined", "spearman", "spearman-combo")


def cmd_corr(args, out) -> int:
    sample = _read_sample(args)
    stats_sel = args.statistic or list(CORR_STATS)
    rep = corr.correlation_report(sample, RngSeed(args.seed), (args.lam,))
    d = rep.to_dict()
    keep = {"n", "seed", "stream"}
    if "cn" in stats_sel:
        keep.add("chatterjee")
    if "cmon" in stats_sel:
        keep |= {"cmon", "cmon_sqrt"}
    if "spearman" in stats_sel:
        keep.add("spearman")
    if "combined" in stats_sel:
        keep.add("combined")
    d = {k: v for k, v in d.items() if k in keep}
    if "combined" in d:
        d["lambda"] = args.lam
    if args.format == "csv":
        flat = {k: v for k, v in d.items() if k != "combined"}
        if "combined" in d:
            flat["combined"] = next(iter(d["combined"].values()))
        _emit_csv([flat], out)
    else:
        _emit_json(d, out)
    return EXIT_OK


def _test_one(stat: str, method: str, sample: Sample, args) -> nulldist.TestResult:
    seed = RngSeed(args.seed)
    n = sample.n
    if method == "permutation":
        name = {"spearman": "abs-spearman"}.get(stat, stat)
        if name == "spearman-combo":
            raise UsageError("spearman-combo has no permutation test; test cn and spearman separately")
        return nulldist.permutation_test(name, sample, args.reps, seed.with_stream(2), args.lam)
    if sample.has_x_ties() or sample.has_y_ties():
        raise DataError("ties detected: asymptotic laws assume continuous margins; "
                        "use --method permutation")
    rep = corr.correlation_report(sample, seed, (args.lam,))
    if stat == "cn":
        return nulldist.pvalue_cn(rep.chatterjee, n)
    if stat == "cmon":
        if method == "asymptotic":
            return nulldist.pvalue_cmon_clt(rep.cmon, n)
        return nulldist.pvalue_cmon_mixture(rep.cmon, n, max(args.reps, 1000), seed.with_stream(1))
    if stat == "combined":
        return nulldist.pvalue_combined(rep.combined_lambda[float(args.lam)], n, args.lam)
    if stat == "spearman":
        return nulldist.pvalue_spearman_combo(rep.chatterjee, rep.spearman, 0.0, n)
    if stat == "spearman-combo":
        return nulldist.pvalue_spearman_combo(rep.chatterjee, rep.spearman, args.lam, n)
    raise UsageError(f"unknown statistic {stat!r}")


def cmd_test(args, out) -> int:
    sample = _read_sample(args)
    sel = args.statistic or ["cn", "cmon"]
    results = []
    for stat in sel:
        if stat not in TEST_STATS:
            raise UsageError(f"unknown statistic {stat!r}; choose from {', '.join(TEST_STATS)}")
        method = args.method or ("mixture" if stat == "cmon" else "asymptotic")
        if method == "mixture" and stat != "cmon":
            method = "asymptotic"
        r = _test_one(stat, method, sample, args)
        d = r.to_dict()
        d["name"] = stat
        d["method"] = method
        results.append(d)
    if args.format == "csv":
        _emit_csv([{k: v for k, v in r.items() if k != "law"} | {"law": r["law"]["kind"]}
                   for r in results], out)
    else:
        _emit_json({"n": sample.n, "seed": args.seed, "results": results}, out)
    return EXIT_OK


def _summary(cols: dict, n: int, reps: int, seed: int, lam: float) -> dict:
    a = np.column_stack([cols[c] for c in nulldist.NULL_COLUMNS])
    corr_mat = np.corrcoef(a, rowvar=False)
    s = {
        "n": n, "reps": reps, "seed": seed, "lambda": lam,
        "mean": {c: float(cols[c].mean()) for c in nulldist.NULL_COLUMNS},
        "variance": {c: float(cols[c].var(ddof=1)) for c in nulldist.NULL_COLUMNS},
        "se_mean": {c: float(cols[c].std(ddof=1) / math.sqrt(reps)) for c in nulldist.NULL_COLUMNS},
        "corr_sqrt_n_cn_vs_standardized_n_cmon": float(corr_mat[0, 1]),
        "corr_sqrt_n_cn_vs_sqrt_n_cs": float(corr_mat[0, 2]),
        "reference": {
            "var_sqrt_n_cn": nulldist.CN_NULL_VARIANCE,
            "var_sqrt_n_cs": nulldist.SPEARMAN_NULL_VARIANCE,
            "harmonic_n": harmonic(n),
            "exact_mean_n_cmon": nulldist.exact_null_mean_n_cmon(n),
        },
    }
    return s


def cmd_simulate(args, out) -> int:
    n, reps = args.n, args.reps
    if n is None or n < 10:
        raise UsageError("simulate needs --n >= 10")
    if reps < 100:
        raise UsageError("simulate needs --reps >= 100")
    cols = nulldist.simulate_null(n, reps, RngSeed(args.seed), args.lam)
    rows = [{"rep": i, **{c: float(cols[c][i]) for c in nulldist.NULL_COLUMNS}} for i in range(reps)]
    summary = _summary(cols, n, reps, args.seed, args.lam)
    if args.format == "json":
        _emit_json({"rows": rows, "summary": summary}, out)
    else:
        _emit_csv(rows, out)
        if args.summary:
            with open(args.summary, "w", encoding="utf-8") as fh:
                _emit_json(summary, fh)
        else:
            _emit_json(summary, sys.stderr)
    return EXIT_OK


def cmd_power(args, out) -> int:
    try:
        fam = powerlab.get_family(args.family)
    except KeyError as e:
        raise UsageError(str(e.args[0])) from None
    n = args.n or 500
    sel = args.statistic or ["cn", "spearman", "score"]
    seed = RngSeed(args.seed)
    records = []
    for k, stat in enumerate(sel):
        if stat not in powerlab.EFFICIENCY_STATISTICS:
            raise UsageError(f"unknown statistic {stat!r}; choose from "
                             f"{', '.join(powerlab.EFFICIENCY_STATISTICS)}")
        est = powerlab.pitman_efficiency_mc(stat, fam, n, max(args.reps, 1000), seed, args.lam)
        records.append(est.to_dict())
    chk = powerlab.cancellation_check(fam, n, max(args.reps, 1000), seed.with_stream(7))
    records.append(chk.to_dict())
    if args.format == "csv":
        _emit_csv(records, out, ["kind", "statistic", "family", "n", "reps", "estimate", "se", "seed"])
    else:
        _emit_json(records, out)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    max_n = 8 if args.max_n is None else args.max_n
    results = run_exact_suite(max_n, args.seed)
    ok = all(r.passed for r in results)
    if args.format == "csv":
        _emit_csv([r.to_dict() for r in results], out)
    else:
        _emit_json({"passed": ok, "checks": [r.to_dict() for r in results]}, out)
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {
    "corr": cmd_corr, "test": cmd_test, "simulate": cmd_simulate,
    "power": cmd_power, "verify": cmd_verify,
}


def _unit_interval(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError("lambda must lie in [0, 1]")
    return v


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="monocorr", description="Rank and isotonic correlation coefficients, "
                "independence tests and null/power simulations.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--input", help="CSV file ('-' for stdin)")
    p.add_argument("--x", default="0", help="x column: header name or 0-based index")
    p.add_argument("--y", default="1", help="y column: header name or 0-based index")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--reps", type=_positive, default=2000)
    p.add_argument("--n", type=_positive)
    p.add_argument("--lambda", dest="lam", type=_unit_interval, default=0.5)
    p.add_argument("--statistic", action="append", help="repeatable")
    p.add_argument("--method", choices=["asymptotic", "mixture", "permutation"])
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--family", default="gauss-trend")
    p.add_argument("--max-n", type=_positive)
    p.add_argument("--summary", help="simulate: write the summary JSON here instead of stderr")
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command == "simulate" else "json"
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as e:
        print(f"monocorr: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, SampleError, corr.DegenerateError) as e:
        print(f"monocorr: data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
