"""Command-line driver: quantify, scan-r, anova, plot, export.

Exit codes: 0 success, 1 input/output error, 2 infeasible (or bad scan
bracket), 3 iteration limit.  All randomness flows through --seed and
output files contain no timestamps, so a manifest reproduces its outputs
byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import datasets, model, qqr, spectral, svg
from .solver import IterationLimitError, SolverSettings


@dataclass(frozen=True)
class RunManifest:
    command: str
    dataset: str | None = None
    input: str | None = None
    format: str = "csv"
    a: float | None = None
    b: float | None = None
    R: float | None = None
    unknown_bounds: bool = False
    restriction: str = "sum"
    allow_degenerate: bool = False
    scan: str | None = None
    scan_tol: float = 1e-4
    k: int | None = None
    df_replicates: int = 20_000
    seed: int = 0
    out: str = "."
    eps_abs: float | None = None
    eps_rel: float | None = None
    max_iter: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _load_data(m: RunManifest) -> model.ClassificationMatrix:
    if (m.dataset is None) == (m.input is None):
        raise SystemExit2("give exactly one of --dataset or --input", 1)
    if m.dataset:
        return datasets.builtin(m.dataset)
    path = Path(m.input)
    fmt = m.format if m.format else ("json" if path.suffix == ".json" else "csv")
    return model.parse_classification(path.read_text(), fmt)


class SystemExit2(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _settings(m: RunManifest, verbose: bool) -> SolverSettings:
    kw = {}
    if m.eps_abs is not None:
        kw["eps_abs"] = m.eps_abs
    if m.eps_rel is not None:
        kw["eps_rel"] = m.eps_rel
    if m.max_iter is not None:
        kw["max_iter"] = m.max_iter
    return SolverSettings(verbose=verbose, **kw)


def _config(m: RunManifest, settings: SolverSettings) -> model.QqrConfig:
    if m.unknown_bounds:
        bounds = model.UnknownBounds(model.Restriction(m.restriction))
    else:
        if m.a is None or m.b is None:
            raise SystemExit2("known-bounds mode needs --a and --b (or pass --unknown-bounds)", 1)
        bounds = model.KnownBounds(m.a, m.b)
    return model.QqrConfig(bounds, R=m.R, allow_degenerate=m.allow_degenerate, settings=settings)


def _write_result(outdir: Path, result: qqr.QqrResult, manifest: RunManifest) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "result.json").write_text(qqr.result_to_json(result, manifest.to_dict()))
    with (outdir / "matrix.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", *result.labels])
        for i, lab in enumerate(result.labels):
            w.writerow([lab] + [f"{result.W[i, j]:.6f}" for j in range(result.n)])
    sol = result.solution
    lines = [
        f"status: {result.status}",
        f"objective: {result.objective:.6f}",
        f"a_star: {result.a_star:.6f}",
        f"b_star: {result.b_star:.6f}",
        f"R: {result.R:.6f}",
        f"boundary_report: at_lower={result.boundary_report.at_lower} "
        f"at_upper={result.boundary_report.at_upper} tol={result.boundary_report.tol:.2e}",
    ]
    if result.margin is not None:
        lines.append(f"phase1_margin: {result.margin:.6e}")
    if sol is not None:
        lines += [f"iterations: {sol.iterations}",
                  f"primal_residual: {sol.primal_residual:.3e}",
                  f"dual_residual: {sol.dual_residual:.3e}",
                  f"max_violation: {sol.max_violation:.3e}"]
    (outdir / "run.log").write_text("\n".join(lines) + "\n")


def cmd_quantify(m: RunManifest, verbose: bool) -> int:
    data = _load_data(m)
    settings = _settings(m, verbose)
    outdir = Path(m.out)
    try:
        result = qqr.quantify(data, _config(m, settings))
    except qqr.InfeasibleError as e:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "result.json").write_text(json.dumps(
            {"status": "infeasible", "margin": e.margin, "R": e.R,
             "manifest": m.to_dict()}, indent=1))
        print(f"infeasible: {e}", file=sys.stderr)
        return 2
    except IterationLimitError as e:
        partial = e.solution
        if isinstance(partial, qqr.QqrResult):
            _write_result(outdir, partial, m)
        print(f"iteration limit: {e}", file=sys.stderr)
        return 3
    _write_result(outdir, result, m)
    print(f"status={result.status} objective={result.objective:.4f} "
          f"a*={result.a_star:.4f} b*={result.b_star:.4f} R={result.R:.4f}")
    return 0


def cmd_scan_r(m: RunManifest, verbose: bool) -> int:
    data = _load_data(m)
    if m.a is None or m.b is None or not m.scan:
        raise SystemExit2("scan-r needs --a, --b and --scan LO..HI", 1)
    try:
        lo, hi = (float(t) for t in m.scan.split("..", 1))
    except ValueError:
        raise SystemExit2(f"cannot parse --scan {m.scan!r}; expected LO..HI", 1) from None
    try:
        report = qqr.scan_min_R(data, m.a, m.b, (lo, hi), tol_R=m.scan_tol,
                                settings=_settings(m, verbose))
    except qqr.BracketError as e:
        print(f"bracket error: {e}", file=sys.stderr)
        return 2
    outdir = Path(m.out)
    outdir.mkdir(parents=True, exist_ok=True)
    report["manifest"] = m.to_dict()
    (outdir / "scan.json").write_text(json.dumps(report, indent=1))
    print(f"R_border={report['R_border']:.6f} R_recommended={report['R_recommended']:.6f}")
    return 0


def cmd_anova(result_path: str, m: RunManifest, verbose: bool) -> int:
    result = qqr.result_from_json(Path(result_path).read_text())
    if result.status != "optimal":
        raise SystemExit2(f"result status is {result.status!r}; anova needs an optimal result", 1)
    spec = spectral.spectrum(result.W)
    k = m.k if m.k is not None else spectral.select_k(spec)
    df = spectral.mc_pseudo_df(result.n, replicates=m.df_replicates, seed=m.seed)
    table = spectral.anova(result.W, k, df)
    outdir = Path(m.out)
    outdir.mkdir(parents=True, exist_ok=True)
    doc = table.to_dict()
    doc["pseudo_df"] = df.to_dict()
    doc["eigenvalues"] = [float(x) for x in spec.eigenvalues]
    doc["trace_share"] = [float(x) for x in spec.trace_share()]
    doc["manifest"] = m.to_dict()
    (outdir / "anova.json").write_text(json.dumps(doc, indent=1))
    (outdir / "anova.txt").write_text(table.to_text() + "\n")
    print(table.to_text())
    return 0


def cmd_plot(result_path: str, kind: str, m: RunManifest, ref: str | None, verbose: bool) -> int:
    result = qqr.result_from_json(Path(result_path).read_text())
    if result.status != "optimal":
        raise SystemExit2(f"result status is {result.status!r}; plot needs an optimal result", 1)
    spec = spectral.spectrum(result.W)
    outdir = Path(m.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if kind == "scatter":
        if not ref:
            raise SystemExit2("scatter needs --ref CSV with columns i,j,value", 1)
        rows = list(csv.DictReader(Path(ref).read_text().splitlines()))
        if not rows or not {"i", "j", "value"} <= set(rows[0]):
            raise SystemExit2("--ref must have header i,j,value", 1)
        index = {lab: i for i, lab in enumerate(result.labels)}
        xs, ys = [], []
        for r in rows:
            try:
                i, j = index[r["i"]], index[r["j"]]
            except KeyError as e:
                raise SystemExit2(f"reference row names unknown label {e}", 1) from None
            xs.append(float(r["value"]))
            ys.append(result.value(i, j))
        doc = svg.scatter(xs, ys, "quantified vs reference", "reference value", "quantified value")
    elif kind == "map":
        coords = spectral.pca_coords(spec, 2)
        doc = svg.vector_map([(float(c[0]), float(c[1])) for c in coords],
                             result.labels, "first two components")
    elif kind == "components":
        k = m.k if m.k is not None else min(6, result.n)
        series = [spec.vectors[:, i].tolist() for i in range(k)]
        doc = svg.traces(series, [f"comp {i + 1}" for i in range(k)], "leading component loadings")
    else:
        raise SystemExit2(f"unknown plot kind {kind!r}", 1)
    path = outdir / f"plot_{kind}.svg"
    path.write_text(doc)
    print(str(path))
    return 0


def cmd_export(m: RunManifest) -> int:
    data = _load_data(m)
    text = model.serialize_classification(data, m.format)
    outdir = Path(m.out)
    outdir.mkdir(parents=True, exist_ok=True)
    name = m.dataset or Path(m.input).stem
    path = outdir / f"{name}.{m.format}"
    path.write_text(text)
    print(str(path))
    return 0


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--dataset", choices=["table1", "table2", "imaging"])
    sp.add_argument("--input", help="classification file path")
    sp.add_argument("--format", default="csv", choices=["csv", "json"])
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--R", type=float)
    sp.add_argument("--unknown-bounds", action="store_true")
    sp.add_argument("--restriction", default="sum", choices=["sum", "none"])
    sp.add_argument("--allow-degenerate", action="store_true")
    sp.add_argument("--scan", help="R bracket LO..HI")
    sp.add_argument("--scan-tol", type=float, default=1e-4)
    sp.add_argument("--k", type=int)
    sp.add_argument("--df-replicates", type=int, default=20_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=".")
    sp.add_argument("--eps-abs", type=float)
    sp.add_argument("--eps-rel", type=float)
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--verbose", action="store_true")


def _manifest(args: argparse.Namespace, command: str) -> RunManifest:
    return RunManifest(command=command, dataset=args.dataset, input=args.input,
                       format=args.format, a=args.a, b=args.b, R=args.R,
                       unknown_bounds=args.unknown_bounds, restriction=args.restriction,
                       allow_degenerate=args.allow_degenerate, scan=args.scan,
                       scan_tol=args.scan_tol, k=args.k, df_replicates=args.df_replicates,
                       seed=args.seed, out=args.out, eps_abs=args.eps_abs,
                       eps_rel=args.eps_rel, max_iter=args.max_iter)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="pairquant",
                                     description="quantify pairwise interactions from ternary pair classes")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("quantify", "scan-r", "export"):
        sp = sub.add_parser(name)
        _add_common(sp)
    for name in ("anova", "plot"):
        sp = sub.add_parser(name)
        sp.add_argument("result", help="path to a result.json")
        if name == "plot":
            sp.add_argument("--kind", default="map", choices=["scatter", "map", "components"])
            sp.add_argument("--ref", help="reference CSV (i,j,value) for scatter")
        _add_common(sp)
    args = parser.parse_args(argv)

    try:
        m = _manifest(args, args.command)
        if args.command == "quantify":
            return cmd_quantify(m, args.verbose)
        if args.command == "scan-r":
            return cmd_scan_r(m, args.verbose)
        if args.command == "anova":
            return cmd_anova(args.result, m, args.verbose)
        if args.command == "plot":
            return cmd_plot(args.result, args.kind, m, args.ref, args.verbose)
        if args.command == "export":
            return cmd_export(m)
        raise SystemExit2(f"unknown command {args.command}", 1)
    except SystemExit2 as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (model.ModelError, OSError, KeyError, spectral.DfMismatch) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
