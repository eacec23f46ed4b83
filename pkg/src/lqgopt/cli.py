"""Command-line interface.

Subcommands: ``check`` (plant assumptions and optional controller
admissibility), ``solve`` (one descent run to trace CSV plus final
controller document), ``compare`` (the three-cell comparison over a system
list, one trace CSV per run plus a summary CSV), ``oracle`` (Riccati-optimal
cost and controller), and ``hess-check`` (Hessian signature at the optimum).

Exit codes: 0 success, 1 domain or numerical failure, 2 usage/parse failure.
All output files are written only after the runs that feed them finish.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench, model, optimizer
from .config import RunConfigDocument, load_config
from .errors import ConfigError, LqgoptError
from .model import check_plant_data, is_admissible, lqg_riccati_optimum

TRACE_HEADER = "iter,cost,grad_norm,step,gap,wall_ms"
SUMMARY_HEADER = "system,algorithm,iters_to_1e-6,final_gap,wall_ms"


def fmt(x: float) -> str:
    """Positional decimal with at least 12 significant digits; exact round-trip."""
    return np.format_float_positional(
        float(x), unique=True, fractional=False, min_digits=12, trim="k"
    )


def trace_csv_lines(records) -> list[str]:
    lines = [TRACE_HEADER]
    for rec in records:
        gap = "" if rec.gap is None else fmt(rec.gap)
        lines.append(
            ",".join(
                (
                    str(rec.iter),
                    fmt(rec.cost),
                    fmt(rec.grad_norm),
                    fmt(rec.step),
                    gap,
                    fmt(rec.wall_ms),
                )
            )
        )
    return lines


def parse_trace_csv(text: str):
    """Round-trip reader for trace CSVs; raises ConfigError on schema drift."""
    lines = text.splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise ConfigError(f"trace header mismatch: {lines[0] if lines else '<empty>'!r}")
    records = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 6:
            raise ConfigError(f"trace row has {len(parts)} fields: {line!r}")
        records.append(
            optimizer.IterationRecord(
                iter=int(parts[0]),
                cost=float(parts[1]),
                grad_norm=float(parts[2]),
                step=float(parts[3]),
                gap=None if parts[4] == "" else float(parts[4]),
                wall_ms=float(parts[5]),
            )
        )
    return records


def controller_document(K: model.Controller) -> dict:
    return {
        "q": K.q,
        "A_K": K.A_K.tolist(),
        "B_K": K.B_K.tolist(),
        "C_K": K.C_K.tolist(),
    }


def _write(path: Path, text: str, quiet: bool) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    if not quiet:
        print(f"wrote {path}")


def _resolve(out_dir: Path, configured: str | None, default_name: str) -> Path:
    if configured:
        p = Path(configured)
        return p if p.is_absolute() else out_dir / p
    return out_dir / default_name


def _cmd_check(doc: RunConfigDocument, args) -> int:
    if doc.raw_plant is None:
        raise ConfigError("check requires a 'plant' section")
    checks = check_plant_data(**doc.raw_plant.matrices)
    ok = True
    for chk in checks:
        ok &= chk.ok
        status = "ok  " if chk.ok else "FAIL"
        detail = f" ({chk.detail})" if chk.detail and not chk.ok else ""
        if not args.quiet or not chk.ok:
            print(f"{status} {chk.name}{detail}")
    controller = doc.controller()
    if controller is not None:
        if ok:
            plant = doc.plant()
            report = is_admissible(plant, controller)
            if not args.quiet or not (report.stabilizing and report.minimal):
                print(
                    f"controller: stabilizing={report.stabilizing} "
                    f"minimal={report.minimal} "
                    f"spectral_abscissa={fmt(report.spectral_abscissa)} "
                    f"min_sv_ctrb={fmt(report.min_sv_ctrb)} "
                    f"min_sv_obsv={fmt(report.min_sv_obsv)}"
                )
            ok &= report.stabilizing and report.minimal
        else:
            print("controller: skipped (plant checks failed)")
    return 0 if ok else 1


def _cmd_solve(doc: RunConfigDocument, args) -> int:
    plant = doc.plant()
    cfg = doc.optimizer
    try:
        _, j_star = lqg_riccati_optimum(plant)
    except LqgoptError:
        j_star = None
        if not args.quiet:
            print("oracle unavailable; gap column left empty and halt rule inactive")
    K0 = doc.controller()
    if K0 is None:
        K0 = optimizer.random_minimal_init(plant, np.random.default_rng(cfg.seed))
    trace = optimizer.run(plant, K0, cfg, j_star)
    out_dir = Path(args.out_dir)
    _write(
        _resolve(out_dir, doc.output.trace_path, "trace.csv"),
        "\n".join(trace_csv_lines(trace.records)) + "\n",
        args.quiet,
    )
    _write(
        _resolve(out_dir, doc.output.controller_path, "controller.json"),
        json.dumps(controller_document(trace.final), indent=2) + "\n",
        args.quiet,
    )
    print(f"termination: {trace.termination}")
    if not args.quiet:
        last = trace.records[-1]
        gap = "n/a" if last.gap is None else fmt(last.gap)
        print(f"iterations: {last.iter}  cost: {fmt(last.cost)}  gap: {gap}")
    return 0


def _cmd_compare(doc: RunConfigDocument, args) -> int:
    if not doc.systems:
        raise ConfigError("compare requires a 'systems' section")
    suite = []
    for spec in doc.systems:
        suite.extend(spec.expand())
    result = bench.run_experiment(suite, doc.optimizer)
    out_dir = Path(args.out_dir)
    for (system, algo), trace in result.traces.items():
        _write(
            out_dir / f"{system}__{algo}.csv",
            "\n".join(trace_csv_lines(trace.records)) + "\n",
            args.quiet,
        )
    lines = [SUMMARY_HEADER]
    for row in result.summary:
        lines.append(
            ",".join(
                (
                    row.system,
                    row.algorithm,
                    "" if row.iters_to_target is None else str(row.iters_to_target),
                    "" if row.final_gap is None else fmt(row.final_gap),
                    fmt(row.wall_ms),
                )
            )
        )
    _write(
        _resolve(out_dir, doc.output.summary_path, "summary.csv"),
        "\n".join(lines) + "\n",
        args.quiet,
    )
    for key, exc in result.errors.items():
        print(f"run {key} failed: {exc}", file=sys.stderr)
    return 0 if not result.errors else 1


def _cmd_oracle(doc: RunConfigDocument, args) -> int:
    plant = doc.plant()
    K_star, j_star = lqg_riccati_optimum(plant)
    print(
        "J* = "
        + np.format_float_positional(
            j_star, precision=12, unique=False, fractional=False, trim="k"
        )
    )
    _write(
        _resolve(Path(args.out_dir), doc.output.controller_path, "controller.json"),
        json.dumps(controller_document(K_star), indent=2) + "\n",
        args.quiet,
    )
    return 0


def _cmd_hess_check(doc: RunConfigDocument, args) -> int:
    plant = doc.plant()
    report = bench.hessian_signature_check(plant, h=args.hess_h, zero_tol=args.hess_zero_tol)
    n_sq = report.n * report.n
    print(
        f"signature (s-,s0,s+) = {report.signature}, N={report.N}, n^2={n_sq}"
    )
    if not args.quiet:
        print("eigenvalues:", " ".join(fmt(v) for v in report.eigenvalues))
    return 0 if (report.s_zero == n_sq and report.s_minus == 0) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lqgopt",
        description="Output-feedback controller optimization by metric gradient descent",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("check", "validate plant assumptions and optional controller admissibility"),
        ("solve", "run one optimization and write trace + final controller"),
        ("compare", "run the three-method comparison over a system list"),
        ("oracle", "print the Riccati-optimal cost and write the optimal controller"),
        ("hess-check", "finite-difference Hessian signature at the optimum"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON run configuration")
        p.add_argument("--out-dir", default=".", help="directory for output files")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--quiet", action="store_true", help="suppress informational output")
        if name == "hess-check":
            p.add_argument("--hess-h", type=float, default=None, help="finite-difference step")
            p.add_argument(
                "--hess-zero-tol",
                type=float,
                default=1e-6,
                help="relative threshold for zero eigenvalues",
            )
    return parser


COMMANDS = {
    "check": _cmd_check,
    "solve": _cmd_solve,
    "compare": _cmd_compare,
    "oracle": _cmd_oracle,
    "hess-check": _cmd_hess_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc = load_config(args.config)
        if args.seed is not None:
            from dataclasses import replace

            doc = RunConfigDocument(
                raw_plant=doc.raw_plant,
                raw_controller=doc.raw_controller,
                optimizer=replace(doc.optimizer, seed=args.seed),
                output=doc.output,
                systems=doc.systems,
            )
        return COMMANDS[args.command](doc, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LqgoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
