"""Command-line entry point: select, bench, demand, signtest.

Exit codes: 0 ok, 2 bad input (parse/validation), 3 domain error.
"""
from __future__ import annotations

import argparse
import csv
import io as _stdio
import sys
from pathlib import Path

import numpy as np

from . import io
from .baselines import PRUNER_KINDS, run_pruner
from .cues import PromptSpec, apply_cue_ablations, build_cues
from .embedding import EmbeddingProvider, MissingEmbedding
from .harness import (
    DEFAULT_SWEEPS,
    BatteryConfig,
    run_battery,
    run_sweeps,
    sign_test,
    summarize,
    token_demand,
)
from .model import HyperParams, InvalidArgument, TokenGrid, make_budget
from .search import select
from .sensing import build_bank, odor_field

EXIT_INPUT = 2
EXIT_DOMAIN = 3


class InputError(Exception):
    """Bad command-line input; reported on stderr with exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _hyperparams(params: dict | None) -> HyperParams:
    try:
        return HyperParams().with_overrides(params or {})
    except InvalidArgument as e:
        raise InputError(f"params: {e}") from None


def _load_grid(instance: dict, tensor_path) -> TokenGrid:
    g = instance["grid"]
    tensors = io.read_f3t(tensor_path)
    key = g["tensor_key"]
    if key not in tensors:
        raise InputError(f"{tensor_path}: no tensor named {key!r}")
    arr = tensors[key].astype(np.float64)
    rows, cols = g["rows"], g["cols"]
    if arr.ndim == 3 and arr.shape[:2] != (rows, cols):
        raise InputError(f"tensor {key!r} has shape {arr.shape}, instance declares {rows}x{cols}")
    if arr.ndim == 2 and arr.shape[0] != rows * cols:
        raise InputError(f"tensor {key!r} has {arr.shape[0]} tokens, instance declares {rows}x{cols}")
    if arr.ndim not in (2, 3):
        raise InputError(f"tensor {key!r} must have rank 2 or 3, got {arr.ndim}")
    return TokenGrid(rows, cols, arr)


def _prompt(instance: dict) -> PromptSpec:
    p = instance["prompt"]
    opts = p.get("options")
    return PromptSpec(
        p["question"],
        tuple((o["letter"], o["text"]) for o in opts) if opts else None,
        p.get("task_hint"),
        p.get("target_phrase"),
    )


def cmd_select(args) -> int:
    instance = io.load_instance(args.instance)
    grid = _load_grid(instance, args.tensors)
    hp = _hyperparams(instance.get("params"))
    method = args.method or instance.get("method", "f3a")
    provider = EmbeddingProvider.from_file(args.embeddings) if args.embeddings else EmbeddingProvider()
    cues = build_cues(_prompt(instance), provider, hp)
    bank = build_bank(hp, grid.dim_v, cues.dim_t)
    ratio = instance["budget"]["ratio"]

    if method == "f3a":
        trace = select(grid, cues, bank, hp, make_budget(ratio, grid.n))
        final, sizes, odor = trace.final, trace.stage_sizes(), trace.odor
        trace_doc = trace.to_dict()
    else:
        final = run_pruner(method, grid, cues, bank, hp, ratio)
        sizes = {"final": len(final)}
        odor = odor_field(bank, grid, apply_cue_ablations(cues, hp), hp).a
        trace_doc = {"K": len(final), "method": method, "final": final,
                     "coords": [list(divmod(i, grid.cols)) for i in final],
                     "odor": [float(x) for x in odor]}

    result = {
        "indices": final,
        "coords": [list(divmod(i, grid.cols)) for i in final],
        "K": len(final),
        "method": method,
        "stage_sizes": sizes,
    }
    text = io.dump_json(result)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.trace:
        io.dump_json(trace_doc, args.trace)
    if args.heatmap:
        base = Path(args.heatmap)
        pgm = base if base.suffix == ".pgm" else base.with_suffix(".pgm")
        io.write_pgm(pgm, odor, grid.rows, grid.cols)
        io.write_ppm_overlay(pgm.with_suffix(".ppm"), odor, final, grid.rows, grid.cols)
    return 0


def _battery_config(doc: dict) -> BatteryConfig:
    kw = {k: doc[k] for k in ("rows", "cols", "d_v", "d_t", "sweep_ratio", "sweep_method") if k in doc}
    if "seeds" in doc:
        s = doc["seeds"]
        kw["seeds"] = tuple(range(s)) if isinstance(s, int) else tuple(s)
    for k in ("ratios", "scenarios", "methods"):
        if k in doc:
            kw[k] = tuple(doc[k])
    if "params" in doc:
        _hyperparams(doc["params"])
        kw["params"] = dict(doc["params"])
    sweeps = doc.get("sweeps", False)
    if sweeps is True:
        kw["sweeps"] = DEFAULT_SWEEPS
    elif sweeps:
        kw["sweeps"] = tuple((s["group"], s["name"], s["value"]) for s in sweeps)
    return BatteryConfig(**kw)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def cmd_bench(args) -> int:
    doc = io.load_bench_config(args.config)
    cfg = _battery_config(doc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cells = summarize(run_battery(cfg))
    metric_keys = ["scenario", "method", "ratio", "n_tasks", "evidence_recall", "distractor_rate", "spatial_coverage"]
    _write_csv(out / "metrics.csv", metric_keys, [[c[k] for k in metric_keys] for c in cells])
    io.dump_json([{k: c[k] for k in metric_keys} for c in cells], out / "metrics.json")
    # wall-clock numbers vary run to run; kept apart so the metric files stay byte-stable
    _write_csv(out / "timing.csv", ["scenario", "method", "ratio", "runtime_ns"],
               [[c["scenario"], c["method"], c["ratio"], c["runtime_ns"]] for c in cells])

    written = ["metrics.csv", "metrics.json", "timing.csv"]
    if cfg.sweeps:
        sweep_rows = run_sweeps(cfg)
        keys = ["group", "setting", "mean_recall", "delta"]
        _write_csv(out / "sweeps.csv", keys, [[r[k] for k in keys] for r in sweep_rows])
        written.append("sweeps.csv")
    sys.stdout.write("".join(f"{out / name}\n" for name in written))
    return 0


def cmd_demand(args) -> int:
    path = args.curves or io.shipped_curves_path()
    curves = io.load_curves(path)
    taus = args.tau or [0.95, 0.97, 0.98]
    for t in taus:
        if not 0.0 < t <= 1.0:
            raise InputError(f"--tau values must lie in (0, 1], got {t}")
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "method", "tau", "r_tau"])
    for c in sorted(curves, key=lambda c: (c.model, c.method)):
        for t in taus:
            w.writerow([c.model, c.method, f"{t:g}", f"{token_demand(c, t):.1f}"])
    sys.stdout.write(buf.getvalue())
    return 0


def format_p(p: float) -> str:
    if p >= 1.0:
        return "1.0"
    mant, exp = f"{p:.4e}".split("e")
    return f"{mant}e{int(exp)}"


def cmd_signtest(args) -> int:
    if not 0 <= args.wins <= args.trials or args.trials < 1:
        raise InputError(f"need 0 <= wins <= trials and trials >= 1, got {args.wins}/{args.trials}")
    sys.stdout.write(format_p(sign_test(args.wins, args.trials)) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="f3a", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("select", help="select K visual tokens for one instance")
    s.add_argument("instance", help="instance JSON")
    s.add_argument("tensors", help="F3T file holding the visual tokens")
    s.add_argument("--method", choices=PRUNER_KINDS)
    s.add_argument("--out", help="write the selection JSON here instead of stdout")
    s.add_argument("--trace", metavar="PATH", help="write the full stage trace JSON")
    s.add_argument("--heatmap", metavar="PATH", help="odor field as PGM plus a PPM selection overlay")
    s.add_argument("--embeddings", metavar="PATH", help="F3T table of text embeddings (default: hashed words)")
    s.set_defaults(func=cmd_select)

    b = sub.add_parser("bench", help="run the synthetic battery")
    b.add_argument("config", help="battery config JSON")
    b.add_argument("--out", default="bench_out", help="output directory")
    b.set_defaults(func=cmd_bench)

    d = sub.add_parser("demand", help="fixed-fidelity token demand per curve")
    d.add_argument("curves", nargs="?", help="CSV with model,method,rho,accuracy (default: shipped table)")
    d.add_argument("--tau", type=float, action="append", help="fidelity target, repeatable")
    d.set_defaults(func=cmd_demand)

    t = sub.add_parser("signtest", help="two-sided exact sign test")
    t.add_argument("--wins", type=int, required=True)
    t.add_argument("--trials", type=int, required=True)
    t.set_defaults(func=cmd_signtest)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (InputError, io.FormatError, MissingEmbedding) as e:
        msg = str(e).replace("\n", " ")
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except InvalidArgument as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
