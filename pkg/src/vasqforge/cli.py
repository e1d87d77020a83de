"""``vasqforge`` command line: generate, sweep, validate-murray, metrics.

Exit codes: 0 success, 2 configuration or usage error, 3 IO error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .core import BinaryMask, NoBifurcationError, ParameterError, VasqError, load_forest
from .pipeline import PRESETS, ConfigError, EngineConfig, generate_one
from .placement import derive_seed
from .validate import cl_dice, murray_mask, murray_tree, structural_stats

log = logging.getLogger("vasqforge")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

SWEEP_COLUMNS = ["param", "value", "mean_density", "mean_branch_count", "mean_tortuosity",
                 "mean_radius", "mean_nodes", "mean_edge_length"]
METRIC_COLUMNS = ["file", "dsc", "cl_dice", "t_prec", "t_sens"]


class UsageError(Exception):
    pass


def worker_count() -> int:
    raw = os.environ.get("VASQFORGE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"VASQFORGE_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise UsageError("VASQFORGE_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.6f}"


def _pmap(fn, items, workers):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


# --------------------------------------------------------------------- generate


def _generate_task(job):
    cfg, index, seed, out, save_forest = job
    sample = generate_one(cfg, index, seed)
    out = Path(out)
    entry = sample.summary()
    entry["mask"] = f"mask_{index:05d}.png"
    entry["skeleton"] = f"skel_{index:05d}.png"
    sample.mask.save_png(out / entry["mask"])
    sample.skeleton.save_png(out / entry["skeleton"])
    if save_forest:
        entry["forest"] = f"forest_{index:05d}.json"
        (out / entry["forest"]).write_text(json.dumps(sample.forest.to_dict(), sort_keys=True))
    return entry


def cmd_generate(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    cfg = EngineConfig.load(args.config)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        log.error("cannot write to %s: %s", out, exc)
        return EXIT_IO
    jobs = [(cfg, i, derive_seed(args.seed, i), str(out), args.save_forest) for i in range(args.count)]
    entries = _pmap(_generate_task, jobs, worker_count())
    manifest = {
        "tool": "vasqforge",
        "version": __version__,
        "config": cfg.raw,
        "config_hash": cfg.digest(),
        "master_seed": args.seed,
        "count": args.count,
        "images": entries,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    nodes = [e["nodes"] for e in entries]
    print(f"wrote {len(entries)} masks to {out} (mean nodes {statistics.fmean(nodes):.1f})")
    return EXIT_OK


# ------------------------------------------------------------------------ sweep


def _sweep_task(job):
    cfg, seed = job
    sample = generate_one(cfg, 0, seed)
    st = structural_stats(sample.mask)
    lengths = sample.forest.edge_lengths()
    return st, len(sample.forest), float(lengths.sum()), len(lengths)


def sweep_rows(cfg: EngineConfig, param: str, values, per: int, seed: int, workers: int = 1):
    rows = []
    for v in values:
        try:
            vcfg = cfg.with_growth(**{param: v})
        except ConfigError as exc:
            log.warning("skipping %s=%s: %s", param, v, exc)
            rows.append([param, f"{v:g}"] + [""] * (len(SWEEP_COLUMNS) - 2))
            continue
        res = _pmap(_sweep_task, [(vcfg, derive_seed(seed, i)) for i in range(per)], workers)
        stats = [r[0] for r in res]
        n_edges = sum(r[3] for r in res)
        rows.append([
            param, f"{v:g}",
            _fmt(statistics.fmean(s.vessel_density for s in stats)),
            _fmt(statistics.fmean(s.branch_count for s in stats)),
            _fmt(statistics.fmean(s.mean_tortuosity for s in stats)),
            _fmt(statistics.fmean(s.mean_radius for s in stats)),
            _fmt(statistics.fmean(r[1] for r in res)),
            _fmt(sum(r[2] for r in res) / n_edges if n_edges else None),
        ])
    return rows


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_sweep(args) -> int:
    if args.per < 1:
        raise UsageError("--per must be >= 1")
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values must be comma-separated numbers, got {args.values!r}")
    if not values:
        raise UsageError("--values is empty")
    cfg = EngineConfig.load(args.config)
    rows = sweep_rows(cfg, args.param, values, args.per, args.seed, worker_count())
    try:
        _write_csv(args.out, SWEEP_COLUMNS, rows)
    except OSError as exc:
        log.error("cannot write %s: %s", args.out, exc)
        return EXIT_IO
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


# --------------------------------------------------------------- validate-murray


def _murray_task(job):
    path, gamma, offset = job
    entry = {"file": Path(path).name}
    try:
        rep = murray_mask(BinaryMask.load_png(path), gamma, offset)
    except NoBifurcationError:
        entry["status"] = "no-bifurcation"
        return entry
    entry["status"] = "ok"
    entry.update(rep.to_dict())
    return entry


def summarize_cs(entries) -> str:
    scores = [e["compliance_score"] * 100 for e in entries if e["status"] == "ok"]
    n = len(entries)
    if not scores:
        return f"CS: n/a (0 valid / {n} masks)"
    sd = statistics.stdev(scores) if len(scores) > 1 else 0.0
    return f"CS: {statistics.fmean(scores):.2f} ± {sd:.2f} ({len(scores)} valid / {n} masks)"


def _mask_files(d: Path, pattern: str | None) -> list[Path]:
    # a generate output folder also holds skeleton PNGs; its manifest names the masks
    manifest = d / "manifest.json"
    if pattern is None and manifest.is_file():
        images = json.loads(manifest.read_text())["images"]
        return [d / e["mask"] for e in images]
    return sorted(p for p in d.glob(pattern or "*.png") if p.is_file())


def cmd_validate_murray(args) -> int:
    if args.offset < 1:
        raise UsageError("--offset must be >= 1")
    if args.forest:
        path = Path(args.forest)
        if not path.is_file():
            raise UsageError(f"forest file {path} does not exist")
        forest = load_forest(path)
        entry = {"file": path.name}
        try:
            entry.update(murray_tree(forest, args.gamma).to_dict())
            entry["status"] = "ok"
        except NoBifurcationError:
            entry["status"] = "no-bifurcation"
        entries = [entry]
    else:
        d = Path(args.masks)
        if not d.is_dir():
            raise UsageError(f"mask directory {d} does not exist")
        files = _mask_files(d, args.pattern)
        entries = _pmap(_murray_task, [(str(p), args.gamma, args.offset) for p in files], worker_count())
    summary = summarize_cs(entries)
    report = {"gamma": args.gamma, "offset": args.offset, "summary": summary, "masks": entries}
    if args.out:
        try:
            Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
        except OSError as exc:
            log.error("cannot write %s: %s", args.out, exc)
            return EXIT_IO
    print(summary)
    return EXIT_OK


# ---------------------------------------------------------------------- metrics


def cmd_metrics(args) -> int:
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    for d in (pred_dir, gt_dir):
        if not d.is_dir():
            raise UsageError(f"directory {d} does not exist")
    pred = {p.name for p in pred_dir.iterdir() if p.suffix.lower() == ".png"}
    gt = {p.name for p in gt_dir.iterdir() if p.suffix.lower() == ".png"}
    unmatched = sorted(pred ^ gt)
    if unmatched:
        raise UsageError("unmatched files: " + ", ".join(unmatched))
    rows, acc = [], []
    for name in sorted(pred):
        try:
            m = cl_dice(BinaryMask.load_png(pred_dir / name), BinaryMask.load_png(gt_dir / name))
        except ParameterError as exc:
            raise UsageError(f"{name}: {exc}")
        acc.append((m.dsc, m.cl_dice, m.t_prec, m.t_sens))
        rows.append([name, *(_fmt(v) for v in acc[-1])])
    if acc:
        rows.append(["mean", *(_fmt(v) for v in np.mean(acc, axis=0).tolist())])
    try:
        _write_csv(args.out, METRIC_COLUMNS, rows)
    except OSError as exc:
        log.error("cannot write %s: %s", args.out, exc)
        return EXIT_IO
    print(f"wrote {len(acc)} pairs to {args.out}")
    return EXIT_OK


# ------------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vasqforge", description="Procedural vessel-mask engine.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    cfg_help = f"preset name ({', '.join(PRESETS)}) or JSON config path"

    g = sub.add_parser("generate", help="generate a batch of masks")
    g.add_argument("config", help=cfg_help)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--save-forest", action="store_true", help="also write forest_NNNNN.json")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("sweep", help="sweep one growth parameter")
    s.add_argument("config", help=cfg_help)
    s.add_argument("--param", choices=["Da", "Dk", "Ls"], required=True)
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--per", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate-murray", help="Murray's-law compliance of masks or a forest")
    src = v.add_mutually_exclusive_group(required=True)
    src.add_argument("--masks")
    src.add_argument("--forest")
    v.add_argument("--pattern", help="glob for mask files (default: manifest masks, else *.png)")
    v.add_argument("--gamma", type=float, default=2.0)
    v.add_argument("--offset", type=int, default=3)
    v.add_argument("--out", help="report JSON path")
    v.set_defaults(func=cmd_validate_murray)

    m = sub.add_parser("metrics", help="DSC and clDice between two mask folders")
    m.add_argument("--pred", required=True)
    m.add_argument("--gt", required=True)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except VasqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
