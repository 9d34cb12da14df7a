"""Command-line front end.

Subcommands: synth (test clips), encode (one operating point), compare
(both strategies across a QP sweep, with BD deltas), bd (deltas between
two RD CSV files) and classify-map (per-MB diagnostics).

All file artifacts are written atomically and are byte-identical across
repeated runs with the same inputs; wall-clock timing goes to stderr only.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

from . import bd_metrics, synth, video_io
from .mode_classifier import MbClass, Thresholds
from .scalable_encoder import (
    STRATEGY_BASELINE,
    STRATEGY_PROPOSED,
    EncodeReport,
    RunConfig,
    encode_sequence,
    report_to_dict,
)

_CLASS_GRAY = {"C1": 64, "C2": 128, "C3": 192, "C4": 255, "KEY": 0}

# Simulation defaults: QP sweep as (BL, EL1, EL2) triples.
DEFAULT_QP_TRIPLES = ((16, 20, 24), (20, 24, 30), (24, 28, 32), (28, 32, 36))


def _write_atomic(path: str, data: bytes):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _with_suffix(path: str, *tags: str) -> str:
    stem, ext = os.path.splitext(path)
    return stem + "".join("." + t for t in tags) + ext


def _parse_fps(text: str):
    if ":" in text:
        num, den = text.split(":")
        return int(num), int(den)
    return int(text), 1


def _parse_size(text: str):
    if text.lower() in synth.SIZES:
        return synth.SIZES[text.lower()]
    w, _, h = text.lower().partition("x")
    return int(w), int(h)


def load_input(args) -> video_io.Sequence:
    path = args.input
    if path.endswith(".y4m"):
        with open(path, "rb") as fh:
            return video_io.parse_y4m(fh)
    if path.endswith(".yuv"):
        if not (args.width and args.height):
            raise ValueError("raw .yuv input needs --width and --height")
        num, den = _parse_fps(args.fps)
        return video_io.read_raw_yuv(path, args.width, args.height, num, den)
    raise ValueError(f"unrecognised input extension: {path!r}")


def _thresholds(args) -> Thresholds:
    return Thresholds(args.k1, args.k2, args.k3, args.d1, args.d2, args.d3)


def _config(args, qp_triple) -> RunConfig:
    return RunConfig(
        gop_size=args.gop,
        qp=tuple(qp_triple),
        thresholds=_thresholds(args),
        layers=args.layers,
        jobs=args.jobs,
    )


def _qp_triples(args):
    triples = []
    for spec in args.qp or []:
        parts = [int(p) for p in str(spec).replace("/", " ").split()]
        if len(parts) == 1:
            triples.append((parts[0], parts[0], parts[0]))
        elif len(parts) == 3:
            triples.append(tuple(parts))
        else:
            raise ValueError(f"--qp takes one value or a BL/EL1/EL2 triple, got {spec!r}")
    return triples or list(DEFAULT_QP_TRIPLES)


def _dump_json(obj) -> bytes:
    return (json.dumps(obj, indent=2) + "\n").encode()


def _rd_csv_bytes(rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["qp", "rate_kbps", "psnr_db"])
    for qp, rate, psnr in rows:
        w.writerow([qp, repr(float(rate)), repr(float(psnr))])
    return buf.getvalue().encode()


def _read_rd_csv(path):
    points = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            points.append(bd_metrics.RdPoint(float(row["rate_kbps"]), float(row["psnr_db"])))
    return points


def cmd_synth(args) -> int:
    width, height = _parse_size(args.size)
    fps = _parse_fps(args.fps)
    seq = synth.make_sequence(args.pattern, width, height, args.frames, args.seed, fps)
    sink = io.BytesIO()
    video_io.write_y4m(seq, sink)
    _write_atomic(args.out, sink.getvalue())
    print(f"wrote {args.out}: {args.pattern} {width}x{height} x{args.frames}", file=sys.stderr)
    return 0


def _encode_one(seq, args, qp_triple, strategy, collect_rows=False) -> EncodeReport:
    cfg = _config(args, qp_triple)
    cfg.collect_rows = collect_rows
    report = encode_sequence(seq, cfg, strategy)
    print(
        f"[{strategy}] qp {'/'.join(str(q) for q in qp_triple)}: "
        + ", ".join(
            f"{l.name} {l.psnr_mean:.2f} dB {l.rate_kbps:.1f} kbps"
            f" ({l.wall_ms:.0f} ms)" for l in report.layers
        ),
        file=sys.stderr,
    )
    return report


def _write_encode_artifacts(report: EncodeReport, args, tag: str | None):
    tags = (tag,) if tag else ()
    if args.report:
        _write_atomic(_with_suffix(args.report, *tags), _dump_json(report_to_dict(report)))
    if args.rd_csv:
        for p in report.rd_points:
            rows = [(p.qp, p.rate_kbps, p.psnr_db)]
            _write_atomic(_with_suffix(args.rd_csv, *tags, p.layer), _rd_csv_bytes(rows))


def cmd_encode(args) -> int:
    seq = load_input(args)
    triples = _qp_triples(args)
    if len(triples) != 1:
        raise ValueError("encode takes exactly one QP operating point; use compare for sweeps")
    strategies = (
        [STRATEGY_PROPOSED, STRATEGY_BASELINE]
        if args.strategy == "both"
        else [args.strategy]
    )
    for strategy in strategies:
        report = _encode_one(seq, args, triples[0], strategy)
        _write_encode_artifacts(report, args, tag=strategy if len(strategies) > 1 else None)
    return 0


def _curve_points(reports):
    """RD points of the top operating layer, one per QP triple."""
    pts = []
    for rep in reports:
        top = rep.rd_points[-1]
        pts.append(bd_metrics.RdPoint(top.rate_kbps, top.psnr_db))
    return pts


def cmd_compare(args) -> int:
    seq = load_input(args)
    triples = _qp_triples(args)
    runs = {}
    for strategy in (STRATEGY_BASELINE, STRATEGY_PROPOSED):
        runs[strategy] = [_encode_one(seq, args, t, strategy) for t in triples]

    rows = []
    for i, t in enumerate(triples):
        row = {"qp": "/".join(str(q) for q in t)}
        for strategy in (STRATEGY_BASELINE, STRATEGY_PROPOSED):
            rep = runs[strategy][i]
            top = rep.rd_points[-1]
            row[strategy] = {
                "rate_kbps": top.rate_kbps,
                "psnr_db": top.psnr_db,
                "evaluations": rep.evaluations,
                "wall_ms": rep.wall_ms,
            }
        rows.append(row)

    eval_base = sum(r.evaluations for r in runs[STRATEGY_BASELINE])
    eval_prop = sum(r.evaluations for r in runs[STRATEGY_PROPOSED])
    reduction = 100.0 * (1.0 - eval_prop / eval_base) if eval_base else 0.0

    bd_psnr_db = bd_rate_pct = None
    note = None
    if len(triples) >= 4:
        ref = _curve_points(runs[STRATEGY_BASELINE])
        test = _curve_points(runs[STRATEGY_PROPOSED])
        bd_psnr_db = bd_metrics.bd_psnr(ref, test)
        bd_rate_pct = bd_metrics.bd_rate(ref, test)
    else:
        note = "fewer than 4 QP points: BD metrics omitted"

    hdr = f"{'qp':>10} | {'base kbps':>10} {'base dB':>8} {'base evals':>12} {'base ms':>9}" \
          f" | {'prop kbps':>10} {'prop dB':>8} {'prop evals':>12} {'prop ms':>9}"
    print(hdr)
    print("-" * len(hdr))
    for row in rows:
        b, p = row[STRATEGY_BASELINE], row[STRATEGY_PROPOSED]
        print(
            f"{row['qp']:>10} | {b['rate_kbps']:>10.1f} {b['psnr_db']:>8.3f}"
            f" {b['evaluations']:>12d} {b['wall_ms']:>9.0f}"
            f" | {p['rate_kbps']:>10.1f} {p['psnr_db']:>8.3f}"
            f" {p['evaluations']:>12d} {p['wall_ms']:>9.0f}"
        )
    print(f"evaluation reduction: {reduction:.2f}%")
    if note:
        print(f"note: {note}")
    else:
        print(f"BD-PSNR {bd_psnr_db:+.4f} dB, BD-rate {bd_rate_pct:+.4f}%")

    if args.report:
        out = {
            "qp_points": [
                {
                    "qp": row["qp"],
                    "baseline": {k: row[STRATEGY_BASELINE][k] for k in
                                 ("rate_kbps", "psnr_db", "evaluations")},
                    "proposed": {k: row[STRATEGY_PROPOSED][k] for k in
                                 ("rate_kbps", "psnr_db", "evaluations")},
                }
                for row in rows
            ],
            "evaluation_reduction_pct": reduction,
            "bd_psnr_db": bd_psnr_db,
            "bd_rate_pct": bd_rate_pct,
            "note": note,
        }
        _write_atomic(args.report, _dump_json(out))
    if args.rd_csv:
        for strategy, reports in runs.items():
            by_layer = {}
            for rep in reports:
                for p in rep.rd_points:
                    by_layer.setdefault(p.layer, []).append((p.qp, p.rate_kbps, p.psnr_db))
            for layer, pts in by_layer.items():
                _write_atomic(_with_suffix(args.rd_csv, strategy, layer), _rd_csv_bytes(pts))
    return 0


def cmd_bd(args) -> int:
    ref = _read_rd_csv(args.ref_csv)
    test = _read_rd_csv(args.test_csv)
    print(f"BD-PSNR {bd_metrics.bd_psnr(ref, test):.4f} dB")
    print(f"BD-rate {bd_metrics.bd_rate(ref, test):.4f} %")
    return 0


def cmd_classify_map(args) -> int:
    seq = load_input(args)
    triples = _qp_triples(args)
    if len(triples) != 1:
        raise ValueError("classify-map takes exactly one QP operating point")
    report = _encode_one(seq, args, triples[0], args.strategy, collect_rows=True)

    for rep in report.layers:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["frame", "mb_x", "mb_y", "sod", "dcog", "class", "mode"])
        for fs in rep.frames:
            for r in fs.rows:
                w.writerow([r.frame, r.mb_x, r.mb_y, r.sod, f"{r.dcog:.4f}",
                            r.mb_class, r.mode])
        tag = (rep.name,) if len(report.layers) > 1 else ()
        _write_atomic(_with_suffix(args.map, *tag), buf.getvalue().encode())

        if args.pgm_dir:
            os.makedirs(args.pgm_dir, exist_ok=True)
            cols, rows_n = rep.width // 16, rep.height // 16
            for fs in rep.frames:
                img = bytearray(cols * rows_n)
                for r in fs.rows:
                    img[r.mb_y * cols + r.mb_x] = _CLASS_GRAY[r.mb_class]
                name = f"{rep.name}_{fs.index:04d}.pgm"
                header = f"P5\n{cols} {rows_n}\n255\n".encode()
                _write_atomic(os.path.join(args.pgm_dir, name), header + bytes(img))
    return 0


def _add_threshold_flags(p: argparse.ArgumentParser):
    for name, default in (("k1", 4.0), ("k2", 10.0), ("k3", 20.0),
                          ("d1", 0.5), ("d2", 1.5), ("d3", 3.0)):
        p.add_argument(f"--{name}", type=float, default=default)


def _add_encode_flags(p: argparse.ArgumentParser):
    p.add_argument("--input", required=True, help="input .y4m or raw .yuv")
    p.add_argument("--width", type=int, help="luma width for raw .yuv input")
    p.add_argument("--height", type=int, help="luma height for raw .yuv input")
    p.add_argument("--fps", default="30", help="frame rate for raw .yuv (num or num:den)")
    p.add_argument("--gop", type=int, default=16)
    p.add_argument("--qp", action="append",
                   help="QP operating point: one value or a BL/EL1/EL2 triple; repeatable")
    p.add_argument("--layers", choices=["single", "scalable"], default="scalable")
    p.add_argument("--jobs", type=int, default=1)
    _add_threshold_flags(p)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="svcbench",
                                 description="SVC mode-decision benchmark harness")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic test clip")
    p.add_argument("--pattern", required=True,
                   help="static | pan:DX,DY | object:SPEED | noise:AMP | mixed")
    p.add_argument("--size", default="cif", help="qcif | cif | 4cif | WxH")
    p.add_argument("--frames", type=int, default=33)
    p.add_argument("--fps", default="30")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("encode", help="encode one operating point")
    _add_encode_flags(p)
    p.add_argument("--strategy", choices=["proposed", "baseline", "both"],
                   default="proposed")
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--rd-csv", dest="rd_csv", help="RD point CSV path (per layer)")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("compare", help="run both strategies across a QP sweep")
    _add_encode_flags(p)
    p.add_argument("--report", help="JSON comparison path")
    p.add_argument("--rd-csv", dest="rd_csv", help="RD curve CSV prefix")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bd", help="Bjontegaard deltas between two RD CSV files")
    p.add_argument("ref_csv")
    p.add_argument("test_csv")
    p.set_defaults(func=cmd_bd)

    p = sub.add_parser("classify-map", help="dump per-MB class/mode decisions")
    _add_encode_flags(p)
    p.add_argument("--strategy", choices=["proposed", "baseline"], default="proposed")
    p.add_argument("--map", required=True, help="per-MB CSV path")
    p.add_argument("--pgm-dir", dest="pgm_dir", help="directory for per-frame PGM heat maps")
    p.set_defaults(func=cmd_classify_map)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
