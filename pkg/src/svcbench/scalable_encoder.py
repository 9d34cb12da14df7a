"""GOP scheduling, spatial layers, and the per-frame / per-sequence encode loop.

Key pictures are intra-only; everything else is a hierarchical B-picture
whose references sit at strictly lower temporal levels. Frames of one
temporal level are mutually independent, so they may be encoded in
parallel; aggregation is always done in frame-index order, which keeps
reports byte-identical for any worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .block_metrics import MB_SIZE, dcog, frame_psnr_y, sod
from .mode_classifier import (
    BASELINE_PLAN,
    DEFAULT_THRESHOLDS,
    MbClass,
    Mode,
    Thresholds,
    classify_mb,
    plan_for_class,
)
from .motion_search import (
    DIR_NONE,
    MbContext,
    MotionVector,
    ZERO_MV,
    choose_mb_mode,
    intra_dc_cost,
    median_pmv,
)
from .video_io import Frame, Sequence, downsample_2x2, upsample_plane_2x

STRATEGY_PROPOSED = "proposed"
STRATEGY_BASELINE = "baseline"

KEY = "KEY"
B = "B"

CLASS_NAMES = [c.name for c in MbClass]
MODE_NAMES = [m.value for m in Mode]


@dataclass(frozen=True)
class GopEntry:
    index: int
    level: int
    kind: str
    fwd_ref: int | None = None
    bwd_ref: int | None = None


def build_gop_schedule(gop_size: int, num_frames: int) -> list[GopEntry]:
    """Dyadic hierarchical-B schedule with keys every gop_size frames.

    A trailing partial GOP is closed by promoting the final frame to KEY so
    every B-picture keeps a reference on each side.
    """
    if gop_size < 1 or gop_size & (gop_size - 1):
        raise ValueError(f"gop_size {gop_size} is not a power of two")
    if num_frames < 1:
        raise ValueError("need at least one frame")
    n_levels = gop_size.bit_length() - 1
    last = num_frames - 1
    entries = []
    for i in range(num_frames):
        o = i % gop_size
        if o == 0 or i == last:
            entries.append(GopEntry(i, 0, KEY))
            continue
        tz = (o & -o).bit_length() - 1
        entries.append(
            GopEntry(i, n_levels - tz, B, i - (o & -o), min(i + (o & -o), last))
        )
    return entries


@dataclass
class MbRow:
    """Per-macroblock diagnostics used by class maps and the tests."""

    frame: int
    mb_x: int
    mb_y: int
    sod: int
    dcog: float
    mb_class: str
    mode: str
    direction: str
    mv_dx: int
    mv_dy: int
    residual_nonzero: bool


@dataclass
class FrameStats:
    index: int
    level: int
    kind: str
    qp: int
    bits: int = 0
    evaluations: int = 0
    psnr: float = 0.0
    class_counts: dict = field(default_factory=dict)
    mode_counts: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)


def _bump(counts: dict, key: str):
    counts[key] = counts.get(key, 0) + 1


def encode_frame(src: Frame, entry: GopEntry, fwd: Frame | None, bwd: Frame | None,
                 il_plane: np.ndarray | None, qp: int, strategy: str,
                 thresholds: Thresholds = DEFAULT_THRESHOLDS,
                 collect_rows: bool = False, fwd_src: Frame | None = None):
    """Encode one frame against reconstructed references.

    Classification is a pre-analysis step: SOD/DCOG compare the source
    frame with the forward reference's *source* (so undisturbed content is
    exactly class C1 regardless of how coarsely the reference was coded).
    Prediction and reconstruction use the reconstructed references.

    Returns (reconstructed Frame, FrameStats). Chroma is copied through;
    all decisions and measurements are luma-only.
    """
    h, w = src.y.shape
    cols, rows_n = w // MB_SIZE, h // MB_SIZE
    recon_y = np.empty_like(src.y)
    stats = FrameStats(src.index, entry.level, entry.kind, qp)

    if entry.kind == KEY:
        for mb_y in range(rows_n):
            for mb_x in range(cols):
                px, py = mb_x * MB_SIZE, mb_y * MB_SIZE
                cand = intra_dc_cost(src.y, px, py, recon_y, qp)
                recon_y[py : py + MB_SIZE, px : px + MB_SIZE] = cand.recon
                stats.bits += cand.bits
                stats.evaluations += cand.evaluations
                _bump(stats.mode_counts, cand.mode.value)
                if collect_rows:
                    stats.rows.append(MbRow(src.index, mb_x, mb_y, 0, 0.0, KEY,
                                            cand.mode.value, DIR_NONE, 0, 0,
                                            cand.residual_nonzero))
    else:
        if fwd is None or bwd is None:
            raise ValueError(f"frame {src.index}: B-picture is missing a reference")
        cls_plane = (fwd_src if fwd_src is not None else fwd).y
        mvx = np.zeros((rows_n, cols), dtype=np.int32)
        mvy = np.zeros((rows_n, cols), dtype=np.int32)
        have_mv = np.zeros((rows_n, cols), dtype=bool)

        def neighbor(mb_x, mb_y):
            if 0 <= mb_x < cols and 0 <= mb_y < rows_n and have_mv[mb_y, mb_x]:
                return MotionVector(int(mvx[mb_y, mb_x]), int(mvy[mb_y, mb_x]))
            return None

        for mb_y in range(rows_n):
            for mb_x in range(cols):
                px, py = mb_x * MB_SIZE, mb_y * MB_SIZE
                cur = src.y[py : py + MB_SIZE, px : px + MB_SIZE]
                ref = cls_plane[py : py + MB_SIZE, px : px + MB_SIZE]
                mb_sod = sod(cur, ref)
                mb_dcog = dcog(cur, ref)
                if strategy == STRATEGY_PROPOSED:
                    plan = plan_for_class(classify_mb(mb_sod, mb_dcog, qp, thresholds))
                else:
                    plan = BASELINE_PLAN
                pmv = median_pmv(neighbor(mb_x - 1, mb_y), neighbor(mb_x, mb_y - 1),
                                 neighbor(mb_x + 1, mb_y - 1))
                ctx = MbContext(src.y, px, py, fwd.y, bwd.y, il_plane, pmv, recon_y,
                                cls_plane)
                dec = choose_mb_mode(ctx, plan, qp)
                best = dec.best
                recon_y[py : py + MB_SIZE, px : px + MB_SIZE] = best.recon
                mv = best.mvs[0] if best.mvs else ZERO_MV
                mvx[mb_y, mb_x], mvy[mb_y, mb_x] = mv.dx, mv.dy
                have_mv[mb_y, mb_x] = True
                stats.bits += best.bits
                stats.evaluations += dec.evaluations
                _bump(stats.class_counts, plan.mb_class.name)
                _bump(stats.mode_counts, best.mode.value)
                if collect_rows:
                    stats.rows.append(MbRow(src.index, mb_x, mb_y, mb_sod, mb_dcog,
                                            plan.mb_class.name, best.mode.value,
                                            best.direction, mv.dx, mv.dy,
                                            best.residual_nonzero))

    recon = Frame(src.index, recon_y, src.u.copy(), src.v.copy())
    stats.psnr = frame_psnr_y(src, recon)
    return recon, stats


def _encode_frame_task(args):
    return encode_frame(*args)


@dataclass
class LayerReport:
    name: str
    width: int
    height: int
    fps_num: int
    fps_den: int
    qp_label: str
    frame_count: int = 0
    mb_total: int = 0
    mb_classified: int = 0
    psnr_mean: float = 0.0
    bits_total: int = 0
    rate_kbps: float = 0.0
    evaluations: int = 0
    class_counts: dict = field(default_factory=dict)
    mode_counts: dict = field(default_factory=dict)
    frames: list = field(default_factory=list)
    wall_ms: float = 0.0  # measured, never serialised (reports must be reproducible)


@dataclass
class RdPointOut:
    layer: str
    qp: int
    rate_kbps: float
    psnr_db: float


@dataclass
class EncodeReport:
    strategy: str
    gop_size: int
    qp: tuple
    thresholds: Thresholds
    layers: list = field(default_factory=list)
    rd_points: list = field(default_factory=list)

    @property
    def evaluations(self) -> int:
        return sum(l.evaluations for l in self.layers)

    @property
    def wall_ms(self) -> float:
        return sum(l.wall_ms for l in self.layers)


@dataclass
class RunConfig:
    gop_size: int = 16
    qp: tuple = (24, 28, 32)  # (BL, non-top EL, top-level EL)
    thresholds: Thresholds = DEFAULT_THRESHOLDS
    layers: str = "scalable"  # or "single"
    jobs: int = 1
    collect_rows: bool = False

    def validate(self):
        for q in self.qp:
            if not 0 <= q <= 51:
                raise ValueError(f"qp {q} outside [0, 51]")
        if len(self.qp) != 3:
            raise ValueError("qp must be a (BL, EL1, EL2) triple")
        if self.layers not in ("scalable", "single"):
            raise ValueError(f"unknown layer mode {self.layers!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        return self


def build_layer_inputs(source: Sequence, config: RunConfig):
    """Base layer = 2x2-pooled even frames at half rate; enhancement = source."""
    if config.layers == "single":
        return [("single", source)]
    if source.width % 32 or source.height % 32:
        raise ValueError("source too small to downsample (dimensions must divide 32)")
    if len(source.frames) < 2:
        raise ValueError("need at least two frames for a scalable encode")
    bl_frames = []
    for i, f in enumerate(source.frames[::2]):
        g = downsample_2x2(f)
        g.index = i
        bl_frames.append(g)
    bl = Sequence(bl_frames, source.fps_num, source.fps_den * 2,
                  source.width // 2, source.height // 2).validate()
    return [("base", bl), ("enh", source)]


def _qp_for_entry(entry: GopEntry, layer_name: str, config: RunConfig) -> int:
    qp_bl, qp_el1, qp_el2 = config.qp
    if layer_name == "base":
        return qp_bl
    top = config.gop_size.bit_length() - 1
    if top > 0 and entry.level == top:
        return qp_el2
    return qp_el1


def encode_layer(seq: Sequence, layer_name: str, config: RunConfig, strategy: str,
                 il_planes: dict | None = None):
    """Encode one layer in decode order (temporal levels ascending)."""
    schedule = build_gop_schedule(config.gop_size, len(seq.frames))
    recons: dict[int, Frame] = {}
    stats: dict[int, FrameStats] = {}
    t0 = time.perf_counter()

    by_level: dict[int, list[GopEntry]] = {}
    for e in schedule:
        by_level.setdefault(e.level, []).append(e)

    pool = ProcessPoolExecutor(max_workers=config.jobs) if config.jobs > 1 else None
    try:
        for level in sorted(by_level):
            batch = sorted(by_level[level], key=lambda e: e.index)
            tasks = []
            for e in batch:
                fwd = recons[e.fwd_ref] if e.fwd_ref is not None else None
                bwd = recons[e.bwd_ref] if e.bwd_ref is not None else None
                fwd_src = seq.frames[e.fwd_ref] if e.fwd_ref is not None else None
                il = il_planes.get(e.index) if il_planes else None
                tasks.append((seq.frames[e.index], e, fwd, bwd, il,
                              _qp_for_entry(e, layer_name, config), strategy,
                              config.thresholds, config.collect_rows, fwd_src))
            if pool is not None and len(tasks) > 1:
                results = list(pool.map(_encode_frame_task, tasks, chunksize=1))
            else:
                results = [_encode_frame_task(t) for t in tasks]
            for e, (recon, fs) in zip(batch, results):
                recons[e.index] = recon
                stats[e.index] = fs
    finally:
        if pool is not None:
            pool.shutdown()

    wall_ms = (time.perf_counter() - t0) * 1000.0
    ordered = [stats[i] for i in range(len(seq.frames))]
    mbs_per_frame = (seq.width // MB_SIZE) * (seq.height // MB_SIZE)
    rep = LayerReport(layer_name, seq.width, seq.height, seq.fps_num, seq.fps_den,
                      qp_label="/".join(str(q) for q in config.qp))
    rep.frame_count = len(ordered)
    rep.mb_total = mbs_per_frame * len(ordered)
    rep.bits_total = sum(f.bits for f in ordered)
    rep.evaluations = sum(f.evaluations for f in ordered)
    rep.psnr_mean = sum(f.psnr for f in ordered) / len(ordered)
    rep.rate_kbps = rep.bits_total * seq.fps / len(ordered) / 1000.0
    for f in ordered:
        for k, v in f.class_counts.items():
            rep.class_counts[k] = rep.class_counts.get(k, 0) + v
        for k, v in f.mode_counts.items():
            rep.mode_counts[k] = rep.mode_counts.get(k, 0) + v
    rep.mb_classified = sum(rep.class_counts.values())
    rep.frames = ordered
    rep.wall_ms = wall_ms
    return recons, rep


def encode_sequence(source: Sequence, config: RunConfig, strategy: str) -> EncodeReport:
    """Encode all layers and assemble the aggregate report with RD points."""
    if strategy not in (STRATEGY_PROPOSED, STRATEGY_BASELINE):
        raise ValueError(f"unknown strategy {strategy!r}")
    config.validate()
    source.validate()
    report = EncodeReport(strategy, config.gop_size, config.qp, config.thresholds)

    layers = build_layer_inputs(source, config)
    bl_recons = None
    for layer_name, seq in layers:
        il_planes = None
        if layer_name == "enh":
            il_planes = {}
            for t in range(0, len(seq.frames), 2):
                bl = bl_recons.get(t // 2)
                if bl is not None:
                    il_planes[t] = upsample_plane_2x(bl.y)
        recons, rep = encode_layer(seq, layer_name, config, strategy, il_planes)
        if layer_name == "base":
            bl_recons = recons
        report.layers.append(rep)

    # RD points: the enhancement operating point pays for the base bits too.
    for rep in report.layers:
        rate = rep.rate_kbps
        if rep.name == "enh":
            base = report.layers[0]
            rate = (base.bits_total + rep.bits_total) * rep.fps_num / rep.fps_den \
                / rep.frame_count / 1000.0
        qp_top = config.qp[0] if rep.name == "base" else config.qp[2]
        report.rd_points.append(RdPointOut(rep.name, qp_top, rate, rep.psnr_mean))
    return report


def report_to_dict(report: EncodeReport, include_frames: bool = True) -> dict:
    """JSON-ready dict with a stable field order and no timing data."""
    t = report.thresholds
    out = {
        "strategy": report.strategy,
        "gop_size": report.gop_size,
        "qp": list(report.qp),
        "thresholds": {k: getattr(t, k) for k in ("k1", "k2", "k3", "d1", "d2", "d3")},
        "layers": [],
        "rd_points": [
            {"layer": p.layer, "qp": p.qp, "rate_kbps": p.rate_kbps, "psnr_db": p.psnr_db}
            for p in report.rd_points
        ],
    }
    for rep in report.layers:
        lay = {
            "name": rep.name,
            "width": rep.width,
            "height": rep.height,
            "fps": [rep.fps_num, rep.fps_den],
            "qp_label": rep.qp_label,
            "frame_count": rep.frame_count,
            "mb_total": rep.mb_total,
            "mb_classified": rep.mb_classified,
            "psnr_db_mean": rep.psnr_mean,
            "bits_total": rep.bits_total,
            "rate_kbps": rep.rate_kbps,
            "evaluations": rep.evaluations,
            "class_counts": {c: rep.class_counts.get(c, 0) for c in CLASS_NAMES},
            "mode_counts": {m: rep.mode_counts[m] for m in MODE_NAMES if m in rep.mode_counts},
        }
        if include_frames:
            lay["frames"] = [
                {
                    "index": f.index,
                    "level": f.level,
                    "kind": f.kind,
                    "qp": f.qp,
                    "bits": f.bits,
                    "evaluations": f.evaluations,
                    "psnr_db": f.psnr,
                }
                for f in rep.frames
            ]
        out["layers"].append(lay)
    return out
