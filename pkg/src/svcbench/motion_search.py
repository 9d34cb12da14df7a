"""Integer-pel block matching, partition-mode evaluation and per-MB mode choice.

The search minimises SAD + lambda_motion * mv_bits over every in-bounds
displacement within the active range; the mode decision minimises the
Lagrangian J = SSD(source, reconstruction) + lambda_mode * bits over the
plan's candidates. Ties always resolve the same way (smaller |dx|+|dy|,
then dy, then dx for displacements; first-listed candidate for modes), so
identical inputs give identical decisions on every backend.

Backward and bi-predictive candidates reuse the forward search: the
backward MV is the mirrored forward MV (clamped to the plane), which keeps
the candidate count at one search per partition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .block_metrics import (
    MB_SIZE,
    block_ssd,
    lambda_mode,
    lambda_motion,
    quant_block,
    ue_golomb_len,
    ue_golomb_len_arr,
)
from .mode_classifier import (
    MODE_INDEX,
    PARTITION_SHAPE,
    DecisionPlan,
    MbClass,
    Mode,
)

DIR_FWD = "fwd"
DIR_BWD = "bwd"
DIR_BI = "bi"
DIR_NONE = "-"

# direction flag cost when a backward reference exists (ue-coded index)
_DIR_BITS = {DIR_FWD: ue_golomb_len(0), DIR_BWD: ue_golomb_len(1), DIR_BI: ue_golomb_len(2)}


@dataclass(frozen=True)
class MotionVector:
    dx: int = 0
    dy: int = 0


ZERO_MV = MotionVector(0, 0)


@dataclass
class ModeCost:
    mode: Mode
    mvs: tuple
    distortion: int
    bits: int
    j_cost: float
    evaluations: int
    direction: str = DIR_NONE
    recon: np.ndarray | None = None
    residual_nonzero: bool = False


@dataclass
class ModeDecision:
    best: ModeCost
    mb_class: MbClass | None
    plan: DecisionPlan | None
    evaluations: int  # total candidate positions examined across the plan


@dataclass
class MbContext:
    """Everything choose_mb_mode needs about one macroblock.

    recon_plane is the current frame's partially reconstructed luma (the
    rows above / left of the MB are final, which is all intra DC reads).
    fwd_search_plane is the forward reference's *source* luma: motion
    search measures SAD against it (pre-analysis, like classification), so
    undisturbed content yields exact zero-displacement matches instead of
    vectors that chase the reference's quantisation noise. Predictions and
    distortion always use the reconstructed planes.
    """

    src_plane: np.ndarray
    px: int
    py: int
    fwd_plane: np.ndarray | None
    bwd_plane: np.ndarray | None = None
    il_plane: np.ndarray | None = None
    pmv: MotionVector = ZERO_MV
    recon_plane: np.ndarray | None = None
    fwd_search_plane: np.ndarray | None = None

    @property
    def search_plane(self) -> np.ndarray:
        return self.fwd_search_plane if self.fwd_search_plane is not None else self.fwd_plane


def median_pmv(left, top, top_right) -> MotionVector:
    """Componentwise median of the three neighbours; missing ones count as zero."""
    mvs = [mv if mv is not None else ZERO_MV for mv in (left, top, top_right)]
    xs = sorted(mv.dx for mv in mvs)
    ys = sorted(mv.dy for mv in mvs)
    return MotionVector(xs[1], ys[1])


def _code_num(v: int) -> int:
    return 2 * v - 1 if v > 0 else -2 * v


def mv_bits(mv: MotionVector, pmv: MotionVector) -> int:
    """ue-code length of the motion vector difference (both components)."""
    return ue_golomb_len(_code_num(mv.dx - pmv.dx)) + ue_golomb_len(_code_num(mv.dy - pmv.dy))


def _grid_bounds(px, py, w, h, rng, plane_shape):
    ph, pw = plane_shape
    return (
        max(-rng, -px),
        min(rng, pw - w - px),
        max(-rng, -py),
        min(rng, ph - h - py),
    )


def _mvd_bits_1d(lo: int, hi: int, pred: int) -> np.ndarray:
    v = np.arange(lo, hi + 1, dtype=np.int64) - pred
    code = np.where(v > 0, 2 * v - 1, -2 * v)
    return ue_golomb_len_arr(code)


def _bits_grid(dx_lo, dx_hi, dy_lo, dy_hi, pmv: MotionVector) -> np.ndarray:
    bx = _mvd_bits_1d(dx_lo, dx_hi, pmv.dx)
    by = _mvd_bits_1d(dy_lo, dy_hi, pmv.dy)
    return by[:, None] + bx[None, :]


def _select_min(cost: np.ndarray, dx_lo: int, dy_lo: int):
    """Index of the minimum cost; ties by (|dx|+|dy|, dy, dx)."""
    m = cost.min()
    ties = np.argwhere(cost == m)
    if len(ties) == 1:
        iy, ix = ties[0]
    else:
        best_key = None
        iy = ix = 0
        for ty, tx in ties:
            dx, dy = dx_lo + int(tx), dy_lo + int(ty)
            key = (abs(dx) + abs(dy), dy, dx)
            if best_key is None or key < best_key:
                best_key, iy, ix = key, ty, tx
        iy, ix = int(iy), int(ix)
    return int(iy), int(ix)


def full_search_mv(block, ref_plane, center, search_range, pmv: MotionVector, qp: int):
    """Exhaustive integer-pel search over all in-bounds displacements.

    Returns (MotionVector, cost, evaluations) where cost is
    SAD + lambda_motion(qp) * mv_bits and evaluations the number of
    candidate positions examined.
    """
    px, py = center
    block = np.ascontiguousarray(block)
    h, w = block.shape
    ph, pw = ref_plane.shape
    if not (0 <= px <= pw - w and 0 <= py <= ph - h):
        raise ValueError("block outside plane")
    dx_lo, dx_hi, dy_lo, dy_hi = _grid_bounds(px, py, w, h, search_range, ref_plane.shape)
    sad = kernels.sad_map(block, ref_plane, px, py, dx_lo, dx_hi, dy_lo, dy_hi)
    cost = sad + lambda_motion(qp) * _bits_grid(dx_lo, dx_hi, dy_lo, dy_hi, pmv)
    iy, ix = _select_min(cost, dx_lo, dy_lo)
    mv = MotionVector(dx_lo + ix, dy_lo + iy)
    return mv, float(cost[iy, ix]), cost.size


def _partitions(mode: Mode):
    pw, ph = PARTITION_SHAPE[mode]
    return [(ox, oy) for oy in range(0, MB_SIZE, ph) for ox in range(0, MB_SIZE, pw)], pw, ph


def search_inter_modes(src_plane, px, py, modes, ref_plane, search_range, pmv, qp):
    """Forward search for each inter mode; returns {mode: (mvs, evaluations)}.

    Uses one shared 4x4-SAD tensor whenever every partition of every mode
    sees the same full displacement square (the interior case); border MBs
    fall back to per-partition searches. Results are identical either way.
    """
    r = search_range
    ph_, pw_ = ref_plane.shape
    interior = px >= r and py >= r and px + MB_SIZE + r <= pw_ and py + MB_SIZE + r <= ph_
    out = {}
    if interior and any(PARTITION_SHAPE[m] != (16, 16) for m in modes):
        block = np.ascontiguousarray(src_plane[py : py + MB_SIZE, px : px + MB_SIZE])
        tensor = kernels.sad4x4_tensor(block, ref_plane, px, py, -r, r, -r, r)
        lam = lambda_motion(qp)
        bits = _bits_grid(-r, r, -r, r, pmv)
        for mode in modes:
            offs, pw, ph = _partitions(mode)
            mvs = []
            for ox, oy in offs:
                psad = tensor[:, :, oy // 4 : (oy + ph) // 4, ox // 4 : (ox + pw) // 4].sum(
                    axis=(2, 3), dtype=np.int32
                )
                cost = psad + lam * bits
                iy, ix = _select_min(cost, -r, -r)
                mvs.append(MotionVector(ix - r, iy - r))
            out[mode] = (tuple(mvs), len(offs) * (2 * r + 1) ** 2)
    else:
        for mode in modes:
            offs, pw, ph = _partitions(mode)
            mvs, evals = [], 0
            for ox, oy in offs:
                blk = src_plane[py + oy : py + oy + ph, px + ox : px + ox + pw]
                mv, _, n = full_search_mv(blk, ref_plane, (px + ox, py + oy), r, pmv, qp)
                mvs.append(mv)
                evals += n
            out[mode] = (tuple(mvs), evals)
    return out


def _clamp_disp(dx, dy, px, py, w, h, plane_shape):
    ph, pw = plane_shape
    return (
        min(max(dx, -px), pw - w - px),
        min(max(dy, -py), ph - h - py),
    )


def _predict_inter(ref_plane, px, py, mode: Mode, mvs) -> np.ndarray:
    offs, pw, ph = _partitions(mode)
    pred = np.empty((MB_SIZE, MB_SIZE), dtype=np.uint8)
    for (ox, oy), mv in zip(offs, mvs):
        sy, sx = py + oy + mv.dy, px + ox + mv.dx
        pred[oy : oy + ph, ox : ox + pw] = ref_plane[sy : sy + ph, sx : sx + pw]
    return pred


def _code_residual(src16, pred16, qp):
    """Quantise the residual; returns (distortion, residual bits, recon, nonzero?)."""
    res = src16.astype(np.int32) - pred16.astype(np.int32)
    if not res.any():
        return 0, 0, pred16.copy(), False
    levels, rres = quant_block(res, qp)
    recon = np.clip(pred16.astype(np.int32) + rres, 0, 255).astype(np.uint8)
    nz = levels[levels != 0]
    bits = int(ue_golomb_len_arr(np.abs(nz)).sum()) if nz.size else 0
    return block_ssd(src16, recon), bits, recon, bool(nz.size)


def _inter_candidate(src16, ref_plane, px, py, mode, mvs, pmv, qp, evaluations,
                     direction, has_bwd):
    pred = _predict_inter(ref_plane, px, py, mode, mvs)
    return _finish_inter(src16, pred, mode, mvs, (), pmv, qp, evaluations, direction, has_bwd)


def _finish_inter(src16, pred16, mode, mvs, extra_mvs, pmv, qp, evaluations,
                  direction, has_bwd):
    dist, res_bits, recon, nz = _code_residual(src16, pred16, qp)
    bits = ue_golomb_len(MODE_INDEX[mode]) + res_bits
    for mv in mvs:
        bits += mv_bits(mv, pmv)
    for mv in extra_mvs:
        bits += mv_bits(mv, pmv)
    if has_bwd:
        bits += _DIR_BITS[direction]
    j = dist + lambda_mode(qp) * bits
    return ModeCost(mode, tuple(mvs), dist, bits, j, evaluations, direction, recon, nz)


def skip_cost(src_plane, px, py, ref_plane, pmv: MotionVector, qp: int,
              bwd_plane=None) -> ModeCost:
    """Copy prediction at the (clamped) PMV; no residual, one signalling bit.

    With a backward reference present the copy is the rounded average of
    both references' PMV-displaced blocks (B-direct semantics); otherwise a
    plain forward copy.
    """
    dx, dy = _clamp_disp(pmv.dx, pmv.dy, px, py, MB_SIZE, MB_SIZE, ref_plane.shape)
    src16 = src_plane[py : py + MB_SIZE, px : px + MB_SIZE]
    pred = ref_plane[py + dy : py + dy + MB_SIZE, px + dx : px + dx + MB_SIZE]
    direction = DIR_FWD
    if bwd_plane is not None:
        bx, by = _clamp_disp(-pmv.dx, -pmv.dy, px, py, MB_SIZE, MB_SIZE, bwd_plane.shape)
        bpred = bwd_plane[py + by : py + by + MB_SIZE, px + bx : px + bx + MB_SIZE]
        pred = ((pred.astype(np.uint16) + bpred + 1) >> 1).astype(np.uint8)
        direction = DIR_BI
    dist = block_ssd(src16, pred)
    bits = 1
    j = dist + lambda_mode(qp) * bits
    return ModeCost(Mode.SKIP, (MotionVector(dx, dy),), dist, bits, j, 1, direction,
                    pred.copy())


def intra_dc_cost(src_plane, px, py, recon_plane, qp: int) -> ModeCost:
    """DC prediction from reconstructed top/left border samples (128 if none)."""
    samples = []
    if py > 0:
        samples.append(recon_plane[py - 1, px : px + MB_SIZE])
    if px > 0:
        samples.append(recon_plane[py : py + MB_SIZE, px - 1])
    if samples:
        vals = np.concatenate(samples).astype(np.int64)
        dc = int((vals.sum() + vals.size // 2) // vals.size)
    else:
        dc = 128
    src16 = src_plane[py : py + MB_SIZE, px : px + MB_SIZE]
    pred = np.full((MB_SIZE, MB_SIZE), dc, dtype=np.uint8)
    dist, res_bits, recon, nz = _code_residual(src16, pred, qp)
    bits = ue_golomb_len(MODE_INDEX[Mode.INTRA]) + res_bits
    j = dist + lambda_mode(qp) * bits
    return ModeCost(Mode.INTRA, (), dist, bits, j, 1, DIR_NONE, recon, nz)


def inter_layer_cost(src_plane, px, py, il_plane, qp: int) -> ModeCost:
    """Co-located upsampled base-layer block as predictor; 1-bit flag."""
    src16 = src_plane[py : py + MB_SIZE, px : px + MB_SIZE]
    pred = il_plane[py : py + MB_SIZE, px : px + MB_SIZE]
    dist, res_bits, recon, nz = _code_residual(src16, pred, qp)
    bits = 1 + res_bits
    j = dist + lambda_mode(qp) * bits
    return ModeCost(Mode.INTER_LAYER, (), dist, bits, j, 1, DIR_NONE, recon, nz)


def evaluate_partition_mode(src_plane, px, py, mode: Mode, ref_plane,
                            plan: DecisionPlan, qp: int,
                            pmv: MotionVector = ZERO_MV,
                            search_plane=None) -> ModeCost:
    """Forward-reference evaluation of one inter partition mode.

    The search runs on search_plane (the reference's source) when given,
    on ref_plane otherwise; prediction always comes from ref_plane.
    """
    if mode not in PARTITION_SHAPE:
        raise ValueError(f"{mode} is not an inter partition mode")
    if mode not in plan.modes:
        raise ValueError(f"{mode} is not allowed by the plan")
    plane = ref_plane if search_plane is None else search_plane
    searched = search_inter_modes(src_plane, px, py, [mode], plane,
                                  plan.search_range, pmv, qp)
    mvs, evals = searched[mode]
    src16 = src_plane[py : py + MB_SIZE, px : px + MB_SIZE]
    return _inter_candidate(src16, ref_plane, px, py, mode, mvs, pmv, qp, evals,
                            DIR_FWD, has_bwd=False)


def _mirror_mvs(mvs, mode, px, py, plane_shape):
    offs, pw, ph = _partitions(mode)
    out = []
    for (ox, oy), mv in zip(offs, mvs):
        dx, dy = _clamp_disp(-mv.dx, -mv.dy, px + ox, py + oy, pw, ph, plane_shape)
        out.append(MotionVector(dx, dy))
    return tuple(out)


def choose_mb_mode(ctx: MbContext, plan: DecisionPlan, qp: int) -> ModeDecision:
    """Evaluate exactly the plan's candidates and return the minimum-J one.

    Candidate order is the plan's mode order; within an inter mode the
    forward, backward and bi-predictive variants are tried in that order;
    the inter-layer candidate (when a base-layer plane is present) comes
    last. A strictly smaller J is required to displace the incumbent.
    """
    src16 = ctx.src_plane[ctx.py : ctx.py + MB_SIZE, ctx.px : ctx.px + MB_SIZE]
    has_bwd = ctx.bwd_plane is not None
    inter_modes = [m for m in plan.modes if m in PARTITION_SHAPE]
    searched = search_inter_modes(ctx.src_plane, ctx.px, ctx.py, inter_modes,
                                  ctx.search_plane, plan.search_range, ctx.pmv, qp)

    best = None
    total_evals = 0

    def consider(cand: ModeCost):
        nonlocal best, total_evals
        total_evals += cand.evaluations
        if best is None or cand.j_cost < best.j_cost:
            best = cand

    for mode in plan.modes:
        if mode is Mode.SKIP:
            consider(skip_cost(ctx.src_plane, ctx.px, ctx.py, ctx.fwd_plane, ctx.pmv, qp,
                               ctx.bwd_plane))
        elif mode is Mode.INTRA:
            consider(intra_dc_cost(ctx.src_plane, ctx.px, ctx.py, ctx.recon_plane, qp))
        else:
            mvs, evals = searched[mode]
            fwd_pred = _predict_inter(ctx.fwd_plane, ctx.px, ctx.py, mode, mvs)
            consider(_finish_inter(src16, fwd_pred, mode, mvs, (), ctx.pmv, qp,
                                   evals, DIR_FWD, has_bwd))
            if has_bwd:
                bmvs = _mirror_mvs(mvs, mode, ctx.px, ctx.py, ctx.bwd_plane.shape)
                bwd_pred = _predict_inter(ctx.bwd_plane, ctx.px, ctx.py, mode, bmvs)
                consider(_finish_inter(src16, bwd_pred, mode, bmvs, (), ctx.pmv, qp,
                                       0, DIR_BWD, has_bwd))
                bi_pred = ((fwd_pred.astype(np.uint16) + bwd_pred + 1) >> 1).astype(np.uint8)
                consider(_finish_inter(src16, bi_pred, mode, mvs, bmvs, ctx.pmv, qp,
                                       0, DIR_BI, has_bwd))
    if ctx.il_plane is not None:
        consider(inter_layer_cost(ctx.src_plane, ctx.px, ctx.py, ctx.il_plane, qp))

    return ModeDecision(best, plan.mb_class, plan, total_evals)
