"""Per-block arithmetic: SOD, centroid displacement, SAD/SSD, PSNR,
exp-Golomb code lengths and the scalar quantizer.

Everything here is a pure function; the encoder calls the vectorised
variants, the scalar ones exist as the reference surface for tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MB_SIZE = 16
PSNR_CAP = 99.99

# Qstep doubles every 6 QP; all base steps are exact binary fractions.
QSTEP_BASE = (0.625, 0.6875, 0.8125, 0.875, 1.0, 1.125)


@dataclass
class BlockView:
    """A w x h window into a luma plane, addressed by its top-left corner."""

    plane: np.ndarray
    x: int
    y: int
    w: int = MB_SIZE
    h: int = MB_SIZE

    def __post_init__(self):
        ph, pw = self.plane.shape
        if not (0 <= self.x and 0 <= self.y and self.x + self.w <= pw and self.y + self.h <= ph):
            raise ValueError(
                f"window {self.w}x{self.h}@({self.x},{self.y}) outside {pw}x{ph} plane"
            )

    @property
    def block(self) -> np.ndarray:
        return self.plane[self.y : self.y + self.h, self.x : self.x + self.w]


class MacroblockView(BlockView):
    """A 16x16 macroblock window; p(i, j) uses i horizontal, j vertical."""

    def __init__(self, plane: np.ndarray, mb_x: int, mb_y: int):
        self.mb_x = mb_x
        self.mb_y = mb_y
        super().__init__(plane, mb_x * MB_SIZE, mb_y * MB_SIZE, MB_SIZE, MB_SIZE)

    def p(self, i: int, j: int) -> int:
        return int(self.plane[self.y + j, self.x + i])


@dataclass
class Centroid:
    gx: float
    gy: float


def _as_block(mb) -> np.ndarray:
    block = mb.block if isinstance(mb, BlockView) else np.asarray(mb)
    if block.shape != (MB_SIZE, MB_SIZE):
        raise ValueError(f"expected a 16x16 block, got {block.shape}")
    return block


def sod(mb_c, mb_r) -> int:
    """|sum of signed pixel differences| over the 16x16 pair.

    Zero-sum perturbations (e.g. alternating-sign noise) cancel exactly,
    which is the whole reason this exists next to SAD.
    """
    a = _as_block(mb_c).astype(np.int32)
    b = _as_block(mb_r).astype(np.int32)
    return int(abs(int((a - b).sum())))


def cog(mb) -> Centroid:
    """Intensity-weighted centroid in MB-local coordinates.

    An all-zero block has no mass; it maps to the geometric centre so that
    two empty blocks have zero centroid displacement.
    """
    block = _as_block(mb).astype(np.int64)
    total = int(block.sum())
    if total == 0:
        return Centroid(7.5, 7.5)
    idx = np.arange(MB_SIZE, dtype=np.int64)
    gx = float(int((block.sum(axis=0) * idx).sum()) / total)
    gy = float(int((block.sum(axis=1) * idx).sum()) / total)
    return Centroid(gx, gy)


def dcog(mb_c, mb_r) -> float:
    """Euclidean distance between the two blocks' centroids."""
    c, r = cog(mb_c), cog(mb_r)
    return math.hypot(c.gx - r.gx, c.gy - r.gy)


def block_sad(view_c, view_r, w: int | None = None, h: int | None = None) -> int:
    """Sum of absolute differences over a w x h window pair."""
    if isinstance(view_c, BlockView):
        w = view_c.w if w is None else w
        h = view_c.h if h is None else h
        for v in (view_c, view_r):
            ph, pw = v.plane.shape
            if v.x + w > pw or v.y + h > ph:
                raise ValueError("window out of bounds")
        a = view_c.plane[view_c.y : view_c.y + h, view_c.x : view_c.x + w]
        b = view_r.plane[view_r.y : view_r.y + h, view_r.x : view_r.x + w]
    else:
        a, b = np.asarray(view_c), np.asarray(view_r)
        if w is not None:
            if h > min(a.shape[0], b.shape[0]) or w > min(a.shape[1], b.shape[1]):
                raise ValueError("window out of bounds")
            a, b = a[:h, :w], b[:h, :w]
    if a.shape != b.shape:
        raise ValueError("window shapes differ")
    return int(np.abs(a.astype(np.int32) - b.astype(np.int32)).sum())


def block_ssd(a: np.ndarray, b: np.ndarray) -> int:
    d = a.astype(np.int64) - b.astype(np.int64)
    return int((d * d).sum())


def frame_psnr_y(frame_a, frame_b) -> float:
    """Luma PSNR in dB, capped at 99.99 for identical frames."""
    a = frame_a.y if hasattr(frame_a, "y") else np.asarray(frame_a)
    b = frame_b.y if hasattr(frame_b, "y") else np.asarray(frame_b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    sse = block_ssd(a, b)
    if sse == 0:
        return PSNR_CAP
    mse = sse / a.size
    return min(10.0 * math.log10(255.0 * 255.0 / mse), PSNR_CAP)


def ue_golomb_len(v: int) -> int:
    """Bit length of the unsigned exp-Golomb code for v >= 0."""
    if v < 0:
        raise ValueError("ue codes are defined for non-negative values")
    return 2 * ((int(v) + 1).bit_length() - 1) + 1


def ue_golomb_len_arr(v: np.ndarray) -> np.ndarray:
    """Vectorised ue_golomb_len; exact via frexp (no float log rounding)."""
    _, exp = np.frexp(v.astype(np.int64) + 1)
    return (2 * (exp - 1) + 1).astype(np.int64)


def qstep(qp: int) -> float:
    if not 0 <= qp <= 51:
        raise ValueError(f"qp {qp} outside [0, 51]")
    return QSTEP_BASE[qp % 6] * (1 << (qp // 6))


def quant_recon(r: int, qp: int):
    """Quantise one residual sample; returns (level, reconstructed residual).

    Rounds half to even, matching the vectorised path bit for bit.
    """
    step = qstep(qp)
    mag = round(abs(r) / step)
    level = mag if r >= 0 else -mag
    return level, round(level * step)


def quant_block(res: np.ndarray, qp: int):
    """Vectorised quant_recon over a residual block; (levels, recon) int32."""
    step = qstep(qp)
    mag = np.rint(np.abs(res) / step)
    levels = np.where(res >= 0, mag, -mag).astype(np.int32)
    recon = np.rint(levels * step).astype(np.int32)
    return levels, recon


def lambda_mode(qp: int) -> float:
    """Lagrange multiplier for mode costs (reference-encoder model)."""
    return 0.85 * 2.0 ** ((qp - 12) / 3.0)


def lambda_motion(qp: int) -> float:
    return math.sqrt(lambda_mode(qp))
