"""Pure-numpy implementations of the block-matching kernels.

Bit-for-bit interchangeable with the compiled extension; selected by
svcbench.kernels when the extension is unavailable (or forced off).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def sad_map(block, plane, px, py, dx_lo, dx_hi, dy_lo, dy_hi):
    """Per-displacement SAD of `block` against `plane`.

    Displacement (dx, dy) compares the block with the window whose top-left
    corner is (px+dx, py+dy); the caller guarantees every window is inside
    the plane. Returns int32 of shape (dy_hi-dy_lo+1, dx_hi-dx_lo+1).
    """
    h, w = block.shape
    region = plane[py + dy_lo : py + dy_hi + h, px + dx_lo : px + dx_hi + w]
    win = sliding_window_view(region, (h, w))
    d = win.astype(np.int16) - block.astype(np.int16)
    np.abs(d, out=d)
    return d.sum(axis=(2, 3), dtype=np.int32)


def sad4x4_tensor(block, plane, px, py, dx_lo, dx_hi, dy_lo, dy_hi):
    """Per-displacement SADs of the sixteen 4x4 sub-blocks of a 16x16 block.

    Output shape (ndy, ndx, 4, 4), indexed [dy, dx, sub_row, sub_col]; any
    partition SAD is a sum of entries, so one call serves every mode.
    """
    region = plane[py + dy_lo : py + dy_hi + 16, px + dx_lo : px + dx_hi + 16]
    win = sliding_window_view(region, (16, 16))
    d = win.astype(np.int16) - block.astype(np.int16)
    np.abs(d, out=d)
    ndy, ndx = d.shape[:2]
    return d.reshape(ndy, ndx, 4, 4, 4, 4).sum(axis=(3, 5), dtype=np.int32)
