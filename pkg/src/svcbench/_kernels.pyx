# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled block-matching kernels; see _kernels_py for the reference
semantics. Both backends must return identical integers."""

import numpy as np

cimport numpy as cnp


def sad_map(const unsigned char[:, :] block, const unsigned char[:, ::1] plane,
            Py_ssize_t px, Py_ssize_t py,
            Py_ssize_t dx_lo, Py_ssize_t dx_hi, Py_ssize_t dy_lo, Py_ssize_t dy_hi):
    cdef Py_ssize_t h = block.shape[0]
    cdef Py_ssize_t w = block.shape[1]
    cdef Py_ssize_t ndy = dy_hi - dy_lo + 1
    cdef Py_ssize_t ndx = dx_hi - dx_lo + 1
    out_arr = np.empty((ndy, ndx), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] out = out_arr
    cdef Py_ssize_t iy, ix, y, x, ry, rx
    cdef int s, d
    with nogil:
        for iy in range(ndy):
            ry = py + dy_lo + iy
            for ix in range(ndx):
                rx = px + dx_lo + ix
                s = 0
                for y in range(h):
                    for x in range(w):
                        d = <int> block[y, x] - <int> plane[ry + y, rx + x]
                        s += d if d >= 0 else -d
                out[iy, ix] = s
    return out_arr


def sad4x4_tensor(const unsigned char[:, :] block, const unsigned char[:, ::1] plane,
                  Py_ssize_t px, Py_ssize_t py,
                  Py_ssize_t dx_lo, Py_ssize_t dx_hi, Py_ssize_t dy_lo, Py_ssize_t dy_hi):
    cdef Py_ssize_t ndy = dy_hi - dy_lo + 1
    cdef Py_ssize_t ndx = dx_hi - dx_lo + 1
    out_arr = np.empty((ndy, ndx, 4, 4), dtype=np.int32)
    cdef cnp.int32_t[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t iy, ix, y, x, ry, rx, by, bx
    cdef int d
    cdef int acc[4][4]
    with nogil:
        for iy in range(ndy):
            ry = py + dy_lo + iy
            for ix in range(ndx):
                rx = px + dx_lo + ix
                for by in range(4):
                    for bx in range(4):
                        acc[by][bx] = 0
                for y in range(16):
                    for x in range(16):
                        d = <int> block[y, x] - <int> plane[ry + y, rx + x]
                        acc[y >> 2][x >> 2] += d if d >= 0 else -d
                for by in range(4):
                    for bx in range(4):
                        out[iy, ix, by, bx] = acc[by][bx]
    return out_arr


cdef inline int _ue_len(long long code) noexcept nogil:
    cdef long long v = code + 1
    cdef int n = 0
    while v > 1:
        v >>= 1
        n += 1
    return 2 * n + 1


cdef inline int _mvd_bits(int d) noexcept nogil:
    cdef long long code = 2 * d - 1 if d > 0 else -2 * <long long> d
    return _ue_len(code)


def search_partitions(const unsigned char[:, :] block, const unsigned char[:, ::1] plane,
                      Py_ssize_t px, Py_ssize_t py, int r, double lam,
                      int pmv_dx, int pmv_dy, const int[:, ::1] parts):
    """Minimum-cost displacement for each partition of a 16x16 block.

    parts rows are (ox, oy, pw, ph); every partition is searched over its
    own in-bounds subset of the +-r square, minimising
    SAD + lam * mvd_bits with ties broken by (|dx|+|dy|, dy, dx).
    Returns int64 rows (dx, dy, sad, evaluations). Displacements where the
    whole 16x16 window is in bounds are served by a shared 4x4-SAD tensor;
    the border leftovers are computed directly.
    """
    cdef Py_ssize_t H = plane.shape[0]
    cdef Py_ssize_t W = plane.shape[1]
    cdef int gx_lo = -r if px >= r else -<int> px
    cdef int gx_hi = r if px + 16 + r <= W else <int> (W - 16 - px)
    cdef int gy_lo = -r if py >= r else -<int> py
    cdef int gy_hi = r if py + 16 + r <= H else <int> (H - 16 - py)
    cdef Py_ssize_t ngy = gy_hi - gy_lo + 1
    cdef Py_ssize_t ngx = gx_hi - gx_lo + 1

    tensor_arr = np.empty((ngy, ngx, 4, 4), dtype=np.int32)
    cdef cnp.int32_t[:, :, :, ::1] tensor = tensor_arr
    cdef Py_ssize_t n_parts = parts.shape[0]
    out_arr = np.empty((n_parts, 4), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr

    cdef Py_ssize_t iy, ix, y, x, ry, rx, p
    cdef int d, s
    cdef int acc[4][4]
    cdef int by, bx, ox, oy, pw, ph, cy0, cy1, cx0, cx1
    cdef int bx_lo, bx_hi, by_lo, by_hi, dx, dy
    cdef int bdx, bdy, bsad, k1, k2, k3, bk1, bk2, bk3
    cdef double cost, best
    cdef long long evals

    with nogil:
        for iy in range(ngy):
            ry = py + gy_lo + iy
            for ix in range(ngx):
                rx = px + gx_lo + ix
                for by in range(4):
                    for bx in range(4):
                        acc[by][bx] = 0
                for y in range(16):
                    for x in range(16):
                        d = <int> block[y, x] - <int> plane[ry + y, rx + x]
                        acc[y >> 2][x >> 2] += d if d >= 0 else -d
                for by in range(4):
                    for bx in range(4):
                        tensor[iy, ix, by, bx] = acc[by][bx]

        for p in range(n_parts):
            ox = parts[p, 0]
            oy = parts[p, 1]
            pw = parts[p, 2]
            ph = parts[p, 3]
            cx0 = ox >> 2
            cx1 = (ox + pw) >> 2
            cy0 = oy >> 2
            cy1 = (oy + ph) >> 2
            bx_lo = -r if px + ox >= r else -<int> (px + ox)
            bx_hi = r if px + ox + pw + r <= W else <int> (W - pw - px - ox)
            by_lo = -r if py + oy >= r else -<int> (py + oy)
            by_hi = r if py + oy + ph + r <= H else <int> (H - ph - py - oy)
            evals = <long long> (bx_hi - bx_lo + 1) * (by_hi - by_lo + 1)

            best = 0
            bdx = bdy = bsad = 0
            bk1 = bk2 = bk3 = 0
            for dy in range(by_lo, by_hi + 1):
                for dx in range(bx_lo, bx_hi + 1):
                    if gx_lo <= dx <= gx_hi and gy_lo <= dy <= gy_hi:
                        s = 0
                        for by in range(cy0, cy1):
                            for bx in range(cx0, cx1):
                                s += tensor[dy - gy_lo, dx - gx_lo, by, bx]
                    else:
                        s = 0
                        ry = py + oy + dy
                        rx = px + ox + dx
                        for y in range(ph):
                            for x in range(pw):
                                d = <int> block[oy + y, ox + x] - <int> plane[ry + y, rx + x]
                                s += d if d >= 0 else -d
                    cost = s + lam * (_mvd_bits(dx - pmv_dx) + _mvd_bits(dy - pmv_dy))
                    k1 = (dx if dx >= 0 else -dx) + (dy if dy >= 0 else -dy)
                    k2 = dy
                    k3 = dx
                    if (dy == by_lo and dx == bx_lo) or cost < best or (
                        cost == best and (k1 < bk1 or (k1 == bk1 and (
                            k2 < bk2 or (k2 == bk2 and k3 < bk3))))):
                        best = cost
                        bsad = s
                        bdx, bdy = dx, dy
                        bk1, bk2, bk3 = k1, k2, k3
            out[p, 0] = bdx
            out[p, 1] = bdy
            out[p, 2] = bsad
            out[p, 3] = evals
    return out_arr
