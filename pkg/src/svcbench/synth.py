"""Deterministic synthetic test sequences.

These stand in for the usual benchmark clips so the whole harness is
self-contained: a smooth seeded texture, panned, occluded by a moving
square, or perturbed by zero-sum alternating noise. Chroma is neutral
gray throughout (nothing here measures chroma).
"""

from __future__ import annotations

import numpy as np

from .video_io import Frame, Sequence

SIZES = {"qcif": (176, 144), "cif": (352, 288), "4cif": (704, 576)}


def _neutral_chroma(width, height):
    return np.full((height // 2, width // 2), 128, dtype=np.uint8)


def textured_frame(width: int, height: int, rng: np.random.Generator,
                   waves: int = 5, amplitude: float = 48.0) -> np.ndarray:
    """Smooth band-limited plasma texture with seeded phases, uint8."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    acc = np.zeros((height, width))
    for _ in range(waves):
        fx, fy = rng.uniform(0.5, 3.0, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        sx, sy = rng.choice([-1.0, 1.0], size=2)
        acc += np.sin(2 * np.pi * (sx * fx * xx / width + sy * fy * yy / height) + phase)
    acc /= waves
    plane = 128.0 + amplitude * acc
    return np.clip(np.rint(plane), 0, 255).astype(np.uint8)


def _seq_from_lumas(lumas, fps_num, fps_den) -> Sequence:
    h, w = lumas[0].shape
    u = _neutral_chroma(w, h)
    frames = [Frame(i, y, u.copy(), u.copy()) for i, y in enumerate(lumas)]
    return Sequence(frames, fps_num, fps_den, w, h).validate()


def make_static(width, height, n_frames, seed=0, fps=(30, 1)) -> Sequence:
    rng = np.random.default_rng(seed)
    base = textured_frame(width, height, rng)
    return _seq_from_lumas([base.copy() for _ in range(n_frames)], *fps)


def make_pan(width, height, n_frames, dx=2, dy=1, seed=0, fps=(30, 1)) -> Sequence:
    """Global translation with wraparound: the best forward match for a frame
    at temporal distance k sits at displacement (k*dx, k*dy)."""
    rng = np.random.default_rng(seed)
    base = textured_frame(width, height, rng)
    lumas = [np.roll(base, (-t * dy, -t * dx), axis=(0, 1)) for t in range(n_frames)]
    return _seq_from_lumas(lumas, *fps)


def make_object(width, height, n_frames, speed=3, seed=0, fps=(30, 1)) -> Sequence:
    """A textured square drifting over a static background (modulo wrap)."""
    rng = np.random.default_rng(seed)
    bg = textured_frame(width, height, rng)
    side = min(64, width // 4, height // 4)
    patch = textured_frame(side, side, rng, waves=6, amplitude=90.0)
    lumas = []
    for t in range(n_frames):
        y = bg.copy()
        ox = (width // 8 + t * speed) % (width - side)
        oy = (height // 8 + (t * speed) // 2) % (height - side)
        y[oy : oy + side, ox : ox + side] = patch
        lumas.append(y)
    return _seq_from_lumas(lumas, *fps)


def make_noise(width, height, n_frames, amplitude=2, seed=0, fps=(30, 1)) -> Sequence:
    """Static texture plus a zero-sum checkerboard whose sign alternates per
    frame; per-frame means match the static clip exactly."""
    rng = np.random.default_rng(seed)
    base = textured_frame(width, height, rng)
    base = np.clip(base, amplitude, 255 - amplitude).astype(np.int16)
    yy, xx = np.mgrid[0:height, 0:width]
    checker = np.where((xx + yy) % 2 == 0, amplitude, -amplitude).astype(np.int16)
    lumas = []
    for t in range(n_frames):
        sign = 1 if t % 2 == 0 else -1
        lumas.append((base + sign * checker).astype(np.uint8))
    return _seq_from_lumas(lumas, *fps)


def make_mixed(width, height, n_frames, seed=0, fps=(30, 1)) -> Sequence:
    """Quadrants: static / pan / moving object / alternating noise."""
    hw, hh = width // 2, height // 2
    static = make_static(hw, hh, n_frames, seed)
    pan = make_pan(hw, hh, n_frames, 2, 1, seed + 1)
    obj = make_object(hw, hh, n_frames, 3, seed + 2)
    noise = make_noise(hw, hh, n_frames, 2, seed + 3)
    lumas = []
    for t in range(n_frames):
        top = np.hstack([static.frames[t].y, pan.frames[t].y])
        bot = np.hstack([obj.frames[t].y, noise.frames[t].y])
        lumas.append(np.vstack([top, bot]))
    return _seq_from_lumas(lumas, *fps)


def make_sequence(pattern: str, width: int, height: int, n_frames: int,
                  seed: int = 0, fps=(30, 1)) -> Sequence:
    """Build a clip from a pattern spec like 'static', 'pan:2,1', 'object:3',
    'noise:2' or 'mixed'."""
    name, _, arg = pattern.partition(":")
    name = name.strip().lower()
    try:
        if name == "static":
            return make_static(width, height, n_frames, seed, fps)
        if name == "pan":
            dx, dy = (int(a) for a in arg.split(",")) if arg else (2, 1)
            return make_pan(width, height, n_frames, dx, dy, seed, fps)
        if name == "object":
            return make_object(width, height, n_frames, int(arg) if arg else 3, seed, fps)
        if name == "noise":
            return make_noise(width, height, n_frames, int(arg) if arg else 2, seed, fps)
        if name == "mixed":
            return make_mixed(width, height, n_frames, seed, fps)
    except (TypeError, ValueError) as e:
        raise ValueError(f"bad pattern spec {pattern!r}: {e}") from None
    raise ValueError(f"unknown pattern {name!r}")
