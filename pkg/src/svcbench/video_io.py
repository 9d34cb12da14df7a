"""Raw video I/O (Y4M and headerless YUV) plus the 2x resolution converters.

Only 8-bit 4:2:0 planar video with macroblock-aligned dimensions is
accepted; chroma is carried along untouched (all measurement is luma-only).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

MB_SIZE = 16


class Y4MError(ValueError):
    """Malformed or unsupported YUV4MPEG2 input."""


@dataclass
class Frame:
    """One planar 8-bit 4:2:0 picture."""

    index: int
    y: np.ndarray  # (height, width) uint8
    u: np.ndarray  # (height//2, width//2) uint8
    v: np.ndarray  # (height//2, width//2) uint8

    @property
    def width(self) -> int:
        return self.y.shape[1]

    @property
    def height(self) -> int:
        return self.y.shape[0]

    def validate(self):
        h, w = self.y.shape
        if w % MB_SIZE or h % MB_SIZE:
            raise ValueError(f"dimensions {w}x{h} are not multiples of {MB_SIZE}")
        if self.u.shape != (h // 2, w // 2) or self.v.shape != (h // 2, w // 2):
            raise ValueError("chroma planes must be half-size in each dimension")
        for plane in (self.y, self.u, self.v):
            if plane.dtype != np.uint8:
                raise ValueError("planes must be uint8")
        return self

    def copy(self) -> "Frame":
        return Frame(self.index, self.y.copy(), self.u.copy(), self.v.copy())


def gray_frame(index: int, width: int, height: int, luma: int = 128) -> Frame:
    y = np.full((height, width), luma, dtype=np.uint8)
    c = np.full((height // 2, width // 2), 128, dtype=np.uint8)
    return Frame(index, y, c, c.copy()).validate()


@dataclass
class Sequence:
    """An ordered run of same-sized frames with a rational frame rate."""

    frames: list = field(default_factory=list)
    fps_num: int = 30
    fps_den: int = 1
    # Kept explicitly so a zero-frame sequence still has a well-defined header.
    width: int = 0
    height: int = 0

    @property
    def fps(self) -> float:
        return self.fps_num / self.fps_den

    def __len__(self) -> int:
        return len(self.frames)

    def validate(self):
        if self.fps_num <= 0 or self.fps_den <= 0:
            raise ValueError("frame rate must be positive")
        for i, f in enumerate(self.frames):
            f.validate()
            if f.index != i:
                raise ValueError("frame indices must be contiguous from 0")
            if (f.width, f.height) != (self.width, self.height):
                raise ValueError("all frames must share dimensions")
        return self


def _check_dims(width: int, height: int):
    if width <= 0 or height <= 0:
        raise ValueError("dimensions must be positive")
    if width % MB_SIZE or height % MB_SIZE:
        raise ValueError(
            f"dimensions {width}x{height} are not multiples of {MB_SIZE}"
        )


def _split_frame(index: int, payload: bytes, width: int, height: int) -> Frame:
    ysize = width * height
    csize = ysize // 4
    buf = np.frombuffer(payload, dtype=np.uint8)
    y = buf[:ysize].reshape(height, width).copy()
    u = buf[ysize : ysize + csize].reshape(height // 2, width // 2).copy()
    v = buf[ysize + csize :].reshape(height // 2, width // 2).copy()
    return Frame(index, y, u, v)


def parse_y4m(data) -> Sequence:
    """Parse a YUV4MPEG2 stream (bytes or binary file object) into a Sequence."""
    if isinstance(data, (bytes, bytearray)):
        stream = io.BytesIO(data)
    else:
        stream = data

    header = bytearray()
    while True:
        c = stream.read(1)
        if not c:
            raise Y4MError("missing stream header")
        if c == b"\n":
            break
        header += c
        if len(header) > 512:
            raise Y4MError("unterminated stream header")

    fields = header.split(b" ")
    if fields[0] != b"YUV4MPEG2":
        raise Y4MError("not a YUV4MPEG2 stream")

    width = height = None
    fps_num, fps_den = 30, 1
    for tok in fields[1:]:
        if not tok:
            continue
        key, val = tok[:1], tok[1:]
        if key == b"W":
            width = int(val)
        elif key == b"H":
            height = int(val)
        elif key == b"F":
            num, den = val.split(b":")
            fps_num, fps_den = int(num), int(den)
        elif key == b"C":
            if not val.startswith(b"420"):
                raise Y4MError(f"unsupported chroma mode {val.decode()!r}")
        # I/A/X parameters are irrelevant here and silently ignored.

    if width is None or height is None:
        raise Y4MError("header lacks W/H")
    if fps_num <= 0 or fps_den <= 0:
        raise Y4MError("invalid frame rate")
    try:
        _check_dims(width, height)
    except ValueError as e:
        raise Y4MError(str(e)) from None

    frame_size = width * height * 3 // 2
    frames = []
    while True:
        line = bytearray()
        c = stream.read(1)
        if not c:
            break  # clean EOF between frames
        while c != b"\n":
            line += c
            c = stream.read(1)
            if not c:
                raise Y4MError("truncated FRAME marker")
        if not line.startswith(b"FRAME"):
            raise Y4MError("expected FRAME marker")
        payload = stream.read(frame_size)
        if len(payload) != frame_size:
            raise Y4MError(f"truncated frame {len(frames)} payload")
        frames.append(_split_frame(len(frames), payload, width, height))

    return Sequence(frames, fps_num, fps_den, width, height).validate()


def read_raw_yuv(path, width: int, height: int, fps_num: int = 30, fps_den: int = 1) -> Sequence:
    """Read a headerless I420 file whose dimensions are supplied by the caller."""
    _check_dims(width, height)
    with open(path, "rb") as fh:
        data = fh.read()
    frame_size = width * height * 3 // 2
    if len(data) % frame_size:
        raise ValueError(
            f"file size {len(data)} is not a multiple of frame size {frame_size}"
        )
    frames = [
        _split_frame(i, data[i * frame_size : (i + 1) * frame_size], width, height)
        for i in range(len(data) // frame_size)
    ]
    return Sequence(frames, fps_num, fps_den, width, height).validate()


def write_y4m(seq: Sequence, sink) -> int:
    """Write a Sequence as YUV4MPEG2; returns the number of bytes written."""
    seq.validate()
    n = sink.write(
        b"YUV4MPEG2 W%d H%d F%d:%d C420\n"
        % (seq.width, seq.height, seq.fps_num, seq.fps_den)
    )
    for f in seq.frames:
        n += sink.write(b"FRAME\n")
        n += sink.write(f.y.tobytes())
        n += sink.write(f.u.tobytes())
        n += sink.write(f.v.tobytes())
    return n


def write_y4m_file(seq: Sequence, path) -> int:
    with open(path, "wb") as fh:
        return write_y4m(seq, fh)


def _pool2x2(plane: np.ndarray) -> np.ndarray:
    p = plane.astype(np.uint16)
    s = p[0::2, 0::2] + p[0::2, 1::2] + p[1::2, 0::2] + p[1::2, 1::2]
    return ((s + 2) >> 2).astype(np.uint8)


def downsample_2x2(frame: Frame) -> Frame:
    """Halve both dimensions by 2x2 mean pooling with (sum+2)>>2 rounding."""
    if frame.width % 32 or frame.height % 32:
        raise ValueError("dimensions must be divisible by 32 to stay MB-aligned")
    return Frame(
        frame.index,
        _pool2x2(frame.y),
        _pool2x2(frame.u),
        _pool2x2(frame.v),
    )


def _upsample_axis(plane: np.ndarray, axis: int) -> np.ndarray:
    a = plane.astype(np.uint16)
    n = a.shape[axis]
    out_shape = list(a.shape)
    out_shape[axis] = 2 * n
    out = np.empty(out_shape, dtype=np.uint16)
    src = np.moveaxis(a, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    dst[0::2] = src
    # midpoints are the rounded average; the last one replicates the edge
    dst[1:-1:2] = (src[:-1] + src[1:] + 1) >> 1
    dst[-1] = src[-1]
    return out.astype(np.uint8)


def upsample_bilinear_2x(frame: Frame) -> Frame:
    """Double both dimensions with separable bilinear interpolation.

    Even output samples are copies of the sources, odd ones the rounded
    average of their neighbours, with edge replication at the borders.
    """
    up = lambda p: _upsample_axis(_upsample_axis(p, 0), 1)
    return Frame(frame.index, up(frame.y), up(frame.u), up(frame.v))


def upsample_plane_2x(plane: np.ndarray) -> np.ndarray:
    """Luma-plane variant of upsample_bilinear_2x (used for inter-layer prediction)."""
    return _upsample_axis(_upsample_axis(plane, 0), 1)
