"""Clip readers and writers: Y4M, raw planar YUV 4:2:0, and PGM directories.

8-bit samples map to [0,1] as x/255; writing rounds half-up and clamps.
Raw YUV needs an explicit geometry; Y4M carries its own header; a PGM
directory is one binary (P5, maxval 255) luma image per frame in
lexicographic filename order.
"""

import os
import re

import numpy as np

from .frames import Frame, VideoClip

FORMATS = ("y4m", "rawyuv420", "pgmdir")


class ClipFormatError(ValueError):
    """Malformed header, truncated payload, or unusable geometry."""


def detect_format(path: str) -> str:
    if os.path.isdir(path) or (not os.path.exists(path) and not os.path.splitext(path)[1]):
        return "pgmdir"
    ext = os.path.splitext(path)[1].lower()
    if ext == ".y4m":
        return "y4m"
    if ext in (".yuv", ".raw"):
        return "rawyuv420"
    if ext == ".pgm":
        raise ClipFormatError("single PGM files are not clips; pass their directory")
    raise ClipFormatError(f"cannot infer clip format from {path!r}; pass --format")


def to_bytes(plane: np.ndarray) -> bytes:
    """[0,1] floats to 8-bit, rounding halves up."""
    q = np.floor(np.asarray(plane, dtype=np.float64) * 255.0 + 0.5)
    return np.clip(q, 0, 255).astype(np.uint8).tobytes()


def _from_u8(buf: bytes, h: int, w: int) -> np.ndarray:
    return np.frombuffer(buf, dtype=np.uint8).reshape(h, w).astype(np.float32) / 255.0


def _check_even(w: int, h: int):
    if w % 2 or h % 2:
        raise ClipFormatError(f"4:2:0 needs even geometry, got {w}x{h}")


def _read_yuv_frames(fh, w: int, h: int, frame_rate, delimited: bool) -> VideoClip:
    frames = []
    cw, ch = w // 2, h // 2
    while True:
        if delimited:
            line = fh.readline()
            if not line:
                break
            if not line.startswith(b"FRAME"):
                raise ClipFormatError("expected FRAME delimiter")
        payload = fh.read(w * h + 2 * cw * ch)
        if not payload and not delimited:
            break
        if len(payload) != w * h + 2 * cw * ch:
            raise ClipFormatError("truncated frame payload")
        y = _from_u8(payload[: w * h], h, w)
        u = _from_u8(payload[w * h: w * h + cw * ch], ch, cw)
        v = _from_u8(payload[w * h + cw * ch:], ch, cw)
        frames.append(Frame(y, (u, v)))
    if not frames:
        raise ClipFormatError("no frames in stream")
    return VideoClip(frames, frame_rate)


def _read_y4m(path: str) -> VideoClip:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii", "replace").strip()
        tokens = header.split(" ")
        if tokens[0] != "YUV4MPEG2":
            raise ClipFormatError("missing YUV4MPEG2 signature")
        w = h = 0
        rate = (30, 1)
        for tok in tokens[1:]:
            if tok.startswith("W"):
                w = int(tok[1:])
            elif tok.startswith("H"):
                h = int(tok[1:])
            elif tok.startswith("F"):
                m = re.fullmatch(r"F(\d+):(\d+)", tok)
                if not m:
                    raise ClipFormatError(f"bad frame rate token {tok!r}")
                rate = (int(m.group(1)), int(m.group(2)))
            elif tok.startswith("C") and not tok[1:].startswith("420"):
                raise ClipFormatError(f"unsupported chroma mode {tok!r} (only 4:2:0)")
        if w <= 0 or h <= 0:
            raise ClipFormatError("header lacks W/H geometry")
        _check_even(w, h)
        return _read_yuv_frames(fh, w, h, rate, delimited=True)


def _read_rawyuv(path: str, size: tuple[int, int] | None) -> VideoClip:
    if size is None:
        raise ClipFormatError("raw YUV420 needs an explicit geometry (--size WxH)")
    w, h = size
    _check_even(w, h)
    with open(path, "rb") as fh:
        return _read_yuv_frames(fh, w, h, (30, 1), delimited=False)


def _read_pgm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    # header = magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments running to end of line
    pos, fields = 0, []
    while len(fields) < 4:
        if pos >= len(data):
            raise ClipFormatError(f"{path}: truncated PGM header")
        c = data[pos: pos + 1]
        if c == b"#":
            pos = data.find(b"\n", pos)
            if pos < 0:
                raise ClipFormatError(f"{path}: truncated PGM header")
            continue
        if c.isspace():
            pos += 1
            continue
        end = pos
        while end < len(data) and not data[end: end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    pos += 1  # single whitespace after maxval
    if fields[0] != b"P5":
        raise ClipFormatError(f"{path}: not a binary PGM (P5)")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ClipFormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    if len(data) - pos < w * h:
        raise ClipFormatError(f"{path}: truncated PGM payload")
    return _from_u8(data[pos: pos + w * h], h, w)


def _read_pgmdir(path: str) -> VideoClip:
    names = sorted(n for n in os.listdir(path) if n.lower().endswith(".pgm"))
    if not names:
        raise ClipFormatError(f"no .pgm files in {path}")
    return VideoClip([Frame(_read_pgm(os.path.join(path, n))) for n in names])


def read_clip(path: str, fmt: str | None = None, size: tuple[int, int] | None = None) -> VideoClip:
    fmt = fmt or detect_format(path)
    if fmt == "y4m":
        return _read_y4m(path)
    if fmt == "rawyuv420":
        return _read_rawyuv(path, size)
    if fmt == "pgmdir":
        return _read_pgmdir(path)
    raise ClipFormatError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def write_pgm(plane: np.ndarray, path: str):
    """One [0,1] plane as a binary PGM."""
    h, w = plane.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(to_bytes(plane))


def _chroma_bytes(frame: Frame) -> bytes:
    if frame.chroma is not None:
        u, v = frame.chroma
        return to_bytes(u) + to_bytes(v)
    n = -(-frame.height // 2) * -(-frame.width // 2)
    return bytes([128]) * (2 * n)  # neutral chroma for luma-only sources


def write_clip(clip: VideoClip, path: str, fmt: str | None = None):
    fmt = fmt or detect_format(path)
    if fmt == "y4m":
        _check_even(clip.width, clip.height)
        num, den = clip.frame_rate
        with open(path, "wb") as fh:
            fh.write(f"YUV4MPEG2 W{clip.width} H{clip.height} F{num}:{den} "
                     f"Ip A1:1 C420\n".encode("ascii"))
            for f in clip.frames:
                fh.write(b"FRAME\n")
                fh.write(to_bytes(f.luma))
                fh.write(_chroma_bytes(f))
    elif fmt == "rawyuv420":
        _check_even(clip.width, clip.height)
        with open(path, "wb") as fh:
            for f in clip.frames:
                fh.write(to_bytes(f.luma))
                fh.write(_chroma_bytes(f))
    elif fmt == "pgmdir":
        os.makedirs(path, exist_ok=True)
        for i, f in enumerate(clip.frames):
            write_pgm(f.luma, os.path.join(path, f"{i:06d}.pgm"))
    else:
        raise ClipFormatError(f"unknown format {fmt!r}; expected one of {FORMATS}")
