"""Separable cubic resampling with the a = -0.5 kernel.

Conventions match the resampler most SR evaluations assume: pixel-centre
coordinate mapping u = (i + 0.5) * (nIn / nOut) - 0.5, kernel support widened
by the inverse scale when shrinking (antialias), per-output-sample weights
renormalised to sum to 1, out-of-range taps clamped to the edge sample, and
the final plane clipped to [0, 1]. All arithmetic is float64 internally.
"""

from dataclasses import dataclass

import numpy as np

from .frames import Frame

_SUPPORT = 2.0  # half-width of the cubic kernel


def cubic(t: np.ndarray, a: float = -0.5) -> np.ndarray:
    """Piecewise cubic: (a+2)|t|^3-(a+3)|t|^2+1 inside |t|<=1, the a-branch to 2."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    t2 = t * t
    t3 = t2 * t
    near = (a + 2.0) * t3 - (a + 3.0) * t2 + 1.0
    far = a * t3 - 5.0 * a * t2 + 8.0 * a * t - 4.0 * a
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


@dataclass(frozen=True)
class BicubicKernel:
    a: float = -0.5
    antialias: bool = True

    def weights(self, n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray]:
        """Tap indices and normalized weights for one axis.

        Returns (idx, wts), each (n_out, taps). Indices are raw grid
        positions and may fall outside [0, n_in); callers clamp them, which
        realises the replicated-edge boundary.
        """
        if n_out < 1:
            raise ValueError("output extent must be >= 1")
        scale = n_out / n_in
        if self.antialias and scale < 1.0:
            kscale = scale
            width = 2.0 * _SUPPORT / scale
        else:
            kscale = 1.0
            width = 2.0 * _SUPPORT
        u = (np.arange(n_out, dtype=np.float64) + 0.5) / scale - 0.5
        taps = int(np.ceil(width)) + 2
        left = np.floor(u - width / 2.0).astype(np.int64)
        idx = left[:, None] + np.arange(taps, dtype=np.int64)[None, :]
        wts = cubic(kscale * (u[:, None] - idx), self.a)
        wts /= wts.sum(axis=1, keepdims=True)
        return idx, wts


def _resample_axis(plane: np.ndarray, n_out: int, kernel: BicubicKernel, axis: int) -> np.ndarray:
    n_in = plane.shape[axis]
    idx, wts = kernel.weights(n_in, n_out)
    taken = np.take(plane, np.clip(idx, 0, n_in - 1), axis=axis)
    if axis == 0:
        return np.einsum("otw,ot->ow", taken, wts)
    return np.einsum("hot,ot->ho", taken, wts)


def resize_plane(plane, out_h: int, out_w: int, kernel: BicubicKernel | None = None) -> np.ndarray:
    """Resize one 2D plane; float64 result clipped to [0, 1]."""
    if kernel is None:
        kernel = BicubicKernel()
    p = np.asarray(plane, dtype=np.float64)
    if p.ndim != 2:
        raise ValueError(f"expected a 2D plane, got shape {p.shape}")
    p = _resample_axis(p, out_h, kernel, axis=0)
    p = _resample_axis(p, out_w, kernel, axis=1)
    return np.clip(p, 0.0, 1.0)


def bicubic_resize(frame: Frame, out_w: int, out_h: int, kernel: BicubicKernel | None = None) -> Frame:
    """Resize a frame's luma to out_w x out_h. Chroma is not carried over;
    it travels through upscale_chroma so the two paths stay independent."""
    return Frame(resize_plane(frame.luma, out_h, out_w, kernel))


def upscale_chroma(frame: Frame, scale: float, hr_luma=None,
                   kernel: BicubicKernel | None = None) -> Frame:
    """Bicubic-resize the chroma planes by `scale`, leaving luma unfiltered.

    The luma slot of the result is `hr_luma` when given (the full-resolution
    plane produced elsewhere); without it the original luma is kept, which is
    only geometry-consistent for scale 1.
    """
    if frame.chroma is None:
        raise ValueError("frame has no chroma planes")
    luma = frame.luma if hr_luma is None else np.asarray(hr_luma)
    out_h, out_w = luma.shape
    ch, cw = -(-out_h // 2), -(-out_w // 2)
    if (ch, cw) != (-(-round(frame.height * scale) // 2), -(-round(frame.width * scale) // 2)):
        raise ValueError("luma geometry does not match the requested chroma scale")
    u, v = frame.chroma
    return Frame(luma, (resize_plane(u, ch, cw, kernel), resize_plane(v, ch, cw, kernel)))


def degrade_clip(clip, scale: int, kernel: BicubicKernel | None = None):
    """LR version of a clip: crop luma to a multiple of scale, then shrink.

    Standard degradation for training data and for training-free baselines;
    chroma is dropped (the evaluation pipeline is luma-only).
    """
    from .frames import VideoClip

    h = clip.height - clip.height % scale
    w = clip.width - clip.width % scale
    frames = [Frame(resize_plane(f.luma[:h, :w], h // scale, w // scale, kernel))
              for f in clip.frames]
    return VideoClip(frames, clip.frame_rate)
