"""Dataset extraction, loss, initialization, Adam, the training loop, and
gradient verification.

Every entry point is seeded and deterministic: the same (data, seed, hyper)
triple reproduces every logged loss and checkpoint byte. Each input clip is
treated as a single scene, so extracted windows never straddle a cut.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bicubic import resize_plane
from .checkpoint import save_checkpoint
from .frames import VideoClip
from .model import LayerSpec, ModelSpec, backward_stack, forward_stack, zero_params
from .tensor_core import (DEFAULT_DTYPE, ConvWeights, TemporalPad,
                          pixel_shuffle, pixel_unshuffle)

DEFAULT_LR = 5e-4
DEFAULT_BATCH = 32
LR_PATCH_SIZES = {2: 80, 3: 60, 4: 40}


class TrainingDiverged(RuntimeError):
    """Loss or a gradient stopped being finite."""


@dataclass
class WindowSample:
    lr_frames: np.ndarray        # (5, p, p) float32
    hr_target: np.ndarray        # (p*scale, p*scale) float32
    source_id: tuple             # (clip, centre frame, (y, x) HR origin)


@dataclass(frozen=True)
class DatasetRecipe:
    scale: int = 2
    frame_stride: int = 5
    subimages_per_frame: int = 10
    lr_patch_size: int | None = None   # default depends on scale

    def __post_init__(self):
        if self.frame_stride < 1 or self.subimages_per_frame < 1:
            raise ValueError("stride and subimages/frame must be >= 1")
        if self.lr_patch_size is None:
            object.__setattr__(self, "lr_patch_size", LR_PATCH_SIZES[self.scale])

    @property
    def hr_patch_size(self) -> int:
        return self.lr_patch_size * self.scale


def _cell_edges(extent: int, cells: int) -> list[int]:
    # partition [0, extent) into `cells` near-equal contiguous spans
    base, extra = divmod(extent, cells)
    edges = [0]
    for i in range(cells):
        edges.append(edges[-1] + base + (1 if i < extra else 0))
    return edges


def extract_dataset(clips: list[VideoClip], recipe: DatasetRecipe, seed: int) -> list[WindowSample]:
    """Seeded patch windows: every frame_stride-th centre frame contributes
    subimages_per_frame non-overlapping HR crops whose five co-located
    neighbours are bicubic-downscaled into the LR input stack. Edge windows
    replicate the first/last frame."""
    if not clips:
        raise ValueError("no clips supplied")
    rng = np.random.default_rng(seed)
    p_hr = recipe.hr_patch_size
    p_lr = recipe.lr_patch_size
    samples = []
    for ci, clip in enumerate(clips):
        if len(clip) < 5:
            raise ValueError(f"clip {ci} has {len(clip)} frames; need at least 5")
        if clip.height < p_hr or clip.width < p_hr:
            raise ValueError(
                f"clip {ci} is {clip.width}x{clip.height}, smaller than the "
                f"{p_hr}x{p_hr} HR patch")
        gy, gx = clip.height // p_hr, clip.width // p_hr
        if recipe.subimages_per_frame > gy * gx:
            raise ValueError(
                f"cannot place {recipe.subimages_per_frame} non-overlapping "
                f"{p_hr}x{p_hr} patches on a {clip.width}x{clip.height} frame")
        ey = _cell_edges(clip.height, gy)
        ex = _cell_edges(clip.width, gx)
        for centre in range(0, len(clip), recipe.frame_stride):
            window = clip.window(centre)
            # one crop per randomly chosen grid cell, jittered inside the
            # cell: seeded, spread over the frame, and never overlapping
            cells = rng.choice(gy * gx, size=recipe.subimages_per_frame, replace=False)
            origins: list[tuple[int, int]] = []
            for cell in sorted(int(c) for c in cells):
                r, c = divmod(cell, gx)
                y = int(rng.integers(ey[r], ey[r + 1] - p_hr + 1))
                x = int(rng.integers(ex[c], ex[c + 1] - p_hr + 1))
                origins.append((y, x))
            for y, x in origins:
                lr = np.stack([
                    resize_plane(f.luma[y:y + p_hr, x:x + p_hr], p_lr, p_lr).astype(DEFAULT_DTYPE)
                    for f in window])
                hr = np.asarray(window[2].luma[y:y + p_hr, x:x + p_hr], dtype=DEFAULT_DTYPE)
                samples.append(WindowSample(lr, hr, (ci, centre, (y, x))))
    return samples


def loss_mse(pred: np.ndarray, target: np.ndarray, form: str = "mean"):
    """Half squared error and its gradient.

    form 'mean': loss = 0.5 * mean(d^2), grad = d / numel (size-independent,
    the default the stated learning rates assume). form 'sum': the literal
    0.5 * sum(d^2) with grad = d.
    """
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    d = pred - target
    d64 = np.asarray(d, dtype=np.float64)
    if form == "mean":
        return 0.5 * float(np.mean(d64 * d64)), d / d.size
    if form == "sum":
        return 0.5 * float(np.sum(d64 * d64)), d
    raise ValueError(f"unknown loss form {form!r}")


def xavier_init(spec: ModelSpec, seed: int, dtype=DEFAULT_DTYPE) -> list[ConvWeights]:
    """Uniform on +/- sqrt(6 / (fanIn + fanOut)) with fan counted over
    groups x kernel volume; biases start at zero."""
    rng = np.random.default_rng(seed)
    params = []
    for l in spec.layers:
        vol = l.kernel[0] * l.kernel[1] * l.kernel[2]
        bound = math.sqrt(6.0 / (l.in_groups * vol + l.out_groups * vol))
        kernel = rng.uniform(-bound, bound, (l.out_groups, l.in_groups) + l.kernel)
        params.append(ConvWeights(kernel.astype(dtype), np.zeros(l.out_groups, dtype=dtype)))
    return params


@dataclass
class OptimState:
    m: list[ConvWeights]
    v: list[ConvWeights]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    base_lr: float = DEFAULT_LR
    bias_lr_factor: float = 0.1
    weight_decay: float = 5e-4   # filters only; biases always decay-free


def init_optim(spec: ModelSpec, base_lr: float = DEFAULT_LR,
               weight_decay: float = 5e-4, dtype=DEFAULT_DTYPE) -> OptimState:
    return OptimState(m=zero_params(spec, dtype), v=zero_params(spec, dtype),
                      base_lr=base_lr, weight_decay=weight_decay)


def _adam_update(w, g, m, v, state: OptimState, lr: float, decay: float, where: str):
    if not np.all(np.isfinite(g)):
        raise TrainingDiverged(f"non-finite gradient in {where}")
    if decay:
        g = g + decay * w
    m[...] = state.beta1 * m + (1.0 - state.beta1) * g
    v[...] = state.beta2 * v + (1.0 - state.beta2) * (g * g)
    mhat = m / (1.0 - state.beta1 ** state.step)
    vhat = v / (1.0 - state.beta2 ** state.step)
    return (w - lr * mhat / (np.sqrt(vhat) + state.eps)).astype(w.dtype)


def adam_step(params, grads, state: OptimState) -> list[ConvWeights]:
    """One bias-corrected Adam step. Filters see the full learning rate and
    L2 decay folded into the gradient before the moment update; biases run
    at a tenth of the rate with no decay."""
    state.step += 1
    out = []
    for i, (w, g) in enumerate(zip(params, grads)):
        kernel = _adam_update(w.kernel, g.kernel, state.m[i].kernel, state.v[i].kernel,
                              state, state.base_lr, state.weight_decay, f"layer {i} kernel")
        bias = _adam_update(w.bias, g.bias, state.m[i].bias, state.v[i].bias,
                            state, state.base_lr * state.bias_lr_factor, 0.0, f"layer {i} bias")
        out.append(ConvWeights(kernel, bias))
    return out


def _batch_tensors(samples, idx):
    x = np.stack([samples[i].lr_frames for i in idx])[:, None]       # (N,1,5,p,p)
    t = np.stack([samples[i].hr_target for i in idx])[:, None, None]  # (N,1,1,P,P)
    return x, t


def _bicubic_bases(samples, scale: int) -> list[np.ndarray]:
    p = samples[0].lr_frames.shape[-1] * scale
    return [resize_plane(s.lr_frames[2], p, p).astype(DEFAULT_DTYPE) for s in samples]


def sr_batch_step(params, spec: ModelSpec, x, bases, target, form: str = "mean"):
    """Forward + loss + parameter gradients for one batch.

    Prediction is base + pixel-shuffled residual, unclamped; training never
    clamps, only inference does.
    """
    out, caches = forward_stack(params, spec, x, want_caches=True)
    pred = pixel_shuffle(out, spec.scale) + bases
    loss, grad = loss_mse(pred, target, form)
    grads, _ = backward_stack(params, spec, caches, pixel_unshuffle(grad, spec.scale))
    return loss, grads


def _val_psnr(params, spec: ModelSpec, samples, border: int) -> float:
    from .metrics import psnr
    from .frames import Frame

    vals = []
    for s in samples:
        x = s.lr_frames[None, None]
        out, _ = forward_stack(params, spec, x)
        p = s.hr_target.shape[-1]
        base = resize_plane(s.lr_frames[2], p, p).astype(DEFAULT_DTYPE)
        pred = np.clip(pixel_shuffle(out, spec.scale)[0, 0, 0] + base, 0.0, 1.0)
        vals.append(psnr(Frame(pred), Frame(s.hr_target), border=border))
    finite = [v for v in vals if math.isfinite(v)]
    return float(np.mean(finite)) if finite else math.inf


@dataclass
class TrainResult:
    params: list
    log_rows: list = field(default_factory=list)   # (step, loss, val or None)
    final_val_psnr: float | None = None


def train(spec: ModelSpec, samples: list[WindowSample], *, epochs: int = 1,
          batch_size: int = DEFAULT_BATCH, lr: float = DEFAULT_LR, seed: int = 0,
          weight_decay: float = 5e-4, loss_form: str = "mean",
          val_samples: list[WindowSample] | None = None, val_every: int = 0,
          out_path: str | None = None, log_path: str | None = None,
          checkpoint_every: int = 0, max_steps: int = 0,
          meta: dict | None = None) -> TrainResult:
    """Seeded mini-batch training of an SR spec.

    Shuffles per epoch from the seed, logs (step, loss, periodic validation
    PSNR), writes periodic and final checkpoints to out_path, and aborts on
    a non-finite loss keeping the last checkpoint on disk.
    """
    if not samples:
        raise ValueError("empty dataset")
    params = xavier_init(spec, seed)
    state = init_optim(spec, base_lr=lr, weight_decay=weight_decay)
    shuffle = np.random.default_rng((seed, 1))
    rows = []
    meta = dict(meta or {})
    bases_all = _bicubic_bases(samples, spec.scale)

    def checkpoint(step):
        if out_path:
            save_checkpoint(params, spec, {**meta, "step": step, "seed": seed}, out_path)

    step = 0
    stop = False
    border = spec.scale
    for _ in range(epochs):
        if stop:
            break
        order = shuffle.permutation(len(samples))
        for lo in range(0, len(samples), batch_size):
            idx = order[lo: lo + batch_size]
            x, target = _batch_tensors(samples, idx)
            bases = np.stack([bases_all[i] for i in idx])[:, None, None]
            loss, grads = sr_batch_step(params, spec, x, bases, target, loss_form)
            if not math.isfinite(loss):
                checkpoint_note = " (checkpoint kept)" if out_path and step else ""
                raise TrainingDiverged(f"loss {loss} at step {step + 1}{checkpoint_note}")
            params = adam_step(params, grads, state)
            step += 1
            val = None
            if val_samples and val_every and step % val_every == 0:
                val = _val_psnr(params, spec, val_samples, border)
            rows.append((step, loss, val))
            if checkpoint_every and step % checkpoint_every == 0:
                checkpoint(step)
            if max_steps and step >= max_steps:
                stop = True
                break
    final_val = _val_psnr(params, spec, val_samples, border) if val_samples else None
    checkpoint(step)
    if log_path:
        write_log(rows, log_path)
    return TrainResult(params, rows, final_val)


def write_log(rows, path: str, val_column: str = "val_psnr_db"):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"step,loss,{val_column}\n")
        for step, loss, val in rows:
            val_cell = "" if val is None else f"{val:.4f}"
            fh.write(f"{step},{loss:.8e},{val_cell}\n")


# ---------------------------------------------------------------------------
# gradient verification

_MINI_WIDTH = {  # narrow stand-ins preserving each architecture's structure
    "cnn2d": ([("conv2d", 5, 6), ("conv2d", 6, 6), ("conv2d", 6, 6),
               ("conv2d", 6, 6), ("conv2d", 6, 5), ("conv2d", 5, 4)], 0),
    "v1": ([("conv3d", 1, 4), ("conv3d", 4, 4), ("conv3d", 4, 3),
            ("conv2d", 15, 6), ("conv2d", 6, 4), ("conv2d", 4, 4)], 3),
    "v2": ([("conv3d", 1, 4), ("conv3d", 4, 4), ("conv3d", 4, 4), ("conv3d", 4, 3),
            ("conv2d", 15, 6), ("conv2d", 6, 4)], 4),
    "v3": ([("conv3d", 1, 4), ("conv3d", 4, 4), ("conv3d", 4, 4), ("conv3d", 4, 4),
            ("conv3d", 4, 3), ("conv2d", 15, 4)], 5),
    "full": ([("conv3d", 1, 4), ("conv3d", 4, 4), ("conv3d", 4, 4), ("conv3d", 4, 4),
              ("conv3d", 4, 4, TemporalPad.NONE), ("conv2d", 12, 4)], 5),
}


def miniature_spec(name: str) -> ModelSpec:
    """A few-channel replica of one reference architecture, cheap enough for
    exhaustive finite differences."""
    rows, concat = _MINI_WIDTH[name]
    layers = []
    for i, row in enumerate(rows):
        kind, cin, cout = row[:3]
        act = "none" if i == len(rows) - 1 else "relu"
        if kind == "conv2d":
            layers.append(LayerSpec("conv2d", cin, cout, (1, 3, 3), TemporalPad.NONE, act))
        else:
            tpad = row[3] if len(row) > 3 else TemporalPad.ZERO
            layers.append(LayerSpec("conv3d", cin, cout, (3, 3, 3), tpad, act))
    return ModelSpec(layers, concat_after=concat, scale=2)


@dataclass
class GradCheckReport:
    name: str
    dtype: str
    tolerance: float
    per_tensor: list    # (label, max relative error)
    skipped: int = 0    # probes discarded for straddling a ReLU kink

    @property
    def worst(self) -> float:
        return max(err for _, err in self.per_tensor)

    @property
    def passed(self) -> bool:
        return self.worst < self.tolerance

    def summary(self) -> str:
        state = "pass" if self.passed else "FAIL"
        return (f"{self.name} [{self.dtype}]: max rel err {self.worst:.3e} "
                f"(tol {self.tolerance:.0e}, {self.skipped} kink probes skipped) {state}")


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    """Elementwise relative error with the denominator floored at a tenth of
    the tensor's largest magnitude, so finite-difference roundoff on
    near-zero entries is judged against the tensor scale."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(np.abs(a).max(), np.abs(b).max(), 1e-12)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 0.1 * scale)
    return float(np.max(np.abs(a - b) / denom))


def grad_check(spec: ModelSpec, seed: int = 0, tolerance: float = 1e-3,
               dtype=np.float32, name: str = "spec", fault: int | None = None) -> GradCheckReport:
    """Compare every analytic parameter and input gradient of the layer
    stack against central differences.

    A probe that flips any ReLU between its two evaluations straddles a
    kink, where the finite difference does not estimate the gradient; such
    probes are skipped and counted in the report. The difference quotients
    are always taken on a float64 replica of the parameters so the reference
    is limited by truncation error, not by the forward dtype; the float32
    run then measures only the rounding of the analytic backward path.

    `fault` corrupts that layer's analytic bias gradient first, a
    self-diagnostic proving the comparison actually bites.
    """
    rng = np.random.default_rng(seed)
    params = [ConvWeights(k.kernel.astype(dtype), k.bias.astype(dtype))
              for k in xavier_init(spec, seed)]
    for w in params:  # nonzero biases so their gradients are exercised off the origin
        w.bias[...] = (0.05 * rng.standard_normal(w.bias.shape)).astype(dtype)
    x = rng.uniform(0.1, 0.9, (1, 1, spec.input_frames, 6, 6)).astype(dtype)
    out, caches = forward_stack(params, spec, x, want_caches=True)
    target = rng.uniform(0.0, 1.0, out.shape).astype(dtype)
    _, grad = loss_mse(out, target, form="sum")
    grads, gx = backward_stack(params, spec, caches, grad)
    if fault is not None:
        grads[fault] = ConvWeights(grads[fault].kernel, grads[fault].bias + 1.0)

    params64 = [ConvWeights(w.kernel.astype(np.float64), w.bias.astype(np.float64))
                for w in params]
    x64 = x.astype(np.float64)
    target64 = target.astype(np.float64)

    def loss_and_masks():
        o, cs = forward_stack(params64, spec, x64, want_caches=True)
        return loss_mse(o, target64, form="sum")[0], [pre > 0 for _, pre in cs]

    eps = 1e-5
    report = []
    skipped = 0

    def central(arr):
        nonlocal skipped
        fd = np.zeros(arr.shape, dtype=np.float64)
        valid = np.ones(arr.shape, dtype=bool)
        flat, fdf, vf = arr.reshape(-1), fd.reshape(-1), valid.reshape(-1)
        for j in range(flat.size):
            keep = flat[j]
            flat[j] = keep + eps
            hi, masks_hi = loss_and_masks()
            flat[j] = keep - eps
            lo, masks_lo = loss_and_masks()
            flat[j] = keep
            if all(np.array_equal(a, b) for a, b in zip(masks_hi, masks_lo)):
                fdf[j] = (hi - lo) / (2.0 * eps)
            else:
                vf[j] = False
                skipped += 1
        return fd, valid

    def compare(analytic, fd, valid):
        if not valid.any():
            return math.inf  # nothing comparable; surface as a failure
        return _rel_err(np.asarray(analytic)[valid], fd[valid])

    for i, w in enumerate(params64):
        fd_k, ok_k = central(w.kernel)
        fd_b, ok_b = central(w.bias)
        report.append((f"layer {i} kernel", compare(grads[i].kernel, fd_k, ok_k)))
        report.append((f"layer {i} bias", compare(grads[i].bias, fd_b, ok_b)))
    fd_x, ok_x = central(x64)
    report.append(("input", compare(gx, fd_x, ok_x)))
    return GradCheckReport(name, np.dtype(dtype).name, tolerance, report, skipped)
