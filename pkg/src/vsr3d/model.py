"""Network description, the five reference architectures, and inference.

A ModelSpec is an ordered list of conv layers plus the index at which the
temporal axis is flattened into channels (group-major: the depth slices of
group 0 come first). SR specs end in scale^2 output groups that pixel-shuffle
into the residual added to the bicubic-upscaled middle frame; classifier
("sf") specs end in one logit group per class.
"""

from dataclasses import dataclass

import numpy as np

from .bicubic import bicubic_resize
from .frames import Frame
from .tensor_core import (DEFAULT_DTYPE, ConvWeights, PadPolicy, TemporalPad,
                          conv_backward, conv_forward, pixel_shuffle, relu,
                          relu_backward, tensor5d)

ARCH_NAMES = ("cnn2d", "v1", "v2", "v3", "full")


@dataclass(frozen=True)
class LayerSpec:
    kind: str                      # conv3d | conv2d
    in_groups: int
    out_groups: int
    kernel: tuple[int, int, int]
    temporal_pad: TemporalPad = TemporalPad.NONE
    activation: str = "relu"       # relu | none
    stride: tuple[int, int] = (1, 1)
    spatial_pad: int = 1

    def __post_init__(self):
        if self.kind not in ("conv3d", "conv2d"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind == "conv2d" and (self.kernel[0] != 1 or self.temporal_pad is not TemporalPad.NONE):
            raise ValueError("conv2d layers need kernel depth 1 and no temporal padding")
        if self.activation not in ("relu", "none"):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def weight_count(self) -> int:
        kd, kh, kw = self.kernel
        return self.in_groups * self.out_groups * kd * kh * kw


@dataclass(frozen=True)
class ModelSpec:
    """Layer stack + concat position. kind 'sr' nets must consume the whole
    temporal axis (depth 1 at the output) and end in scale^2 groups."""

    layers: tuple[LayerSpec, ...]
    concat_after: int | None
    scale: int = 2
    input_frames: int = 5
    kind: str = "sr"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.kind not in ("sr", "sf"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not self.layers:
            raise ValueError("a model needs at least one layer")
        if self.input_frames != 5:
            raise ValueError("the sliding window is fixed at five frames")
        if self.scale < 1:
            raise ValueError("scale must be >= 1")
        if self.concat_after is not None and not 0 <= self.concat_after <= len(self.layers):
            raise ValueError("concat_after out of range")
        for i, layer in enumerate(self.layers):
            want_2d = self.concat_after is not None and i >= self.concat_after
            if (layer.kind == "conv2d") != want_2d:
                raise ValueError(
                    f"layer {i} must be {'conv2d' if want_2d else 'conv3d'} "
                    f"given concat_after={self.concat_after}")
            if (layer.activation == "none") != (i == len(self.layers) - 1):
                raise ValueError("exactly the final layer must have no activation")
        chans, depth, trace = self._propagate()
        last = self.layers[-1]
        if self.kind == "sr":
            if depth != 1:
                raise ValueError(f"temporal depth must reach 1 at the output, trace {trace}")
            if last.out_groups != self.scale * self.scale:
                raise ValueError(
                    f"final layer emits {last.out_groups} groups, expected scale^2 = "
                    f"{self.scale * self.scale}")
        object.__setattr__(self, "_depth_trace", tuple(trace))

    def _propagate(self) -> tuple[int, int, list[int]]:
        chans, depth = 1, self.input_frames
        if self.concat_after == 0:
            chans, depth = chans * depth, 1
        trace = []
        for i, layer in enumerate(self.layers):
            if layer.in_groups != chans:
                raise ValueError(
                    f"layer {i} expects {layer.in_groups} input groups but receives {chans}")
            kd = layer.kernel[0]
            if layer.temporal_pad is TemporalPad.NONE:
                depth = depth - kd + 1
            if depth < 1:
                raise ValueError(f"temporal depth exhausted at layer {i}")
            chans = layer.out_groups
            trace.append(depth)
            if i + 1 == self.concat_after:
                chans, depth = chans * depth, 1
        return chans, depth, trace

    def depth_trace(self) -> tuple[int, ...]:
        """Temporal depth after each layer (before any flatten)."""
        return self._depth_trace


def _conv3(i, o, tpad=TemporalPad.ZERO, act="relu"):
    return LayerSpec("conv3d", i, o, (3, 3, 3), tpad, act)


def _conv2(i, o, act="relu"):
    return LayerSpec("conv2d", i, o, (1, 3, 3), TemporalPad.NONE, act)


def build_architecture(name: str, scale: int = 2) -> ModelSpec:
    """One of the five reference configurations, all 3x3(x3) kernels."""
    if scale not in (2, 3, 4):
        raise ValueError("scale must be one of 2, 3, 4")
    s2 = scale * scale
    if name == "cnn2d":
        layers = [_conv2(5, 32), _conv2(32, 64), _conv2(64, 64), _conv2(64, 64),
                  _conv2(64, 35), _conv2(35, s2, act="none")]
        return ModelSpec(layers, concat_after=0, scale=scale)
    if name == "v1":
        layers = [_conv3(1, 32), _conv3(32, 32), _conv3(32, 16),
                  _conv2(80, 64), _conv2(64, 32), _conv2(32, s2, act="none")]
        return ModelSpec(layers, concat_after=3, scale=scale)
    if name == "v2":
        layers = [_conv3(1, 32), _conv3(32, 32), _conv3(32, 32), _conv3(32, 16),
                  _conv2(80, 64), _conv2(64, s2, act="none")]
        return ModelSpec(layers, concat_after=4, scale=scale)
    if name == "v3":
        layers = [_conv3(1, 32), _conv3(32, 32), _conv3(32, 32), _conv3(32, 32),
                  _conv3(32, 16), _conv2(80, s2, act="none")]
        return ModelSpec(layers, concat_after=5, scale=scale)
    if name == "full":
        # the last 3D layer runs without extrapolation, shedding depth 5 -> 3
        layers = [_conv3(1, 32), _conv3(32, 32), _conv3(32, 32), _conv3(32, 32),
                  _conv3(32, 32, tpad=TemporalPad.NONE),
                  _conv2(96, s2, act="none")]
        return ModelSpec(layers, concat_after=5, scale=scale)
    raise ValueError(f"unknown architecture {name!r}; expected one of {ARCH_NAMES}")


def count_parameters(spec: ModelSpec, include_bias: bool = False) -> int:
    total = sum(layer.weight_count for layer in spec.layers)
    if include_bias:
        total += sum(layer.out_groups for layer in spec.layers)
    return total


def zero_params(spec: ModelSpec, dtype=DEFAULT_DTYPE) -> list[ConvWeights]:
    return [ConvWeights(np.zeros((l.out_groups, l.in_groups) + l.kernel, dtype=dtype),
                        np.zeros(l.out_groups, dtype=dtype))
            for l in spec.layers]


def check_params(params, spec: ModelSpec):
    if len(params) != len(spec.layers):
        raise ValueError(f"{len(params)} parameter sets for {len(spec.layers)} layers")
    for i, (w, l) in enumerate(zip(params, spec.layers)):
        if w.kernel.shape != (l.out_groups, l.in_groups) + l.kernel:
            raise ValueError(f"layer {i} kernel shape {w.kernel.shape} does not match its spec")


def _flatten_depth(x: np.ndarray) -> np.ndarray:
    # (N, C, D, H, W) -> (N, C*D, 1, H, W); C-order reshape is exactly the
    # group-major layout written into checkpoints
    n, c, d, h, w = x.shape
    return x.reshape(n, c * d, 1, h, w)


def forward_stack(params, spec: ModelSpec, x: np.ndarray, want_caches: bool = False):
    """Apply the layer stack to (N, C, D, H, W) input.

    Returns (out, caches); caches hold per-layer (input, preactivation)
    pairs when requested, for backward_stack.
    """
    check_params(params, spec)
    caches = []
    if spec.concat_after == 0:
        x = _flatten_depth(x)
    for i, (layer, w) in enumerate(zip(spec.layers, params)):
        pad = PadPolicy(spatial=layer.spatial_pad, temporal=layer.temporal_pad)
        pre = conv_forward(x, w, pad, layer.stride)
        caches.append((x, pre) if want_caches else None)
        x = relu(pre) if layer.activation == "relu" else pre
        if i + 1 == spec.concat_after:
            x = _flatten_depth(x)
    return x, caches


def backward_stack(params, spec: ModelSpec, caches, grad_out: np.ndarray):
    """Gradients of a scalar loss wrt every parameter and the stack input."""
    trace = spec.depth_trace()
    grads: list = [None] * len(spec.layers)
    g = grad_out
    for i in reversed(range(len(spec.layers))):
        layer = spec.layers[i]
        x_in, pre = caches[i]
        if i + 1 == spec.concat_after:
            n, cd, _, h, w = g.shape
            g = g.reshape(n, layer.out_groups, trace[i], h, w)
        if layer.activation == "relu":
            g = relu_backward(pre, g)
        pad = PadPolicy(spatial=layer.spatial_pad, temporal=layer.temporal_pad)
        g, grads[i] = conv_backward(x_in, params[i], pad, g, layer.stride)
    if spec.concat_after == 0:
        n, cd, _, h, w = g.shape
        g = g.reshape(n, 1, cd, h, w)
    return grads, g


def stack_windows(windows) -> np.ndarray:
    """Luma of a batch of five-frame windows as an (N, 1, 5, H, W) tensor."""
    batch = np.stack([np.stack([f.luma for f in win]) for win in windows])
    return tensor5d(batch[:, None])


def predict_residual(params, spec: ModelSpec, x: np.ndarray) -> np.ndarray:
    """HR residual plane batch (N, 1, 1, H*scale, W*scale) for SR specs."""
    out, _ = forward_stack(params, spec, x)
    shuffled = pixel_shuffle(out, spec.scale)
    if shuffled.shape[1] != 1 or shuffled.shape[2] != 1:
        raise ValueError(f"stack output {out.shape} does not shuffle into one residual plane")
    return shuffled


def forward(params, spec: ModelSpec, window) -> Frame:
    """Upscale the middle frame of a five-frame window."""
    if spec.kind != "sr":
        raise ValueError("forward needs an SR spec")
    if len(window) != spec.input_frames:
        raise ValueError(f"expected {spec.input_frames} frames, got {len(window)}")
    if any((f.height, f.width) != (window[0].height, window[0].width) for f in window):
        raise ValueError("window frames disagree on geometry")
    x = stack_windows([window])
    residual = predict_residual(params, spec, x)[0, 0, 0]
    middle = window[spec.input_frames // 2]
    base = bicubic_resize(middle, middle.width * spec.scale, middle.height * spec.scale)
    return Frame(np.clip(base.luma + residual, 0.0, 1.0))


def forward_multiscale(params, spec: ModelSpec, window, requested_scale: int) -> Frame:
    """Serve scales 3 and 4 with a scale-2 model by bicubic pre-upscaling
    each input frame (x1.5 and x2 respectively)."""
    if spec.scale != 2:
        raise ValueError("multiscale inference needs a scale-2 model")
    if requested_scale == 2:
        return forward(params, spec, window)
    if requested_scale not in (3, 4):
        raise ValueError("requested scale must be one of 2, 3, 4")
    h, w = window[0].height, window[0].width
    if requested_scale == 3 and (h % 2 or w % 2):
        raise ValueError("scale 3 needs even input geometry (x1.5 pre-upscale)")
    ph, pw = h * requested_scale // 2, w * requested_scale // 2
    pre = [bicubic_resize(f, pw, ph) for f in window]
    return forward(params, spec, pre)


def dump_feature_maps(params, spec: ModelSpec, window, layer: int, out_dir: str) -> list[str]:
    """Write every temporal slice of every group at a layer (1-based index)
    as a min-max normalized PGM; returns the written paths."""
    import os

    from .video_io import write_pgm

    if not 1 <= layer <= len(spec.layers):
        raise ValueError(f"layer must be in 1..{len(spec.layers)}")
    x = stack_windows([window])
    _, caches = forward_stack(params, spec, x, want_caches=True)
    _, pre = caches[layer - 1]
    act = relu(pre) if spec.layers[layer - 1].activation == "relu" else pre
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    _, groups, depth, _, _ = act.shape
    for gi in range(groups):
        for ti in range(depth):
            img = np.asarray(act[0, gi, ti], dtype=np.float64)
            spread = img.max() - img.min()
            img = (img - img.min()) / spread if spread > 0 else np.zeros_like(img)
            path = os.path.join(out_dir, f"layer{layer}_g{gi:03d}_t{ti}.pgm")
            write_pgm(img, path)
            paths.append(path)
    return paths
