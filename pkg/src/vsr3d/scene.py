"""Scene-change detection and frame replacement.

A five-frame window that straddles a cut feeds the SR net frames from two
unrelated scenes. A shallow five-class 2D-CNN locates the cut (after frame
1..4, or nowhere) on heavily downscaled luma, and `replace_frames` rewrites
the cross-scene frames with the nearest frame on the middle frame's side of
the boundary, so the SR net only ever sees one scene.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bicubic import resize_plane
from .checkpoint import save_checkpoint
from .frames import Frame, VideoClip
from .model import LayerSpec, ModelSpec, backward_stack, forward_stack
from .tensor_core import DEFAULT_DTYPE
from .training import adam_step, init_optim, write_log, xavier_init

SF_WIDTH = 48
SF_HEIGHT = 27
SF_LR = 1e-3
SF_BATCH = 64


class SceneLabel(Enum):
    """Position of the cut inside a five-frame window.

    CHANGE_AFTER_K: frames 1..K and K+1..5 belong to different scenes.
    Values double as class indices; ties resolve to the lowest value.
    """
    CHANGE_AFTER_1 = 0
    CHANGE_AFTER_2 = 1
    CHANGE_AFTER_3 = 2
    CHANGE_AFTER_4 = 3
    NO_CHANGE = 4


@dataclass(frozen=True)
class SFInput:
    """Five luma frames shrunk to the fixed 48x27 classifier geometry and
    stacked as channels."""
    planes: np.ndarray     # (5, 27, 48) float32

    def __post_init__(self):
        p = np.asarray(self.planes)
        if p.shape != (5, SF_HEIGHT, SF_WIDTH):
            raise ValueError(f"SFInput wants (5, {SF_HEIGHT}, {SF_WIDTH}), got {p.shape}")
        object.__setattr__(self, "planes", p.astype(DEFAULT_DTYPE, copy=False))


def sf_input_from_window(window) -> SFInput:
    """Downscale a five-frame window onto the classifier grid. Sources
    smaller than the 48x27 target carry no extra detail to pool and are
    rejected."""
    if len(window) != 5:
        raise ValueError(f"expected a five-frame window, got {len(window)}")
    for f in window:
        if f.width < SF_WIDTH or f.height < SF_HEIGHT:
            raise ValueError(
                f"{f.width}x{f.height} frame is smaller than the "
                f"{SF_WIDTH}x{SF_HEIGHT} classifier input")
    planes = np.stack([resize_plane(f.luma, SF_HEIGHT, SF_WIDTH) for f in window])
    return SFInput(planes.astype(DEFAULT_DTYPE))


def build_sf_net(layers: int = 3) -> ModelSpec:
    """Shallow stride-2 classifier over the 5x27x48 input.

    The widths and the full-extent final convolution (a linear head over
    whatever spatial extent remains) are sized for cheapness; nothing about
    them is load-bearing beyond emitting five logits.
    """
    if layers == 3:
        stack = [
            LayerSpec("conv2d", 5, 16, (1, 3, 3), stride=(2, 2)),
            LayerSpec("conv2d", 16, 32, (1, 3, 3), stride=(2, 2)),
            LayerSpec("conv2d", 32, 5, (1, 7, 12), activation="none", spatial_pad=0),
        ]
    elif layers == 2:
        stack = [
            LayerSpec("conv2d", 5, 16, (1, 3, 3), stride=(2, 2)),
            LayerSpec("conv2d", 16, 5, (1, 14, 24), activation="none", spatial_pad=0),
        ]
    else:
        raise ValueError(f"SF net comes in 2 or 3 layers, not {layers}")
    return ModelSpec(stack, concat_after=0, scale=1, kind="sf")


def _sf_batch(inputs: list[SFInput]) -> np.ndarray:
    # (N, 1, 5, 27, 48); the concat at position 0 turns depth into channels
    return np.stack([s.planes for s in inputs])[:, None]


def sf_logits(params, spec: ModelSpec, inputs: list[SFInput]) -> np.ndarray:
    if spec.kind != "sf":
        raise ValueError("sf_logits needs an SF spec")
    out, _ = forward_stack(params, spec, _sf_batch(inputs))
    return out.reshape(out.shape[0], -1)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean softmax cross-entropy and its gradient w.r.t. the logits."""
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ValueError(f"logits {logits.shape} do not pair with labels {labels.shape}")
    p = softmax(logits)
    n = logits.shape[0]
    picked = p[np.arange(n), labels]
    loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
    grad = p.copy()
    grad[np.arange(n), labels] -= 1.0
    return loss, (grad / n).astype(logits.dtype)


def classify_window(params, spec: ModelSpec, window) -> SceneLabel:
    """Argmax class for one window; ties resolve to the lowest index."""
    logits = sf_logits(params, spec, [sf_input_from_window(window)])[0]
    return SceneLabel(int(np.argmax(logits)))


_REPLACEMENT = {
    SceneLabel.CHANGE_AFTER_1: (1, 1, 2, 3, 4),
    SceneLabel.CHANGE_AFTER_2: (2, 2, 2, 3, 4),
    SceneLabel.CHANGE_AFTER_3: (0, 1, 2, 2, 2),
    SceneLabel.CHANGE_AFTER_4: (0, 1, 2, 3, 3),
    SceneLabel.NO_CHANGE: (0, 1, 2, 3, 4),
}


def replace_frames(window, label: SceneLabel) -> list:
    """Rewrite frames on the far side of the cut with the boundary-adjacent
    frame from the middle frame's scene. Pure: returns a new list, the input
    is untouched, and reapplying with the same label changes nothing."""
    if len(window) != 5:
        raise ValueError(f"expected a five-frame window, got {len(window)}")
    return [window[i] for i in _REPLACEMENT[label]]


def make_sf_dataset(clips_a: list[VideoClip], clips_b: list[VideoClip],
                    per_class: int, seed: int) -> list[tuple[SFInput, SceneLabel]]:
    """Balanced labeled windows: CHANGE_AFTER_K splices K consecutive frames
    of a clip from one pool with 5-K consecutive frames of a clip from the
    other; NO_CHANGE takes five consecutive frames of a single clip. The two
    pools are treated as disjoint scenes."""
    if not clips_a or not clips_b:
        raise ValueError("need two non-empty scene pools")
    for name, pool in (("A", clips_a), ("B", clips_b)):
        for i, clip in enumerate(pool):
            if len(clip) < 5:
                raise ValueError(f"pool {name} clip {i} has {len(clip)} frames; need at least 5")
    rng = np.random.default_rng(seed)

    def segment(pool, count):
        clip = pool[int(rng.integers(len(pool)))]
        start = int(rng.integers(len(clip) - count + 1))
        return [clip[start + i] for i in range(count)]

    samples = []
    for label in SceneLabel:
        for _ in range(per_class):
            if label is SceneLabel.NO_CHANGE:
                pool = clips_a if rng.integers(2) == 0 else clips_b
                frames = segment(pool, 5)
            else:
                k = label.value + 1
                first, second = ((clips_a, clips_b) if rng.integers(2) == 0
                                 else (clips_b, clips_a))
                frames = segment(first, k) + segment(second, 5 - k)
            samples.append((sf_input_from_window(frames), label))
    return samples


def sf_predictions(params, spec: ModelSpec,
                   samples: list[tuple[SFInput, SceneLabel]],
                   batch_size: int = 256) -> np.ndarray:
    preds = []
    for lo in range(0, len(samples), batch_size):
        chunk = [s for s, _ in samples[lo:lo + batch_size]]
        preds.append(np.argmax(sf_logits(params, spec, chunk), axis=1))
    return np.concatenate(preds) if preds else np.zeros(0, dtype=int)


def sf_accuracy(params, spec: ModelSpec, samples) -> float:
    if not samples:
        raise ValueError("no samples to score")
    preds = sf_predictions(params, spec, samples)
    truth = np.array([lab.value for _, lab in samples])
    return float(np.mean(preds == truth))


def confusion_matrix(params, spec: ModelSpec, samples) -> np.ndarray:
    """counts[true, predicted] over the five classes."""
    preds = sf_predictions(params, spec, samples)
    counts = np.zeros((5, 5), dtype=np.int64)
    for (_, lab), p in zip(samples, preds):
        counts[lab.value, int(p)] += 1
    return counts


def confusion_csv(counts: np.ndarray) -> str:
    names = [lab.name.lower() for lab in SceneLabel]
    lines = ["true_label," + ",".join(names)]
    for lab in SceneLabel:
        row = ",".join(str(int(v)) for v in counts[lab.value])
        lines.append(f"{names[lab.value]},{row}")
    return "\n".join(lines) + "\n"


@dataclass
class SFTrainResult:
    params: list
    log_rows: list
    final_val_accuracy: float | None


def train_sf(spec: ModelSpec, samples: list[tuple[SFInput, SceneLabel]], *,
             epochs: int = 1, batch_size: int = SF_BATCH, lr: float = SF_LR,
             seed: int = 0, weight_decay: float = 0.0,
             val_samples=None, val_every: int = 0,
             out_path=None, log_path=None, meta=None) -> SFTrainResult:
    """Cross-entropy Adam training of the scene classifier. Deterministic
    for a fixed (samples, seed, hyper) triple, like the SR loop."""
    if spec.kind != "sf":
        raise ValueError("train_sf needs an SF spec")
    if not samples:
        raise ValueError("no training samples")
    params = xavier_init(spec, seed)
    state = init_optim(spec, base_lr=lr, weight_decay=weight_decay)
    shuffle_rng = np.random.default_rng((seed, 1))
    xs_all = _sf_batch([s for s, _ in samples])
    labels_all = np.array([lab.value for _, lab in samples])
    log_rows = []
    step = 0
    last_val = None
    for _ in range(max(epochs, 0)):
        order = shuffle_rng.permutation(len(samples))
        for lo in range(0, len(order), batch_size):
            idx = order[lo:lo + batch_size]
            x = xs_all[idx]
            out, caches = forward_stack(params, spec, x, want_caches=True)
            logits = out.reshape(out.shape[0], -1)
            loss, grad = loss_cross_entropy(logits, labels_all[idx])
            grads, _ = backward_stack(params, spec, caches,
                                      grad.reshape(out.shape))
            params = adam_step(params, grads, state)
            step += 1
            if val_samples and val_every and step % val_every == 0:
                last_val = sf_accuracy(params, spec, val_samples)
                log_rows.append((step, loss, last_val))
            else:
                log_rows.append((step, loss, None))
    if val_samples:
        last_val = sf_accuracy(params, spec, val_samples)
    if out_path is not None:
        meta = dict(meta or {})
        meta.update({"step": str(step), "seed": str(seed)})
        save_checkpoint(params, spec, meta, out_path)
    if log_path is not None:
        write_log(log_rows, log_path, val_column="val_accuracy")
    return SFTrainResult(params, log_rows, last_val)
