"""Run configuration: documented defaults, `key = value` files, CLI overrides.

A config file holds any subset of RunConfig's fields, one `key = value` per
line, with `#` comments and blank lines ignored. Unknown keys are rejected
rather than silently dropped so typos cannot disable an option. Command-line
flags win over file values, which win over the defaults below.
"""

from dataclasses import dataclass, fields

FIELD_DOCS = {
    "arch": "SR architecture: cnn2d, v1, v2, v3, or full",
    "scale": "upscaling factor (2, 3, or 4)",
    "seed": "single seed every random choice derives from",
    "train_clips": "comma-separated training clip paths",
    "val_clips": "comma-separated validation clip paths (empty: hold out training samples)",
    "frame_stride": "extract windows from every Nth frame",
    "subimages_per_frame": "random crops per extracted frame",
    "lr_patch_size": "LR crop edge in pixels (0: per-scale default 80/60/40)",
    "epochs": "passes over the extracted dataset",
    "batch_size": "windows per optimizer step",
    "lr": "Adam learning rate for filters (biases run at a tenth)",
    "weight_decay": "L2 penalty folded into filter gradients",
    "loss_form": "mse reduction: mean or sum",
    "max_steps": "stop after this many steps (0: no cap)",
    "val_every": "steps between validation passes (0: only at the end)",
    "checkpoint_every": "steps between checkpoint rewrites (0: only at the end)",
    "border": "pixels cropped from every edge before PSNR/SSIM",
    "out_path": "checkpoint the run writes",
    "log_path": "training log CSV (empty: not written)",
    "csv_path": "metric / report CSV (empty: not written)",
    "checkpoint": "model checkpoint to run",
    "sf_checkpoint": "scene-change classifier checkpoint",
    "sf_layers": "scene classifier depth (2 or 3)",
    "per_class": "scene training samples per class",
    "scenes_a": "comma-separated clip paths forming scene pool A",
    "scenes_b": "comma-separated clip paths forming scene pool B",
    "sf_epochs": "passes over the scene training set",
    "sf_batch_size": "scene windows per optimizer step",
    "sf_lr": "Adam learning rate for the scene classifier",
    "method": "checkpoint-free baseline (only: bicubic)",
    "size": "WxH geometry for raw YUV clips, e.g. 704x576",
    "format": "force clip format: y4m, rawyuv420, or pgmdir",
    "dump_features": "directory for feature-map PGMs (empty: off)",
    "dump_layer": "1-based layer whose feature maps get dumped",
}


class ConfigError(ValueError):
    """Malformed config file or invalid field value."""


@dataclass
class RunConfig:
    arch: str = "full"
    scale: int = 2
    seed: int = 0
    train_clips: str = ""
    val_clips: str = ""
    frame_stride: int = 5
    subimages_per_frame: int = 10
    lr_patch_size: int = 0
    epochs: int = 10
    batch_size: int = 32
    lr: float = 5e-4
    weight_decay: float = 5e-4
    loss_form: str = "mean"
    max_steps: int = 0
    val_every: int = 0
    checkpoint_every: int = 0
    border: int = 0
    out_path: str = "model.ckpt"
    log_path: str = ""
    csv_path: str = ""
    checkpoint: str = ""
    sf_checkpoint: str = ""
    sf_layers: int = 3
    per_class: int = 200
    scenes_a: str = ""
    scenes_b: str = ""
    sf_epochs: int = 20
    sf_batch_size: int = 64
    sf_lr: float = 1e-3
    method: str = ""
    size: str = ""
    format: str = ""
    dump_features: str = ""
    dump_layer: int = 1

    def clip_size(self):
        """Parse the `size` field into (width, height), or None if unset."""
        if not self.size:
            return None
        parts = self.size.lower().split("x")
        try:
            w, h = (int(p) for p in parts)
        except ValueError:
            raise ConfigError(f"size wants WxH, got {self.size!r}") from None
        if w <= 0 or h <= 0:
            raise ConfigError(f"size wants positive WxH, got {self.size!r}")
        return w, h

    def path_list(self, field_name: str) -> list:
        raw = getattr(self, field_name)
        return [p.strip() for p in raw.split(",") if p.strip()]


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    want = _TYPES[key]
    try:
        if want == "int" or want is int:
            return int(raw)
        if want == "float" or want is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"config key {key!r} wants {want}, got {raw!r}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """`key = value` lines into a validated {field: value} dict."""
    values = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{ln}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"{source}:{ln}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{ln}: duplicate config key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file (if any), then non-None overrides."""
    cfg = RunConfig()
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            file_values = parse_config_text(fh.read(), source=path)
        for key, value in file_values.items():
            setattr(cfg, key, value)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if cfg.scale not in (2, 3, 4):
        raise ConfigError(f"scale must be 2, 3, or 4, got {cfg.scale}")
    if cfg.loss_form not in ("mean", "sum"):
        raise ConfigError(f"loss_form must be mean or sum, got {cfg.loss_form!r}")
    if cfg.sf_layers not in (2, 3):
        raise ConfigError(f"sf_layers must be 2 or 3, got {cfg.sf_layers}")
    if cfg.method not in ("", "bicubic"):
        raise ConfigError(f"unknown method {cfg.method!r}")
    if cfg.format not in ("", "y4m", "rawyuv420", "pgmdir"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    for field_name in ("epochs", "batch_size", "per_class", "dump_layer",
                       "frame_stride", "subimages_per_frame", "sf_epochs",
                       "sf_batch_size"):
        if getattr(cfg, field_name) < 1:
            raise ConfigError(f"{field_name} must be positive")
    for field_name in ("border", "max_steps", "val_every", "checkpoint_every",
                       "lr_patch_size"):
        if getattr(cfg, field_name) < 0:
            raise ConfigError(f"{field_name} cannot be negative")
    if cfg.lr <= 0 or cfg.sf_lr <= 0 or cfg.weight_decay < 0:
        raise ConfigError("learning rates must be positive and weight_decay non-negative")
    cfg.clip_size()
