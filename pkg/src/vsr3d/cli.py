"""Batch command line tying the toolkit together.

Subcommands: train, upscale, evaluate, scene, sf-train, verify, param-count.
Every run is deterministic given its config and --seed; derived randomness
(dataset extraction, shuffling, validation splits) uses fixed offsets from
that one seed. Exit codes: 0 success, 1 runtime failure, 2 usage or config
error.
"""

import argparse
import math
import os
import sys

import numpy as np

from .bicubic import bicubic_resize, degrade_clip, resize_plane, upscale_chroma
from .checkpoint import CheckpointError, load_checkpoint
from .config import ConfigError, FIELD_DOCS, RunConfig, load_config
from .frames import Frame, VideoClip
from .metrics import format_metric, metrics_csv, psnr, ssim
from .model import (ARCH_NAMES, LayerSpec, ModelSpec, build_architecture,
                    count_parameters, dump_feature_maps, forward,
                    forward_multiscale, forward_stack)
from .reference import conv_forward_loop
from .scene import (SceneLabel, build_sf_net, confusion_csv, confusion_matrix,
                    make_sf_dataset, replace_frames, sf_input_from_window,
                    sf_logits, softmax, train_sf)
from .tensor_core import (ConvWeights, PadPolicy, TemporalPad, pixel_shuffle,
                          pixel_unshuffle, relu)
from .training import (DatasetRecipe, TrainingDiverged, extract_dataset,
                       grad_check, miniature_spec, train, xavier_init)
from .video_io import ClipFormatError, read_clip, write_clip

# bias-free weight totals of the five reference architectures at scale 2
REFERENCE_WEIGHT_COUNTS = {
    "cnn2d": 115_020,
    "v1": 108_000,
    "v2": 118_368,
    "v3": 100_512,
    "full": 114_912,
}


def _check_exists(path: str, what: str) -> str:
    if not path:
        raise ConfigError(f"{what} is required")
    if not os.path.exists(path):
        raise ConfigError(f"{what} {path!r} does not exist")
    return path


def _read(cfg: RunConfig, path: str) -> VideoClip:
    _check_exists(path, "clip")
    return read_clip(path, fmt=cfg.format or None, size=cfg.clip_size())


def _load_sr(path: str):
    _check_exists(path, "checkpoint")
    params, spec, meta = load_checkpoint(path)
    if spec.kind != "sr":
        raise ValueError(f"{path} holds a {spec.kind!r} model, not an SR model")
    return params, spec, meta


def _load_sf(path: str):
    _check_exists(path, "scene checkpoint")
    params, spec, meta = load_checkpoint(path)
    if spec.kind != "sf":
        raise ValueError(f"{path} holds a {spec.kind!r} model, not a scene classifier")
    return params, spec, meta


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(os.path.normpath(path)))[0]


def _output_format(cfg: RunConfig, path: str):
    """Like detection on input, but an extension-less new path means a PGM
    directory that does not exist yet."""
    if cfg.format:
        return cfg.format
    from .video_io import detect_format
    try:
        detect_format(path)
        return None  # writer will detect the same way
    except ClipFormatError:
        if "." not in os.path.basename(os.path.normpath(path)):
            return "pgmdir"
        raise


# ---------------------------------------------------------------------------
# train

def _bicubic_val_psnr(samples, scale: int) -> float:
    vals = []
    for s in samples:
        p = s.hr_target.shape[-1]
        base = np.clip(resize_plane(s.lr_frames[2], p, p), 0.0, 1.0).astype(np.float32)
        vals.append(psnr(Frame(base), Frame(s.hr_target), border=scale))
    finite = [v for v in vals if math.isfinite(v)]
    return float(np.mean(finite)) if finite else math.inf


def cmd_train(cfg: RunConfig) -> int:
    paths = cfg.path_list("train_clips")
    if not paths:
        raise ConfigError("train needs --data clips (config key train_clips)")
    if cfg.arch not in ARCH_NAMES:
        raise ConfigError(f"unknown architecture {cfg.arch!r}; pick from {', '.join(ARCH_NAMES)}")
    spec = build_architecture(cfg.arch, cfg.scale)
    print(f"vsr3d train: arch {cfg.arch} x{cfg.scale}, {count_parameters(spec):,} weights, "
          f"seed {cfg.seed}")
    clips = [_read(cfg, p) for p in paths]
    recipe = DatasetRecipe(scale=cfg.scale, frame_stride=cfg.frame_stride,
                           subimages_per_frame=cfg.subimages_per_frame,
                           lr_patch_size=cfg.lr_patch_size or None)
    samples = extract_dataset(clips, recipe, seed=cfg.seed)
    if cfg.val_clips:
        val_clips = [_read(cfg, p) for p in cfg.path_list("val_clips")]
        val = extract_dataset(val_clips, recipe, seed=cfg.seed + 1)
        train_samples = samples
    else:
        # hold out every 20th extracted sample
        val = samples[::20]
        train_samples = [s for i, s in enumerate(samples) if i % 20]
        if not train_samples:
            raise ConfigError("dataset too small to hold out validation samples; "
                              "supply --val clips")
    print(f"{len(train_samples)} training / {len(val)} validation samples")
    result = train(spec, train_samples, epochs=cfg.epochs, batch_size=cfg.batch_size,
                   lr=cfg.lr, seed=cfg.seed, weight_decay=cfg.weight_decay,
                   loss_form=cfg.loss_form, val_samples=val, val_every=cfg.val_every,
                   out_path=cfg.out_path, log_path=cfg.log_path or None,
                   checkpoint_every=cfg.checkpoint_every, max_steps=cfg.max_steps,
                   meta={"arch": cfg.arch})
    baseline = _bicubic_val_psnr(val, cfg.scale)
    print(f"final validation PSNR {result.final_val_psnr:.2f} dB "
          f"(bicubic baseline {baseline:.2f} dB)")
    print(f"checkpoint written to {cfg.out_path}")
    return 0


# ---------------------------------------------------------------------------
# upscale

def cmd_upscale(cfg: RunConfig, in_path: str, out_path: str) -> int:
    clip = _read(cfg, in_path)
    rs = cfg.scale
    out_frames = []
    if cfg.method == "bicubic":
        for f in clip:
            hr = bicubic_resize(f, f.width * rs, f.height * rs)
            if f.chroma is not None:
                hr = upscale_chroma(f, rs, hr_luma=hr.luma)
            out_frames.append(hr)
    else:
        params, spec, _ = _load_sr(cfg.checkpoint)
        if spec.scale == rs:
            def runner(window):
                return forward(params, spec, window)
        elif spec.scale == 2 and rs in (3, 4):
            def runner(window):
                return forward_multiscale(params, spec, window, rs)
        else:
            raise ValueError(f"checkpoint upsamples x{spec.scale}; cannot serve x{rs}")
        sf = _load_sf(cfg.sf_checkpoint) if cfg.sf_checkpoint else None
        dump_centre = len(clip) // 2
        for centre in range(len(clip)):
            window = clip.window(centre)
            if sf is not None:
                sf_params, sf_spec, _ = sf
                logits = sf_logits(sf_params, sf_spec,
                                   [sf_input_from_window(window)])[0]
                window = replace_frames(window, SceneLabel(int(np.argmax(logits))))
            if cfg.dump_features and centre == dump_centre:
                written = dump_feature_maps(params, spec, window, cfg.dump_layer,
                                            cfg.dump_features)
                print(f"wrote {len(written)} feature maps for frame {centre} "
                      f"to {cfg.dump_features}")
            sr = runner(window)
            src = clip[centre]
            if src.chroma is not None:
                sr = upscale_chroma(src, rs, hr_luma=sr.luma)
            out_frames.append(sr)
    write_clip(VideoClip(out_frames, frame_rate=clip.frame_rate), out_path,
               fmt=_output_format(cfg, out_path))
    print(f"{len(out_frames)} frames -> {out_path} "
          f"({out_frames[0].width}x{out_frames[0].height})")
    return 0


# ---------------------------------------------------------------------------
# evaluate

def _metric_rows(name, ref, cand, border):
    if len(ref) != len(cand):
        raise ValueError(f"frame count mismatch: reference {len(ref)}, candidate {len(cand)}")
    rows = []
    for i, (rf, cf) in enumerate(zip(ref, cand)):
        rows.append((name, i, psnr(rf, cf, border=border), ssim(rf, cf, border=border)))
    return rows


def cmd_evaluate(cfg: RunConfig, ref_path: str, cand_path: str | None) -> int:
    ref = _read(cfg, ref_path)
    if cand_path:
        cand = _read(cfg, cand_path)
        name = _stem(cand_path)
    elif cfg.method == "bicubic":
        lr = degrade_clip(ref, cfg.scale)
        h, w = lr.height * cfg.scale, lr.width * cfg.scale
        ref = VideoClip([Frame(f.luma[:h, :w]) for f in ref], frame_rate=ref.frame_rate)
        cand = VideoClip([bicubic_resize(f, w, h) for f in lr], frame_rate=ref.frame_rate)
        name = _stem(ref_path)
    else:
        raise ConfigError("evaluate needs a candidate clip or --method bicubic")
    rows = _metric_rows(name, ref, cand, cfg.border)
    print(f"{'frame':>5}  {'psnr_db':>9}  {'ssim':>7}")
    for _, i, p, s in rows:
        print(f"{i:>5}  {format_metric(p):>9}  {format_metric(s):>7}")
    finite = [p for _, _, p, _ in rows if math.isfinite(p)]
    mean_psnr = float(np.mean(finite)) if finite else math.inf
    mean_ssim = float(np.mean([s for _, _, _, s in rows]))
    print(f"{'mean':>5}  {format_metric(mean_psnr):>9}  {format_metric(mean_ssim):>7}")
    if cfg.csv_path:
        with open(cfg.csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(metrics_csv(rows))
        print(f"per-frame metrics -> {cfg.csv_path}")
    return 0


# ---------------------------------------------------------------------------
# scene detection

def cmd_scene(cfg: RunConfig, in_path: str) -> int:
    params, spec, _ = _load_sf(cfg.sf_checkpoint)
    clip = _read(cfg, in_path)
    lines = ["frame,label,confidence"]
    print(f"{'frame':>5}  {'label':<15}  {'confidence':>10}")
    for centre in range(len(clip)):
        logits = sf_logits(params, spec, [sf_input_from_window(clip.window(centre))])[0]
        probs = softmax(logits)
        label = SceneLabel(int(np.argmax(logits)))
        conf = float(probs[label.value])
        print(f"{centre:>5}  {label.name.lower():<15}  {conf:>10.4f}")
        lines.append(f"{centre},{label.name.lower()},{conf:.4f}")
    if cfg.csv_path:
        with open(cfg.csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"window report -> {cfg.csv_path}")
    return 0


def cmd_sf_train(cfg: RunConfig) -> int:
    pa, pb = cfg.path_list("scenes_a"), cfg.path_list("scenes_b")
    if not pa or not pb:
        raise ConfigError("sf-train needs --scenes-a and --scenes-b clip pools")
    pool_a = [_read(cfg, p) for p in pa]
    pool_b = [_read(cfg, p) for p in pb]
    train_set = make_sf_dataset(pool_a, pool_b, per_class=cfg.per_class, seed=cfg.seed)
    val_set = make_sf_dataset(pool_a, pool_b, per_class=max(1, cfg.per_class // 5),
                              seed=cfg.seed + 1)
    spec = build_sf_net(cfg.sf_layers)
    print(f"vsr3d sf-train: {cfg.sf_layers}-layer classifier, "
          f"{count_parameters(spec):,} weights, {len(train_set)} samples, seed {cfg.seed}")
    result = train_sf(spec, train_set, epochs=cfg.sf_epochs, batch_size=cfg.sf_batch_size,
                      lr=cfg.sf_lr, seed=cfg.seed, val_samples=val_set,
                      val_every=cfg.val_every, out_path=cfg.out_path,
                      log_path=cfg.log_path or None,
                      meta={"arch": f"sf{cfg.sf_layers}"})
    print(f"held-out accuracy {result.final_val_accuracy:.4f} on {len(val_set)} samples")
    text = confusion_csv(confusion_matrix(result.params, spec, val_set))
    print(text, end="")
    if cfg.csv_path:
        with open(cfg.csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    print(f"checkpoint written to {cfg.out_path}")
    return 0


# ---------------------------------------------------------------------------
# self-verification

def _check_param_counts():
    for name, want in REFERENCE_WEIGHT_COUNTS.items():
        got = count_parameters(build_architecture(name))
        if got != want:
            return False, f"{name}: {got} != {want}"
    return True, f"{len(REFERENCE_WEIGHT_COUNTS)} architectures match"


def _check_pixel_shuffle():
    rng = np.random.default_rng(0)
    x = rng.random((2, 8, 1, 6, 5)).astype(np.float32)
    ok = np.array_equal(pixel_unshuffle(pixel_shuffle(x, 2), 2), x)
    return ok, "roundtrip exact" if ok else "roundtrip mismatch"


def _check_conv_oracle():
    rng = np.random.default_rng(1)
    worst = 0.0
    pads = [TemporalPad.ZERO, TemporalPad.DUPLICATE, TemporalPad.NONE]
    for case in range(8):
        kd = int(rng.choice([1, 3]))  # temporal padding needs odd depth
        kh, kw = rng.integers(1, 4, 2)
        stride = (int(rng.integers(1, 3)), int(rng.integers(1, 3)))
        pad = PadPolicy(temporal=pads[int(rng.integers(0, 3))] if kd > 1
                        else TemporalPad.NONE,
                        spatial=int(rng.integers(0, 2)))
        cin, cout = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        x = rng.standard_normal((2, cin, kd + 2, 7, 8)).astype(np.float32)
        w = ConvWeights(rng.standard_normal((cout, cin, kd, kh, kw)).astype(np.float32),
                        rng.standard_normal(cout).astype(np.float32))
        from .tensor_core import conv_forward
        fast = conv_forward(x, w, pad, stride=stride)
        slow = conv_forward_loop(x, w, pad, stride=stride)
        worst = max(worst, float(np.max(np.abs(fast - slow))))
    return worst < 1e-5, f"8 configs, worst |diff| {worst:.2e}"


def _check_stack_oracle():
    # whole-net path with a mid-stack concat; sensitive to flatten order
    spec = ModelSpec([
        LayerSpec("conv3d", 1, 3, (3, 3, 3), TemporalPad.ZERO),
        LayerSpec("conv3d", 3, 2, (3, 3, 3), TemporalPad.DUPLICATE),
        LayerSpec("conv2d", 10, 4, (1, 3, 3), activation="none"),
    ], concat_after=2, scale=2, kind="sr")
    params = [ConvWeights(0.1 * np.random.default_rng(i).standard_normal(w.kernel.shape).astype(np.float32),
                          0.1 * np.random.default_rng(10 + i).standard_normal(w.bias.shape).astype(np.float32))
              for i, w in enumerate(xavier_init(spec, 0))]
    x = np.random.default_rng(5).random((1, 1, 5, 6, 6)).astype(np.float32)
    fast, _ = forward_stack(params, spec, x)
    h = x
    for i, (layer, w) in enumerate(zip(spec.layers, params)):
        pad = PadPolicy(temporal=layer.temporal_pad, spatial=layer.spatial_pad)
        h = conv_forward_loop(h, w, pad, stride=layer.stride)
        if layer.activation == "relu":
            h = relu(h)
        if spec.concat_after == i + 1:
            n, c, d, hh, ww = h.shape
            h = h.reshape(n, c * d, 1, hh, ww)
    err = float(np.max(np.abs(fast - h)))
    return err < 1e-5, f"max |diff| {err:.2e}"


def _check_replacement():
    win = [Frame(np.full((4, 4), 0.1 * (i + 1), dtype=np.float32)) for i in range(5)]
    table = {
        SceneLabel.CHANGE_AFTER_1: [2, 2, 3, 4, 5],
        SceneLabel.CHANGE_AFTER_2: [3, 3, 3, 4, 5],
        SceneLabel.CHANGE_AFTER_3: [1, 2, 3, 3, 3],
        SceneLabel.CHANGE_AFTER_4: [1, 2, 3, 4, 4],
        SceneLabel.NO_CHANGE: [1, 2, 3, 4, 5],
    }
    for label, want in table.items():
        got = [round(float(f.luma[0, 0]) / 0.1) for f in replace_frames(win, label)]
        if got != want:
            return False, f"{label.name}: {got} != {want}"
    return True, "all five labels"


def cmd_verify(cfg: RunConfig, use_f64: bool) -> int:
    dtype = np.float64 if use_f64 else np.float32
    tol = 1e-6 if use_f64 else 1e-3
    checks = [
        ("parameter counts", _check_param_counts),
        ("pixel shuffle roundtrip", _check_pixel_shuffle),
        ("convolution vs loop oracle", _check_conv_oracle),
        ("layer stack vs chained oracle", _check_stack_oracle),
        ("frame replacement truth table", _check_replacement),
    ]
    failures = 0
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        failures += not ok
        print(f"{'ok  ' if ok else 'FAIL'} {name} ({detail})")
    for arch in ARCH_NAMES:
        report = grad_check(miniature_spec(arch), seed=cfg.seed, tolerance=tol,
                            dtype=dtype, name=arch)
        failures += not report.passed
        print(f"{'ok  ' if report.passed else 'FAIL'} gradient check {report.summary()}")
    print(f"{len(checks) + len(ARCH_NAMES) - failures}/{len(checks) + len(ARCH_NAMES)} "
          "checks passed")
    return 1 if failures else 0


def cmd_param_count(cfg: RunConfig, archs: list, include_bias: bool) -> int:
    names = archs or list(ARCH_NAMES)
    bad = [n for n in names if n not in ARCH_NAMES]
    if bad:
        raise ConfigError(f"unknown architecture(s): {', '.join(bad)}")
    header = f"{'arch':<7} {'weights':>9}"
    if include_bias:
        header += f" {'biases':>7} {'total':>9}"
    print(header)
    for name in names:
        spec = build_architecture(name, cfg.scale)
        weights = count_parameters(spec)
        line = f"{name:<7} {weights:>9}"
        if include_bias:
            total = count_parameters(spec, include_bias=True)
            line += f" {total - weights:>7} {total:>9}"
        print(line)
    return 0


# ---------------------------------------------------------------------------
# argument plumbing

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vsr3d",
        description="Video super-resolution over five-frame windows: training, "
                    "upscaling, evaluation, and scene-change handling. Windows at "
                    "clip edges replicate the first/last frame.",
        epilog="Exit codes: 0 success, 1 runtime failure, 2 usage/config error. "
               "Config files hold 'key = value' lines; flags override them.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def common(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int, help=FIELD_DOCS["seed"])

    def clip_io(p):
        p.add_argument("--size", help=FIELD_DOCS["size"])
        p.add_argument("--format", help=FIELD_DOCS["format"])

    p = sub.add_parser("train", help="train an SR model on clips")
    common(p); clip_io(p)
    p.add_argument("--data", nargs="+", dest="train_clips", help=FIELD_DOCS["train_clips"])
    p.add_argument("--val", nargs="+", dest="val_clips", help=FIELD_DOCS["val_clips"])
    p.add_argument("--arch", help=FIELD_DOCS["arch"])
    p.add_argument("--scale", type=int, help=FIELD_DOCS["scale"])
    p.add_argument("--epochs", type=int, help=FIELD_DOCS["epochs"])
    p.add_argument("--batch-size", type=int, dest="batch_size", help=FIELD_DOCS["batch_size"])
    p.add_argument("--lr", type=float, help=FIELD_DOCS["lr"])
    p.add_argument("--weight-decay", type=float, dest="weight_decay",
                   help=FIELD_DOCS["weight_decay"])
    p.add_argument("--loss-form", dest="loss_form", help=FIELD_DOCS["loss_form"])
    p.add_argument("--frame-stride", type=int, dest="frame_stride",
                   help=FIELD_DOCS["frame_stride"])
    p.add_argument("--subimages-per-frame", type=int, dest="subimages_per_frame",
                   help=FIELD_DOCS["subimages_per_frame"])
    p.add_argument("--lr-patch-size", type=int, dest="lr_patch_size",
                   help=FIELD_DOCS["lr_patch_size"])
    p.add_argument("--max-steps", type=int, dest="max_steps", help=FIELD_DOCS["max_steps"])
    p.add_argument("--val-every", type=int, dest="val_every", help=FIELD_DOCS["val_every"])
    p.add_argument("--checkpoint-every", type=int, dest="checkpoint_every",
                   help=FIELD_DOCS["checkpoint_every"])
    p.add_argument("--out", dest="out_path", help=FIELD_DOCS["out_path"])
    p.add_argument("--log", dest="log_path", help=FIELD_DOCS["log_path"])

    p = sub.add_parser("upscale", help="upscale a clip with a checkpoint or bicubic")
    common(p); clip_io(p)
    p.add_argument("input", help="clip to upscale")
    p.add_argument("output", help="where the upscaled clip goes (format by extension)")
    p.add_argument("--checkpoint", help=FIELD_DOCS["checkpoint"])
    p.add_argument("--method", help=FIELD_DOCS["method"])
    p.add_argument("--scale", type=int,
                   help=FIELD_DOCS["scale"] + "; a scale-2 checkpoint serves 3 and 4 "
                        "by bicubic pre-upscaling")
    p.add_argument("--sf-checkpoint", dest="sf_checkpoint", help=FIELD_DOCS["sf_checkpoint"])
    p.add_argument("--dump-features", dest="dump_features", help=FIELD_DOCS["dump_features"])
    p.add_argument("--dump-layer", type=int, dest="dump_layer", help=FIELD_DOCS["dump_layer"])

    p = sub.add_parser("evaluate", help="PSNR/SSIM of a candidate clip against a reference")
    common(p); clip_io(p)
    p.add_argument("reference", help="ground-truth clip")
    p.add_argument("candidate", nargs="?", help="clip to score (omit with --method bicubic)")
    p.add_argument("--method", help=FIELD_DOCS["method"])
    p.add_argument("--scale", type=int, help="degradation factor for --method bicubic")
    p.add_argument("--border", type=int, help=FIELD_DOCS["border"])
    p.add_argument("--csv", dest="csv_path", help=FIELD_DOCS["csv_path"])

    p = sub.add_parser("scene", help="per-window scene-change report for a clip")
    common(p); clip_io(p)
    p.add_argument("input", help="clip to scan")
    p.add_argument("--sf-checkpoint", dest="sf_checkpoint", help=FIELD_DOCS["sf_checkpoint"])
    p.add_argument("--csv", dest="csv_path", help=FIELD_DOCS["csv_path"])

    p = sub.add_parser("sf-train", help="train the scene-change classifier")
    common(p); clip_io(p)
    p.add_argument("--scenes-a", nargs="+", dest="scenes_a", help=FIELD_DOCS["scenes_a"])
    p.add_argument("--scenes-b", nargs="+", dest="scenes_b", help=FIELD_DOCS["scenes_b"])
    p.add_argument("--per-class", type=int, dest="per_class", help=FIELD_DOCS["per_class"])
    p.add_argument("--layers", type=int, dest="sf_layers", help=FIELD_DOCS["sf_layers"])
    p.add_argument("--epochs", type=int, dest="sf_epochs", help=FIELD_DOCS["sf_epochs"])
    p.add_argument("--batch-size", type=int, dest="sf_batch_size",
                   help=FIELD_DOCS["sf_batch_size"])
    p.add_argument("--lr", type=float, dest="sf_lr", help=FIELD_DOCS["sf_lr"])
    p.add_argument("--val-every", type=int, dest="val_every", help=FIELD_DOCS["val_every"])
    p.add_argument("--out", dest="out_path", help=FIELD_DOCS["out_path"])
    p.add_argument("--log", dest="log_path", help=FIELD_DOCS["log_path"])
    p.add_argument("--csv", dest="csv_path", help="confusion matrix CSV")

    p = sub.add_parser("verify", help="run built-in self-checks")
    common(p)
    p.add_argument("--f64", action="store_true",
                   help="check gradients in float64 at tolerance 1e-6")

    p = sub.add_parser("param-count", help="weight counts of the reference architectures")
    common(p)
    p.add_argument("archs", nargs="*", help="architectures (default: all five)")
    p.add_argument("--scale", type=int, help=FIELD_DOCS["scale"])
    p.add_argument("--bias", action="store_true", help="also count biases")
    return parser


_NON_CONFIG_KEYS = {"command", "config", "input", "output", "reference",
                    "candidate", "f64", "archs", "bias"}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    overrides = {}
    for key, value in vars(args).items():
        if key in _NON_CONFIG_KEYS or value is None:
            continue
        overrides[key] = ",".join(value) if isinstance(value, list) else value
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "upscale":
            return cmd_upscale(cfg, args.input, args.output)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.reference, args.candidate)
        if args.command == "scene":
            return cmd_scene(cfg, args.input)
        if args.command == "sf-train":
            return cmd_sf_train(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.f64)
        if args.command == "param-count":
            return cmd_param_count(cfg, args.archs, args.bias)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, CheckpointError, ClipFormatError,
            TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
