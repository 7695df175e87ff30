"""The five reference architectures and where their weights sit.

All take a five-frame window and emit scale^2 channels for the sub-pixel
shuffle; they differ in how the temporal axis is consumed. cnn2d stacks the
frames as channels immediately, v1/v2/v3 vary 3D depth and where the
group-of-temporal-feature-maps concat happens, and full keeps 3D filtering
through layer three.

Run: python3 demos/03_architectures.py
"""

import numpy as np

from vsr3d.frames import Frame
from vsr3d.model import ARCH_NAMES, build_architecture, count_parameters, forward
from vsr3d.training import xavier_init

for name in ARCH_NAMES:
    spec = build_architecture(name, 2)
    weights = count_parameters(spec)
    total = count_parameters(spec, include_bias=True)
    concat = "input" if spec.concat_after == 0 else f"after layer {spec.concat_after}"
    print(f"{name}: {weights:,} weights ({total - weights} biases), concat {concat}")
    for i, layer in enumerate(spec.layers, start=1):
        kd, kh, kw = layer.kernel
        print(f"  layer {i}: {layer.kind} {layer.in_groups:>3} -> {layer.out_groups:<3}"
              f" kernel {kd}x{kh}x{kw}  pad {layer.temporal_pad.value}")
    print()

# Every architecture maps a 5-frame LR window to one HR frame.
rng = np.random.default_rng(1)
window = [Frame(rng.random((20, 24)).astype(np.float32)) for _ in range(5)]
for name in ARCH_NAMES:
    spec = build_architecture(name, 2)
    out = forward(xavier_init(spec, 0), spec, window)
    print(f"{name}: 24x20 window -> {out.width}x{out.height}")
