"""Walk through the tensor core: 3D convolution over a five-frame window,
temporal padding policies, and the sub-pixel shuffle that turns scale^2
low-resolution channels into one high-resolution plane.

Run: python3 demos/01_convolution_and_pixel_shuffle.py
"""

import numpy as np

from vsr3d.reference import conv_forward_loop
from vsr3d.tensor_core import (ConvWeights, PadPolicy, TemporalPad,
                               conv_forward, pixel_shuffle, pixel_unshuffle)

rng = np.random.default_rng(0)

# A batch of one window: 1 input channel, 5 frames, 12x16 pixels.
x = rng.random((1, 1, 5, 12, 16)).astype(np.float32)
w = ConvWeights(kernel=0.2 * rng.standard_normal((4, 1, 3, 3, 3)).astype(np.float32),
                bias=np.zeros(4, np.float32))

print("input", x.shape, "-> kernel", w.kernel.shape)
for pad in (TemporalPad.ZERO, TemporalPad.DUPLICATE, TemporalPad.NONE):
    out = conv_forward(x, w, PadPolicy(temporal=pad, spatial=1))
    print(f"  temporal pad {pad.value:>9}: output {out.shape}")
print("zero/duplicate keep all five temporal positions; none trims to three.")

# The vectorized path must agree with a brute-force nested loop.
pad = PadPolicy(temporal=TemporalPad.DUPLICATE, spatial=1)
fast = conv_forward(x, w, pad)
slow = conv_forward_loop(x, w, pad)
print(f"\nvectorized vs loop oracle: max |diff| = {np.max(np.abs(fast - slow)):.2e}")

# Sub-pixel upscaling: r^2 channels of an HxW map interleave into rH x rW.
r = 2
low = rng.random((1, r * r, 1, 6, 8)).astype(np.float32)
high = pixel_shuffle(low, r)
back = pixel_unshuffle(high, r)
print(f"\npixel shuffle: {low.shape} -> {high.shape}, "
      f"roundtrip exact: {np.array_equal(back, low)}")

# Channel c of the low block lands on output offsets (c // r, c % r).
probe = np.zeros((1, 4, 1, 2, 2), np.float32)
probe[0, 3, 0, 0, 0] = 1.0
print("channel 3 of a 2x-shuffle lands at row 1, col 1:")
print(pixel_shuffle(probe, 2)[0, 0, 0])
