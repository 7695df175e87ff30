import numpy as np
import pytest

from vsr3d.bicubic import BicubicKernel, bicubic_resize, degrade_clip, resize_plane, upscale_chroma
from vsr3d.frames import Frame, VideoClip
from vsr3d.reference import resize_matrix


def dense_matrix(n_in, n_out, kernel=None):
    kernel = kernel or BicubicKernel()
    idx, wts = kernel.weights(n_in, n_out)
    return resize_matrix(n_in, n_out, lambda i: (idx[i], wts[i]))


def dense_resize(plane, out_h, out_w, kernel=None):
    mr = dense_matrix(plane.shape[0], out_h, kernel)
    mc = dense_matrix(plane.shape[1], out_w, kernel)
    return np.clip(mr @ np.asarray(plane, dtype=np.float64) @ mc.T, 0.0, 1.0)


class TestKernel:
    def test_cubic_interpolates_grid_points(self):
        from vsr3d.bicubic import cubic
        assert cubic(np.array([0.0]))[0] == 1.0
        assert np.all(cubic(np.array([1.0, 2.0, 2.5])) == 0.0)

    @pytest.mark.parametrize("n_in,n_out", [(8, 8), (8, 16), (16, 8), (7, 3), (5, 13), (100, 48)])
    def test_weight_rows_sum_to_one(self, n_in, n_out):
        _, wts = BicubicKernel().weights(n_in, n_out)
        assert np.max(np.abs(wts.sum(axis=1) - 1.0)) < 1e-9

    def test_downscale_widens_support(self):
        idxu, _ = BicubicKernel().weights(16, 32)
        idxd, _ = BicubicKernel().weights(32, 8)
        assert idxd.shape[1] > idxu.shape[1]

    def test_antialias_off_keeps_interpolation_width(self):
        idx, _ = BicubicKernel(antialias=False).weights(32, 8)
        assert idx.shape[1] == 6


class TestResizePlane:
    def test_identity_dims_are_exact(self):
        rng = np.random.default_rng(0)
        p = rng.random((9, 7))
        assert np.array_equal(resize_plane(p, 9, 7), p)

    @pytest.mark.parametrize("out_h,out_w", [(4, 4), (16, 16), (5, 11)])
    def test_constant_is_fixed_point(self, out_h, out_w):
        p = np.full((8, 8), 0.5)
        out = resize_plane(p, out_h, out_w)
        assert np.max(np.abs(out - 0.5)) < 1e-9

    def test_ramp_down_up_matches_dense_oracle(self):
        ramp = np.tile(np.linspace(0.1, 0.9, 8), (8, 1))
        via_planes = resize_plane(resize_plane(ramp, 4, 4), 8, 8)
        via_oracle = dense_resize(dense_resize(ramp, 4, 4), 8, 8)
        assert np.max(np.abs(via_planes - via_oracle)) < 1e-10

    def test_frame_level_chain_matches_dense_oracle(self):
        # run through Frame (float32 storage) as the pipeline does
        ramp = np.tile(np.linspace(0.1, 0.9, 8), (8, 1))
        small = bicubic_resize(Frame(ramp), 4, 4)
        back = bicubic_resize(small, 8, 8)
        oracle = dense_resize(dense_resize(ramp, 4, 4), 8, 8)
        assert np.max(np.abs(back.luma - oracle)) < 1e-6

    @pytest.mark.parametrize("seed", range(4))
    @pytest.mark.parametrize("dims", [(12, 20), (21, 9)])
    def test_random_planes_match_dense_oracle(self, seed, dims):
        rng = np.random.default_rng(seed)
        p = rng.random(dims)
        for out in [(6, 10), (24, 40), (7, 7)]:
            assert np.max(np.abs(resize_plane(p, *out) - dense_resize(p, *out))) < 1e-10

    def test_antialias_tames_stripes(self):
        # period-2 stripes shrunk 3x: point sampling keeps the alias energy,
        # the widened kernel averages it away
        stripes = np.tile(np.arange(18) % 2 * 1.0, (18, 1))
        aa = resize_plane(stripes, 6, 6, BicubicKernel(antialias=True))
        sharp = resize_plane(stripes, 6, 6, BicubicKernel(antialias=False))
        assert aa.var() < 0.01 < sharp.var()

    def test_rejects_bad_rank(self):
        with pytest.raises(ValueError):
            resize_plane(np.zeros((3, 3, 3)), 2, 2)


class TestChroma:
    def make_frame(self, h=8, w=8, seed=3):
        rng = np.random.default_rng(seed)
        return Frame(rng.random((h, w)),
                     (rng.random((h // 2, w // 2)), rng.random((h // 2, w // 2))))

    def test_scale_one_is_identity(self):
        f = self.make_frame()
        out = upscale_chroma(f, 1)
        assert np.array_equal(out.chroma[0], f.chroma[0])
        assert np.array_equal(out.chroma[1], f.chroma[1])
        assert np.array_equal(out.luma, f.luma)

    def test_constant_chroma_stays_constant(self):
        f = Frame(np.zeros((8, 8)), (np.full((4, 4), 0.25), np.full((4, 4), 0.75)))
        out = upscale_chroma(f, 2, hr_luma=np.zeros((16, 16)))
        assert np.max(np.abs(out.chroma[0] - 0.25)) < 1e-9
        assert np.max(np.abs(out.chroma[1] - 0.75)) < 1e-9

    def test_matches_planewise_resize(self):
        f = self.make_frame(10, 6, seed=11)
        out = upscale_chroma(f, 2, hr_luma=np.zeros((20, 12)))
        for got, plane in zip(out.chroma, f.chroma):
            want = bicubic_resize(Frame(plane), 6, 10).luma
            assert np.array_equal(got, want)

    def test_missing_chroma_rejected(self):
        with pytest.raises(ValueError):
            upscale_chroma(Frame(np.zeros((8, 8))), 2, hr_luma=np.zeros((16, 16)))

    def test_geometry_mismatch_rejected(self):
        with pytest.raises(ValueError):
            upscale_chroma(self.make_frame(), 2, hr_luma=np.zeros((10, 16)))


class TestFrameTypes:
    def test_luma_is_clamped_on_creation(self):
        f = Frame(np.array([[-1.0, 0.5], [2.0, 1.0]]))
        assert f.luma.min() >= 0.0 and f.luma.max() <= 1.0

    def test_chroma_extents_checked(self):
        with pytest.raises(ValueError):
            Frame(np.zeros((8, 8)), (np.zeros((3, 4)), np.zeros((4, 4))))

    def test_clip_requires_uniform_geometry(self):
        with pytest.raises(ValueError):
            VideoClip([Frame(np.zeros((4, 4))), Frame(np.zeros((4, 6)))])
        with pytest.raises(ValueError):
            VideoClip([])

    def test_window_replicates_edges(self):
        clip = VideoClip([Frame(np.full((4, 4), v)) for v in (0.1, 0.2, 0.3)])
        first = clip.window(0)
        assert [f.luma[0, 0] for f in first] == pytest.approx([0.1, 0.1, 0.1, 0.2, 0.3])
        last = clip.window(2)
        assert [f.luma[0, 0] for f in last] == pytest.approx([0.1, 0.2, 0.3, 0.3, 0.3])

    def test_degrade_clip_crops_to_multiple(self):
        clip = VideoClip([Frame(np.zeros((11, 13)))] * 2)
        lr = degrade_clip(clip, 3)
        assert (lr.height, lr.width) == (3, 4)
        assert len(lr) == 2
