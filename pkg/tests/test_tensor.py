import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from axemu import (
    ConvGeometry,
    Layout,
    Range,
    Tensor4,
    flatten_index,
    output_shape,
    resolve_padding,
    tensor_min_max,
    unflatten_index,
)
from oracles import scan_min_max


class TestOutputShape:
    def test_same_padding_preserves_spatial(self):
        geom = ConvGeometry(padding="same")
        assert output_shape((1, 32, 32, 3), (3, 3, 3, 16), geom) == (1, 32, 32, 16)

    def test_valid_5x5_with_3x3(self):
        assert output_shape((1, 5, 5, 1), (3, 3, 1, 1), ConvGeometry()) == (1, 3, 3, 1)

    def test_stride2_same(self):
        geom = ConvGeometry(strides=(2, 2), padding="same")
        assert output_shape((1, 32, 32, 3), (3, 3, 3, 8), geom) == (1, 16, 16, 8)

    def test_stride2_same_cross_checked_against_oracle_conv(self, rng):
        from oracles import ref_conv2d_f64

        geom = ConvGeometry(strides=(2, 2), padding="same")
        x = rng.normal(size=(1, 32, 32, 3))
        f = rng.normal(size=(3, 3, 3, 8))
        pad = resolve_padding(geom, 32, 32, 3, 3)
        ref = ref_conv2d_f64(x, f, geom.strides, geom.dilations, pad)
        assert ref.shape == output_shape((1, 32, 32, 3), (3, 3, 3, 8), geom)

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 7])
    def test_same_stride1_preserves_any_kernel(self, k):
        geom = ConvGeometry(padding="same")
        n, h, w, _ = output_shape((2, 9, 11, 2), (k, k, 2, 3), geom)
        assert (h, w) == (9, 11)

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ValueError, match="channels"):
            output_shape((1, 5, 5, 2), (3, 3, 3, 1), ConvGeometry())

    def test_kernel_larger_than_padded_input_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            output_shape((1, 2, 2, 1), (3, 3, 1, 1), ConvGeometry())

    def test_dilation_extends_kernel(self):
        geom = ConvGeometry(dilations=(2, 2))
        # dilated 3x3 spans 5 cells
        assert output_shape((1, 5, 5, 1), (3, 3, 1, 1), geom) == (1, 1, 1, 1)

    def test_same_padding_extra_on_bottom_right(self):
        geom = ConvGeometry(padding="same")
        pt, pb, pl, pr = resolve_padding(geom, 5, 5, 2, 2)
        assert (pt, pb, pl, pr) == (0, 1, 0, 1)


class TestMinMax:
    def test_all_zeros(self):
        t = Tensor4(np.zeros((1, 2, 2, 1), np.float32))
        assert tensor_min_max(t) == Range(0.0, 0.0)

    def test_mixed_values(self):
        t = Tensor4(np.array([-1.5, 0.25, 3.0, 0.0], np.float32).reshape(1, 2, 2, 1))
        assert tensor_min_max(t) == Range(-1.5, 3.0)

    def test_matches_sequential_scan(self, rng):
        data = rng.normal(size=(2, 10, 10, 5)).astype(np.float32)
        r = tensor_min_max(Tensor4(data))
        assert (r.min, r.max) == scan_min_max(data)

    def test_permutation_invariant(self, rng):
        data = rng.normal(size=1000).astype(np.float32)
        r1 = tensor_min_max(Tensor4(data.reshape(1, 10, 10, 10)))
        shuffled = rng.permutation(data)
        r2 = tensor_min_max(Tensor4(shuffled.reshape(1, 10, 10, 10)))
        assert r1 == r2

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            tensor_min_max(Tensor4(np.zeros((0, 2, 2, 1), np.float32)))

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite_rejected(self, bad):
        data = np.zeros((1, 2, 2, 1), np.float32)
        data[0, 0, 0, 0] = bad
        with pytest.raises(ValueError, match="finite"):
            tensor_min_max(Tensor4(data))


class TestTypes:
    def test_tensor_must_be_4d(self):
        with pytest.raises(ValueError, match="4 dimensions"):
            Tensor4(np.zeros((2, 2), np.float32))

    def test_range_must_be_ordered_and_finite(self):
        with pytest.raises(ValueError):
            Range(1.0, 0.0)
        with pytest.raises(ValueError):
            Range(0.0, np.inf)

    @pytest.mark.parametrize("field", ["strides", "dilations"])
    def test_geometry_rejects_non_positive(self, field):
        with pytest.raises(ValueError):
            ConvGeometry(**{field: (0, 1)})

    def test_geometry_rejects_bad_padding(self):
        with pytest.raises(ValueError):
            ConvGeometry(padding="weird")
        with pytest.raises(ValueError):
            ConvGeometry(padding=(1, -1, 0, 0))


@given(
    shape=st.tuples(*[st.integers(1, 5)] * 4),
    data=st.data(),
)
def test_index_round_trip(shape, data):
    total = shape[0] * shape[1] * shape[2] * shape[3]
    flat = data.draw(st.integers(0, total - 1))
    idx = unflatten_index(flat, shape)
    assert flatten_index(idx, shape) == flat


def test_flatten_matches_numpy_order():
    shape = (2, 3, 4, 5)
    arr = np.arange(np.prod(shape)).reshape(shape)
    for idx in [(0, 0, 0, 0), (1, 2, 3, 4), (0, 1, 0, 3)]:
        assert arr[idx] == flatten_index(idx, shape)


def test_layouts_carry_through():
    t = Tensor4(np.zeros((3, 3, 2, 4), np.float32), Layout.HWCN)
    assert t.layout is Layout.HWCN
    assert t.shape == (3, 3, 2, 4)
