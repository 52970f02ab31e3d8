import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facecnn.exceptions import ConfigurationError
from facecnn.layers import (
    ConvLayerParams,
    FullLayerParams,
    SubsampleLayerParams,
    conv_forward,
    hidden_forward,
    output_forward,
    subsample_forward,
)

TANH1 = 0.7615941559557649  # tanh(1), checked against mpmath in test_tensor


def naive_conv(inputs, kernels, biases):
    """Quadruple loop straight from the definition."""
    n_out, n_in, kh, kw = kernels.shape
    rows = inputs.shape[1] - kh + 1
    cols = inputs.shape[2] - kw + 1
    out = np.zeros((n_out, rows, cols))
    for k in range(n_out):
        for x in range(rows):
            for y in range(cols):
                acc = biases[k]
                for t in range(n_in):
                    for r in range(kh):
                        for c in range(kw):
                            acc += kernels[k, t, r, c] * inputs[t, x + r, y + c]
                out[k, x, y] = np.tanh(acc)
    return out


def naive_subsample(inputs, coef, biases, s):
    n, rows, cols = inputs.shape
    out = np.zeros((n, rows // s, cols // s))
    for k in range(n):
        for x in range(rows // s):
            for y in range(cols // s):
                total = 0.0
                for r in range(s):
                    for c in range(s):
                        total += inputs[k, x * s + r, y * s + c]
                out[k, x, y] = np.tanh(coef[k] * total + biases[k])
    return out


class TestConv:
    def test_default_output_size(self):
        params = ConvLayerParams(np.zeros((6, 1, 5, 5)), np.zeros(6))
        out = conv_forward(np.ones((1, 32, 32)), params)
        assert out.shape == (6, 28, 28)

    def test_zero_params_give_zero(self):
        rng = np.random.default_rng(0)
        params = ConvLayerParams(np.zeros((2, 3, 3, 3)), np.zeros(2))
        assert not conv_forward(rng.normal(size=(3, 7, 7)), params).any()

    def test_one_by_one(self):
        params = ConvLayerParams(np.full((1, 1, 1, 1), 2.0), np.array([-1.0]))
        assert conv_forward([[[0.5]]], params)[0, 0, 0] == 0.0

    def test_hand_evaluated_two_by_two(self):
        params = ConvLayerParams(np.full((1, 1, 2, 2), 0.1), np.zeros(1))
        out = conv_forward(np.array([[[1.0, 2.0], [3.0, 4.0]]]), params)
        assert out.shape == (1, 1, 1)
        assert out[0, 0, 0] == pytest.approx(TANH1, abs=1e-12)

    def test_constant_input_gives_constant_map(self):
        rng = np.random.default_rng(1)
        params = ConvLayerParams(rng.uniform(-0.2, 0.2, (6, 1, 5, 5)), rng.uniform(-1, 1, 6))
        out = conv_forward(np.full((1, 32, 32), 0.3), params)
        for k in range(6):
            expected = np.tanh(0.3 * params.kernels[k].sum() + params.biases[k])
            np.testing.assert_allclose(out[k], expected, rtol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(
        n_in=st.integers(1, 3),
        n_out=st.integers(1, 3),
        k=st.integers(1, 4),
        extra=st.integers(0, 4),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_matches_naive_loops(self, n_in, n_out, k, extra, seed):
        rng = np.random.default_rng(seed)
        size = k + extra
        x = rng.uniform(-1, 1, (n_in, size, size))
        kernels = rng.uniform(-1, 1, (n_out, n_in, k, k))
        biases = rng.uniform(-1, 1, n_out)
        out = conv_forward(x, ConvLayerParams(kernels, biases))
        np.testing.assert_allclose(out, naive_conv(x, kernels, biases), rtol=1e-12, atol=1e-14)

    def test_translation_consistency(self):
        rng = np.random.default_rng(2)
        kernels = rng.uniform(-0.3, 0.3, (2, 1, 3, 3))
        params = ConvLayerParams(kernels, np.zeros(2))
        base = np.zeros((1, 12, 12))
        base[0, 2:9, 2:9] = rng.uniform(-1, 1, (7, 7))
        shifted = np.roll(base, (1, 1), axis=(1, 2))
        pre = np.arctanh(conv_forward(base, params))
        pre_shifted = np.arctanh(conv_forward(shifted, params))
        np.testing.assert_allclose(pre_shifted[:, 1:, 1:], pre[:, :-1, :-1], atol=1e-10)

    def test_errors(self):
        params = ConvLayerParams(np.zeros((1, 2, 3, 3)), np.zeros(1))
        with pytest.raises(ConfigurationError):
            conv_forward(np.zeros((1, 5, 5)), params)  # wrong pattern count
        with pytest.raises(ConfigurationError):
            conv_forward(np.zeros((2, 2, 2)), params)  # kernel too large


class TestSubsample:
    def test_default_output_size(self):
        params = SubsampleLayerParams(np.ones(6), np.zeros(6))
        assert subsample_forward(np.zeros((6, 28, 28)), params).shape == (6, 14, 14)

    def test_all_ones_window(self):
        params = SubsampleLayerParams(np.array([0.25]), np.zeros(1))
        out = subsample_forward(np.ones((1, 2, 2)), params)
        assert out.shape == (1, 1, 1)
        assert out[0, 0, 0] == pytest.approx(TANH1, abs=1e-12)

    def test_zero_coefficient(self):
        rng = np.random.default_rng(3)
        params = SubsampleLayerParams(np.zeros(3), np.zeros(3))
        assert not subsample_forward(rng.normal(size=(3, 4, 4)), params).any()

    def test_matches_naive_and_keeps_patterns_separate(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(-1, 1, (4, 6, 6))
        coef, bias = rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 4)
        out = subsample_forward(x, SubsampleLayerParams(coef, bias))
        np.testing.assert_allclose(out, naive_subsample(x, coef, bias, 2), rtol=1e-12)
        x2 = x.copy()
        x2[1] += 5.0
        out2 = subsample_forward(x2, SubsampleLayerParams(coef, bias))
        np.testing.assert_array_equal(out2[[0, 2, 3]], out[[0, 2, 3]])

    def test_indivisible_input(self):
        with pytest.raises(ConfigurationError):
            subsample_forward(np.zeros((1, 5, 4)), SubsampleLayerParams(np.ones(1), np.zeros(1)))


class TestFull:
    def test_default_hidden_layer(self):
        params = FullLayerParams(np.zeros((170, 400)), np.zeros(170))
        assert params.size == 68170
        assert hidden_forward(np.zeros((16, 5, 5)), params).shape == (170,)

    def test_hidden_zero_weights_give_tanh_bias(self):
        b = np.linspace(-2, 2, 5)
        out = hidden_forward(np.ones((2, 3, 3)), FullLayerParams(np.zeros((5, 18)), b))
        np.testing.assert_array_equal(out, np.tanh(b))

    def test_hidden_single_neuron(self):
        out = hidden_forward([[[2.0]]], FullLayerParams(np.array([[0.5]]), np.array([-1.0])))
        assert out[0] == 0.0

    def test_hidden_flattening_order(self):
        # weight picks exactly input (pattern 1, row 0, col 2)
        x = np.arange(18, dtype=float).reshape(2, 3, 3) / 100
        w = np.zeros((1, 18))
        w[0, 1 * 9 + 0 * 3 + 2] = 1.0
        out = hidden_forward(x, FullLayerParams(w, np.zeros(1)))
        assert out[0] == pytest.approx(np.tanh(x[1, 0, 2]))

    def test_output_layer(self):
        params = FullLayerParams(np.zeros((17, 170)), np.zeros(17))
        assert params.size == 2907
        assert not output_forward(np.ones(170), params).any()
        assert output_forward([0.3], FullLayerParams(np.ones((1, 1)), np.zeros(1)))[0] == np.tanh(0.3)

    def test_size_mismatch(self):
        with pytest.raises(ConfigurationError):
            output_forward(np.ones(3), FullLayerParams(np.zeros((2, 4)), np.zeros(2)))
        with pytest.raises(ConfigurationError):
            hidden_forward(np.ones((1, 2, 2)), FullLayerParams(np.zeros((2, 5)), np.zeros(2)))


def test_outputs_strictly_inside_unit_interval():
    rng = np.random.default_rng(5)
    out = conv_forward(rng.normal(size=(1, 10, 10)), ConvLayerParams(rng.normal(size=(2, 1, 3, 3)), rng.normal(size=2)))
    assert np.all(np.abs(out) <= 1.0)
    assert np.all(np.isfinite(out))
