import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from skewnet.engine import (
    LSTM,
    AdamState,
    Batch,
    ClassifierObjective,
    ClassWeights,
    Conv1D,
    Dense,
    Dropout,
    LayerProbe,
    ScaledGradients,
    Sequential,
    activation_apply,
    adam_step,
    backward_pass,
    bilstm_forward,
    conv1d_forward,
    dense_forward,
    dropout_apply,
    gradient_check,
    softmax,
    weighted_cross_entropy,
)
from skewnet.engine.gradcheck import FunctionObjective
from skewnet.engine.loss import EPS_CLIP
from skewnet.errors import ConfigError, DimensionError, LabelError, NumericError, StateError


# ---------------------------------------------------------------- dense / activations

class TestDense:
    def test_identity(self):
        layer = Dense(3, 3, "linear", weights=np.eye(3), bias=np.zeros(3))
        x = np.array([[1.0, -2.0, 3.5], [0.0, 4.0, -1.0]])
        np.testing.assert_array_equal(dense_forward(x, layer), x)

    def test_hand_product(self):
        layer = Dense(2, 2, "linear", weights=[[1, 1], [1, -1]], bias=[0, 0])
        np.testing.assert_allclose(dense_forward(np.array([[1.0, 2.0]]), layer), [[3.0, -1.0]])

    def test_zero_weights_give_bias(self):
        b = np.array([0.5, -1.5, 2.0])
        layer = Dense(4, 3, "linear", weights=np.zeros((4, 3)), bias=b)
        out = dense_forward(np.random.default_rng(0).standard_normal((5, 4)), layer)
        np.testing.assert_array_equal(out, np.tile(b, (5, 1)))

    def test_width_mismatch(self):
        with pytest.raises(DimensionError):
            dense_forward(np.zeros((2, 3)), Dense(4, 2))


class TestActivations:
    def test_relu(self):
        np.testing.assert_array_equal(activation_apply(np.array([-1.0, 0.0, 2.0]), "relu"), [0, 0, 2])

    def test_softmax_uniform(self):
        np.testing.assert_allclose(activation_apply(np.zeros((1, 4)), "softmax"), [[0.25] * 4])

    def test_softmax_hand(self):
        # e^2 / (e^2 + 1) = 0.880797...
        np.testing.assert_allclose(activation_apply(np.array([[2.0, 0.0]]), "softmax"), [[0.8808, 0.1192]], atol=1e-4)

    @settings(max_examples=200, deadline=None)
    @given(
        arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(2, 7)), elements=st.floats(-15, 15)),
        st.floats(-50, 50),
    )
    def test_softmax_rows(self, logits, shift):
        p = softmax(logits)
        assert np.all(p > 0) and np.all(p < 1)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-6)
        # shift invariance; argmax is not stable here since a shift can round away ulp-level gaps
        np.testing.assert_allclose(softmax(logits + shift), p, rtol=1e-9, atol=1e-15)


# ---------------------------------------------------------------- conv1d

class TestConv1D:
    def test_hand_cross_correlation(self):
        layer = Conv1D(1, 1, 3, kernels=np.array([[[1.0, 0.0, -1.0]]]), bias=np.zeros(1))
        out = conv1d_forward(np.array([[[1.0, 2.0, 3.0]]]), layer)
        np.testing.assert_allclose(out, [[[-2.0]]])

    def test_unit_kernel_identity(self):
        layer = Conv1D(1, 1, 1, kernels=np.ones((1, 1, 1)), bias=np.zeros(1))
        x = np.random.default_rng(1).standard_normal((2, 1, 9))
        np.testing.assert_array_equal(conv1d_forward(x, layer), x)

    @pytest.mark.parametrize(
        "length, k, stride, padding, expected",
        [(10, 3, 1, "valid", 8), (10, 3, 2, "valid", 4), (28, 3, 2, "same", 14), (7, 3, 2, "same", 4), (5, 5, 1, "valid", 1)],
    )
    def test_output_length(self, length, k, stride, padding, expected):
        layer = Conv1D(2, 3, k, stride, padding)
        out = layer.forward(np.zeros((1, 2, length)))
        assert out.shape == (1, 3, expected)

    def test_brute_force_matches(self):
        rng = np.random.default_rng(2)
        layer = Conv1D(2, 3, 3, stride=2, padding="same", rng=rng)
        x = rng.standard_normal((2, 2, 7))
        out = layer.forward(x)
        # same padding with L=7, k=3, s=2: out 4, total pad 2 -> one each side
        xp = np.pad(x, ((0, 0), (0, 0), (1, 1)))
        K, b = layer.params["K"], layer.params["b"]
        ref = np.zeros((2, 3, 4))
        for n in range(2):
            for o in range(3):
                for t in range(4):
                    ref[n, o, t] = b[o] + sum(
                        K[o, c, j] * xp[n, c, 2 * t + j] for c in range(2) for j in range(3)
                    )
        np.testing.assert_allclose(out, ref, atol=1e-12)

    def test_short_signal_valid(self):
        with pytest.raises(DimensionError):
            Conv1D(1, 1, 5).forward(np.zeros((1, 1, 3)))


# ---------------------------------------------------------------- lstm

class TestLSTM:
    def test_all_zero_parameters(self):
        layer = LSTM(3, 4, "bidirectional")
        for p in layer.params.values():
            p[...] = 0.0
        out = bilstm_forward(np.random.default_rng(0).standard_normal((2, 5, 3)), layer)
        np.testing.assert_array_equal(out, np.zeros((2, 5, 8)))

    def test_shape(self):
        layer = LSTM(3, 6, "bidirectional", rng=np.random.default_rng(0))
        assert bilstm_forward(np.zeros((4, 5, 3)), layer).shape == (4, 5, 12)

    def test_forward_direction_matches_manual_recurrence(self):
        rng = np.random.default_rng(3)
        layer = LSTM(2, 3, "forward", rng=rng)
        x = rng.standard_normal((1, 4, 2))
        out = layer.forward(x)
        sig = lambda a: 1.0 / (1.0 + np.exp(-a))  # noqa: E731
        P = layer.params
        h = np.zeros(3)
        c = np.zeros(3)
        for t in range(4):
            gate = {g: x[0, t] @ P[f"fw.W_{g}"] + h @ P[f"fw.U_{g}"] + P[f"fw.b_{g}"] for g in "ifgo"}
            c = sig(gate["f"]) * c + sig(gate["i"]) * np.tanh(gate["g"])
            h = sig(gate["o"]) * np.tanh(c)
            np.testing.assert_allclose(out[0, t], h, atol=1e-12)

    def test_backward_half_is_reversed_forward_run(self):
        rng = np.random.default_rng(4)
        layer = LSTM(2, 3, "bidirectional", rng=rng)
        x = rng.standard_normal((2, 5, 2))
        out = layer.forward(x)
        fw_only = LSTM(2, 3, "forward")
        for g in "ifgo":
            for m in "WUb":
                fw_only.params[f"fw.{m}_{g}"] = layer.params[f"bw.{m}_{g}"].copy()
        rev = fw_only.forward(x[:, ::-1])
        np.testing.assert_allclose(out[:, :, 3:], rev[:, ::-1], atol=1e-12)

    def test_bilstm_needs_bidirectional(self):
        with pytest.raises(ConfigError):
            bilstm_forward(np.zeros((1, 2, 1)), LSTM(1, 2, "forward"))


# ---------------------------------------------------------------- dropout

class TestDropout:
    def test_rate_zero_train_identity(self):
        x = np.random.default_rng(0).standard_normal((3, 4))
        layer = Dropout(0.0, mode="train")
        np.testing.assert_array_equal(dropout_apply(x, layer, np.random.default_rng(1)), x)

    @pytest.mark.parametrize("rate", [0.0, 0.2, 0.3, 0.9])
    def test_eval_identity_bitwise(self, rate):
        x = np.random.default_rng(0).standard_normal((3, 4))
        out = dropout_apply(x, Dropout(rate, mode="eval"), np.random.default_rng(1))
        assert out.tobytes() == x.tobytes()

    def test_mean_preserved(self):
        x = np.full(100_000, 2.0)
        out = dropout_apply(x, Dropout(0.5, mode="train"), np.random.default_rng(7))
        assert abs(out.mean() - 2.0) / 2.0 < 0.02
        assert set(np.unique(out)) <= {0.0, 4.0}

    def test_rate_one_rejected(self):
        with pytest.raises(ConfigError):
            Dropout(1.0)


# ---------------------------------------------------------------- loss

class TestWeightedCrossEntropy:
    def test_uniform_row(self):
        assert weighted_cross_entropy(np.full((1, 4), 0.25), [0], ClassWeights.uniform(4)) == pytest.approx(np.log(4), abs=1e-12)

    def test_weighted_hand(self):
        loss = weighted_cross_entropy(np.array([[0.5, 0.5]]), [0], ClassWeights((2.0, 1.0)))
        assert loss == pytest.approx(2 * np.log(2), abs=1e-12)

    def test_unit_weights_match_unweighted(self):
        rng = np.random.default_rng(0)
        p = softmax(rng.standard_normal((50, 5)))
        y = rng.integers(0, 5, 50)
        a = weighted_cross_entropy(p, y, ClassWeights.uniform(5))
        b = weighted_cross_entropy(p, y)
        assert abs(a - b) <= 1e-12

    def test_clip_guards_log_zero(self):
        loss = weighted_cross_entropy(np.array([[0.0, 1.0]]), [0])
        assert loss == pytest.approx(-np.log(EPS_CLIP))

    def test_target_out_of_range(self):
        with pytest.raises(LabelError):
            weighted_cross_entropy(np.full((1, 3), 1 / 3), [3])

    def test_weights_below_one_rejected(self):
        with pytest.raises(ConfigError):
            ClassWeights((1.0, 0.5))


# ---------------------------------------------------------------- backward / gradients

def small_softmax_net(seed, in_dim=4, n_classes=3):
    rng = np.random.default_rng(seed)
    return Sequential([Dense(in_dim, n_classes, "softmax", rng=rng)])


class TestBackward:
    def test_single_dense_softmax_matches_finite_differences(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            net = small_softmax_net(seed)
            batch = Batch(rng.standard_normal((6, 4)), rng.integers(0, 3, 6), ClassWeights((1.0, 3.0, 7.0)))
            assert gradient_check(ClassifierObjective(net), batch).global_max < 1e-6

    def test_unused_parameter_has_zero_gradient(self):
        rng = np.random.default_rng(0)
        net = small_softmax_net(0)
        extra = np.ones(3)

        def fn(params, batch):
            loss, grads = ClassifierObjective(net).loss_and_grads(batch)
            return loss, {**grads, "unused": np.zeros_like(params["unused"])}

        params = {**net.parameters(), "unused": extra}
        batch = Batch(rng.standard_normal((4, 4)), rng.integers(0, 3, 4))
        report = gradient_check(FunctionObjective(params, fn), batch)
        assert report.per_parameter["unused"] == 0.0
        _, grads = fn(params, batch)
        np.testing.assert_array_equal(grads["unused"], 0.0)

    @pytest.mark.parametrize("c", [0.5, 3.0, 17.25])
    def test_weight_scaling_is_linear(self, c):
        rng = np.random.default_rng(1)
        net = small_softmax_net(1)
        x, y = rng.standard_normal((8, 4)), rng.integers(0, 3, 8)
        w = np.array([1.0, 2.0, 5.0])
        net.forward(x)
        base = {k: v.copy() for k, v in backward_pass(net, x, y, w).items()}
        loss_base = weighted_cross_entropy(net.forward(x), y, w)
        scaled = backward_pass(net, x, y, c * w)
        for k in base:
            np.testing.assert_allclose(scaled[k], c * base[k], rtol=1e-13, atol=1e-300)
        assert weighted_cross_entropy(net.forward(x), y, c * w) == pytest.approx(c * loss_base, rel=1e-13)

    def test_mismatched_cache(self):
        net = small_softmax_net(0)
        net.forward(np.zeros((2, 4)))
        with pytest.raises(StateError):
            backward_pass(net, np.ones((2, 4)), [0, 1])

    def test_backward_before_forward(self):
        with pytest.raises(StateError):
            Dense(2, 2).backward(np.zeros((1, 2)))


# ---------------------------------------------------------------- adam

class TestAdam:
    def test_zero_gradient_fixed_point(self):
        p = {"w": np.array([1.0, -2.0])}
        state = AdamState()
        adam_step(p, {"w": np.array([0.3, -0.1])}, state)
        before = p["w"].copy()
        adam_step(p, {"w": np.zeros(2)}, state)
        np.testing.assert_array_equal(p["w"], before)

    def test_first_step_closed_form(self):
        p = {"w": np.array([0.5, 0.5, 0.5])}
        g = np.array([3.0, -0.02, 1e-3])
        adam_step(p, {"w": g}, AdamState(lr=0.001))
        np.testing.assert_allclose(p["w"] - 0.5, -0.001 * np.sign(g), atol=1e-6)

    def test_constant_gradient_strictly_decreases(self):
        p = {"w": np.array([0.0])}
        state = AdamState()
        prev = p["w"][0]
        for _ in range(10):
            adam_step(p, {"w": np.array([0.7])}, state)
            assert p["w"][0] < prev
            prev = p["w"][0]
        assert state.step == 10

    def test_non_finite_gradient_leaves_parameters(self):
        p = {"a": np.array([1.0]), "b": np.array([2.0])}
        state = AdamState()
        with pytest.raises(NumericError):
            adam_step(p, {"a": np.array([1.0]), "b": np.array([np.nan])}, state)
        assert p["a"][0] == 1.0 and p["b"][0] == 2.0 and state.step == 0

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 30), st.floats(1e-5, 1e-1))
    def test_zero_gradient_identity_any_state(self, warmup, lr):
        rng = np.random.default_rng(warmup)
        p = {"w": rng.standard_normal(4)}
        state = AdamState(lr=lr)
        for _ in range(warmup):
            adam_step(p, {"w": rng.standard_normal(4)}, state)
        before = p["w"].copy()
        adam_step(p, {"w": np.zeros(4)}, state)
        np.testing.assert_array_equal(p["w"], before)


# ---------------------------------------------------------------- gradient_check harness

class TestGradientCheck:
    def test_correct_model_passes(self):
        rng = np.random.default_rng(0)
        probe = LayerProbe(Dense(5, 4, "tanh", rng=rng), rng.standard_normal((3, 5)), rng=rng)
        assert gradient_check(probe, None, 1e-5).global_max < 1e-4

    def test_injected_fault_detected(self):
        rng = np.random.default_rng(0)
        probe = LayerProbe(Dense(5, 4, "tanh", rng=rng), rng.standard_normal((3, 5)), rng=rng)
        assert gradient_check(ScaledGradients(probe, 1.1), None, 1e-5).global_max > 1e-2

    def test_no_parameters(self):
        report = gradient_check(FunctionObjective({}, lambda p, b: (0.0, {})), None)
        assert report.per_parameter == {} and report.global_max == 0.0

    @pytest.mark.parametrize("activation", ["relu", "linear", "sigmoid", "tanh", "softmax"])
    def test_dense_activations(self, activation):
        rng = np.random.default_rng(5)
        probe = LayerProbe(Dense(4, 3, activation, rng=rng), rng.standard_normal((5, 4)), rng=rng)
        assert gradient_check(probe, None).global_max < 1e-4

    def test_dropout_train_mode_with_pinned_mask(self):
        rng = np.random.default_rng(6)
        probe = LayerProbe(Dropout(0.3), rng.standard_normal((4, 5)), rng=rng, train=True, dropout_seed=3)
        assert gradient_check(probe, None).global_max < 1e-4
