import math

import numpy as np
import pytest

from sparselut.datasets import Dataset, synth_centered_blobs
from sparselut.numerics import QuantizerSpec, RngStream
from sparselut.network import (
    LayerSpec,
    ModelConfig,
    Network,
    PolyLayer,
    backward,
    derive_mask_traced,
    evaluate,
    forward,
    monomial_slots,
    neuron_forward,
    poly_features,
    retrain,
    retrain_traced,
)
from sparselut.rewiring import FeatureMask, init_random_mask


class TestPolyFeatures:
    def test_degree_one(self):
        out = poly_features([0.5, 0.25], 1)
        assert np.array_equal(out, [1.0, 0.5, 0.25])

    def test_degree_two_enumeration(self):
        a, b = 0.5, 0.25
        out = poly_features([a, b], 2)
        assert np.allclose(out, [1.0, a, b, a * a, a * b, b * b])
        assert out.shape[0] == math.comb(2 + 2, 2)

    def test_lengths_match_binomial(self):
        for fanin in range(1, 9):
            for degree in (1, 2):
                assert (poly_features(np.zeros(fanin), degree).shape[0]
                        == math.comb(fanin + degree, degree))
        assert poly_features(np.zeros(6), 2).shape[0] == 28

    def test_unsupported_degree(self):
        with pytest.raises(ValueError):
            poly_features([0.5], 3)


class TestNeuronForward:
    def test_zero_weights(self):
        w = np.zeros(3)
        assert neuron_forward([0.2, 0.9], w, 0.0) == 0.0

    def test_linear_case(self):
        out = neuron_forward([0.25, 0.5], [0.0, 1.0, 1.0], 0.0)
        assert out == 0.75

    def test_quantized_representable(self):
        q = QuantizerSpec(2, 0.0, 1.0)
        out = neuron_forward([0.25, 0.5], [0.0, 1.0, 1.0], 0.0, out_quant=q)
        assert out == 0.75

    def test_clip_saturation(self):
        assert neuron_forward([1.0], [0.0, 5.0], 0.0) == 1.0
        assert neuron_forward([1.0], [0.0, -5.0], 0.0) == 0.0

    def test_weight_length_checked(self):
        with pytest.raises(ValueError):
            neuron_forward([0.5, 0.5], [1.0, 2.0], 0.0)


def tiny_network(seed=0, n_in=9, widths=(6, 4), fanin=3, degree=1, bits=3,
                 quantized=False):
    rng = RngStream(seed)
    layers = []
    cur = n_in
    for i, n_out in enumerate(widths):
        f = min(fanin, cur)
        idx = init_random_mask(cur, n_out, f, rng.child(i)).input_indices(0)
        n_mono = math.comb(f + degree, degree)
        coeffs = rng.child(i, 1).normal((n_mono, n_out)) / math.sqrt(n_mono)
        bias = 0.05 * rng.child(i, 2).normal((n_out,))
        layers.append(PolyLayer(idx, coeffs, bias, degree, bits,
                                is_output=(i == len(widths) - 1)))
        cur = n_out
    return Network(n_in, layers, input_bits=bits, quantized=quantized)


def numeric_gradient(net, x, y, layer, kind, index, h=1e-6):
    arr = layer.coeffs if kind == "coeffs" else layer.bias
    orig = arr[index]
    arr[index] = orig + h
    lo_plus = net.loss_and_grads(x, y)[0]
    arr[index] = orig - h
    lo_minus = net.loss_and_grads(x, y)[0]
    arr[index] = orig
    return (lo_plus - lo_minus) / (2 * h)


class TestGradients:
    @pytest.mark.parametrize("degree", [1, 2])
    def test_full_precision_backward_matches_finite_differences(self, degree):
        rng = RngStream(31)
        net = tiny_network(seed=degree, degree=degree, quantized=False)
        x = rng.uniform((12, 9))
        y = rng.integers(0, 4, size=12).astype(np.int64)
        _, grads, _ = net.loss_and_grads(x, y)
        checked = 0
        for li, layer in enumerate(net.layers):
            d_coeffs, d_bias = grads[li]
            for m in range(layer.coeffs.shape[0]):
                for o in range(layer.n_out):
                    num = numeric_gradient(net, x, y, layer, "coeffs", (m, o))
                    # the central-difference oracle has a ~1e-10 absolute
                    # noise floor, so the relative check needs |num| above it
                    if abs(num) > 1e-5:
                        assert (abs(d_coeffs[m, o] - num) / abs(num)) < 1e-5
                        checked += 1
            for o in range(layer.n_out):
                num = numeric_gradient(net, x, y, layer, "bias", (o,))
                if abs(num) > 1e-5:
                    assert (abs(d_bias[o] - num) / abs(num)) < 1e-5
                    checked += 1
        assert checked >= 10

    def test_zero_weight_network_uniform_loss(self):
        net = tiny_network(seed=3)
        for layer in net.layers:
            layer.coeffs[:] = 0.0
            layer.bias[:] = 0.0
        x = RngStream(4).uniform((32, 9))
        y = RngStream(5).integers(0, 4, size=32).astype(np.int64)
        loss, _, _ = net.loss_and_grads(x, y)
        assert loss == pytest.approx(math.log(4), rel=1e-9)

    def test_input_shape_validated(self):
        net = tiny_network()
        with pytest.raises(ValueError):
            forward(net, np.zeros((3, 5)))
        with pytest.raises(ValueError):
            backward(net, np.zeros((3, 9)), np.zeros(2, dtype=np.int64))

    def test_permutation_equivariance(self):
        # permuting input features and first-layer index map leaves logits unchanged
        net = tiny_network(seed=8)
        x = RngStream(9).uniform((7, 9))
        base = net.forward(x)
        perm = RngStream(10).permutation(9)
        inverse = np.argsort(perm)
        first = net.layers[0]
        permuted = PolyLayer(inverse[first.idx], first.coeffs, first.bias,
                             first.degree, first.act_bits, first.is_output)
        net2 = Network(9, [permuted] + net.layers[1:], net.input_bits,
                       quantized=net.quantized)
        assert np.allclose(net2.forward(x[:, perm]), base, atol=1e-12)


class TestLayerSpecConfig:
    def test_layer_spec_validation(self):
        with pytest.raises(ValueError):
            LayerSpec(4, 3, 5, 2)
        with pytest.raises(ValueError):
            LayerSpec(4, 3, 2, 0)
        with pytest.raises(ValueError):
            LayerSpec(4, 3, 2, 2, degree=3)

    def test_config_chaining(self):
        with pytest.raises(ValueError):
            ModelConfig(layers=(LayerSpec(4, 3, 2, 2), LayerSpec(5, 2, 2, 2)))

    def test_dense_mode_requires_full_fanin(self):
        with pytest.raises(ValueError):
            ModelConfig(layers=(LayerSpec(4, 3, 2, 2),), mode="dense")

    def test_from_widths(self):
        cfg = ModelConfig.from_widths(16, [8, 4], fanin=6, act_bits=2)
        assert [l.n_in for l in cfg.layers] == [16, 8]
        assert [l.fanin for l in cfg.layers] == [6, 6]
        cfg2 = ModelConfig.from_widths(16, [4, 2], fanin=[2, 3], act_bits=[3, 2])
        assert [l.fanin for l in cfg2.layers] == [2, 3]
        assert [l.act_bits for l in cfg2.layers] == [3, 2]

    def test_phase_boundary_default(self):
        cfg = ModelConfig.from_widths(16, [4], 2, 2, epochs=300)
        assert cfg.phase_boundary_epochs == 240


@pytest.fixture(scope="module")
def blob_data():
    return synth_centered_blobs(1200, 8, 2, RngStream(2))


class TestDeriveMask:
    def test_random_mode_ignores_dataset(self, blob_data):
        cfg = ModelConfig.from_widths(64, [6, 2], 4, 2, mode="random", seed=5)
        a, _ = derive_mask_traced(cfg, blob_data)
        b, _ = derive_mask_traced(cfg, None)
        assert a == b
        assert all(np.all(m.sum(axis=0) == 4) for m in a.layers)

    def test_dense_mode_rejected(self, blob_data):
        cfg = ModelConfig.from_widths(4, [4, 2], [4, 4], 2, mode="dense")
        with pytest.raises(ValueError):
            derive_mask_traced(cfg, blob_data)

    def test_sparselut_dense_start_and_exact_finish(self, blob_data):
        cfg = ModelConfig.from_widths(64, [6, 2], 4, 2, mode="sparselut",
                                      epochs=6, phase1_epochs=4, eta=1.0,
                                      alpha=1e-3, batch_size=128, seed=6)
        mask, traj = derive_mask_traced(cfg, blob_data)
        assert len(traj) == 6
        assert traj[0] > 0.9  # dense start keeps most connections in epoch 1
        for m, spec in zip(mask.layers, cfg.layers):
            assert np.all(m.sum(axis=0) == spec.fanin)

    def test_deepr_density_constant(self, blob_data):
        cfg = ModelConfig.from_widths(64, [6, 2], 4, 2, mode="deepr_star",
                                      epochs=4, phase1_epochs=3, eta=0.5, seed=7)
        mask, traj = derive_mask_traced(cfg, blob_data)
        expected = (4 * 6 + 4 * 2) / (64 * 6 + 6 * 2)
        assert all(abs(d - expected) < 1e-12 for d in traj)

    def test_trajectory_length_matches_epochs(self, blob_data):
        cfg = ModelConfig.from_widths(64, [6, 2], 4, 2, mode="random", epochs=9)
        _, traj = derive_mask_traced(cfg, blob_data)
        assert len(traj) == 9


class TestRetrain:
    def config(self, **kw):
        base = dict(mode="random", epochs=4, retrain_epochs=kw.pop("retrain_epochs", 4),
                    seed=8, batch_size=128)
        base.update(kw)
        return ModelConfig.from_widths(64, [6, 2], 4, 2, **base)

    def test_zero_epochs_keeps_init_and_mask(self, blob_data):
        cfg = self.config(retrain_epochs=0)
        mask, _ = derive_mask_traced(cfg, blob_data)
        model = retrain(cfg, mask, blob_data)
        assert model.best_epoch == -1
        assert model.mask() == mask

    def test_mask_faithfulness_after_training(self, blob_data):
        cfg = self.config()
        mask, _ = derive_mask_traced(cfg, blob_data)
        model, _ = retrain_traced(cfg, mask, blob_data)
        assert model.mask() == mask
        for layer, spec in zip(model.layers, cfg.layers):
            w = np.zeros((spec.n_in, spec.n_out))
            for j in range(layer.n_out):
                w[layer.idx[j], j] = layer.coeffs[1:1 + layer.fanin, j]
            assert np.count_nonzero(w) <= spec.fanin * spec.n_out

    def test_mask_mismatch_rejected(self, blob_data):
        cfg = self.config()
        wrong = FeatureMask([init_random_mask(64, 6, 3, RngStream(0)).layers[0],
                             init_random_mask(6, 2, 2, RngStream(0)).layers[0]])
        with pytest.raises(ValueError):
            retrain(cfg, wrong, blob_data)

    def test_loss_decreases_on_separable_data(self, blob_data):
        cfg = self.config(retrain_epochs=50)
        mask, _ = derive_mask_traced(cfg, blob_data)
        model, history = retrain_traced(cfg, mask, blob_data)
        assert max(history) > history[0]
        assert model.best_accuracy == max(history)


class TestEvaluate:
    def test_constant_predictor_on_single_class(self):
        rng = RngStream(12)
        x = rng.uniform((40, 9))
        y = np.zeros(40, dtype=np.int64)
        ds = Dataset(x, y, x, y, n_classes=4)
        net = tiny_network(seed=13)
        for layer in net.layers:
            layer.coeffs[:] = 0.0
            layer.bias[:] = 0.0
        net.layers[-1].bias[0] = 1.0  # forces argmax to class 0
        from sparselut.network import TrainedModel
        model = TrainedModel(input_bits=3, n_inputs=9, layers=net.layers)
        assert evaluate(model, ds) == 1.0

    def test_untrained_model_near_chance(self):
        rng = RngStream(14)
        x = rng.uniform((10_000, 9))
        y = rng.integers(0, 10, size=10_000).astype(np.int64)
        ds = Dataset(x, y, x, y, n_classes=10)
        net = tiny_network(seed=15, widths=(6, 10))
        from sparselut.network import TrainedModel
        model = TrainedModel(input_bits=3, n_inputs=9, layers=net.layers)
        acc = evaluate(model, ds)
        # binomial 4-sigma band around 0.1 for n=10000 is +-0.012; the
        # spec bound [0.08, 0.12] is what we assert
        assert 0.08 <= acc <= 0.12

    def test_deterministic(self, blob_data):
        cfg = ModelConfig.from_widths(64, [6, 2], 4, 2, mode="random",
                                      epochs=2, retrain_epochs=2, seed=16)
        mask, _ = derive_mask_traced(cfg, blob_data)
        m1 = retrain(cfg, mask, blob_data)
        m2 = retrain(cfg, mask, blob_data)
        assert evaluate(m1, blob_data) == evaluate(m2, blob_data)

    def test_empty_split_rejected(self):
        x = np.zeros((4, 9)); y = np.zeros(4, dtype=np.int64)
        ds = Dataset(x, y, np.zeros((0, 9)), np.zeros(0, dtype=np.int64), 2)
        net = tiny_network(seed=17)
        from sparselut.network import TrainedModel
        model = TrainedModel(input_bits=3, n_inputs=9, layers=net.layers)
        with pytest.raises(ValueError):
            evaluate(model, ds)
