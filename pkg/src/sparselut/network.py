"""Quantized polynomial-neuron networks and the two-step training pipeline.

Step 1 derives a connectivity mask: a dense (or sparse) linear network is
trained in full precision while the rewiring engine sheds connections toward
the per-neuron fan-in target. Step 2 freezes that mask and retrains a fresh
network with quantized activations, optionally with degree-2 polynomial
feature expansion per neuron. Hidden activations are hard-clipped onto [0, 1]
so every neuron's output lands on quantizer levels; the output layer produces
linear logits during training and evaluation (hardware compilation quantizes
it like a hidden layer, see the table compiler).

No batch normalization anywhere: ranges are fixed so that inference is
bit-exactly reproducible by table lookup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from sparselut.errors import StateError
from sparselut.numerics import AdamW, QuantizerSpec, RngStream
from sparselut.rewiring import (
    ConnectionState,
    FeatureMask,
    RewiringSchedule,
    deepr_star_step,
    effective_weights,
    extract_mask,
    init_connection_state,
    init_random_mask,
    sparselut_step,
)

__all__ = [
    "LayerSpec",
    "ModelConfig",
    "TrainedModel",
    "SPARSITY_MODES",
    "monomial_slots",
    "poly_features",
    "neuron_forward",
    "Network",
    "forward",
    "backward",
    "derive_mask",
    "derive_mask_traced",
    "retrain",
    "retrain_traced",
    "evaluate",
]

SPARSITY_MODES = ("dense", "random", "deepr_star", "sparselut")


@dataclass(frozen=True)
class LayerSpec:
    """One layer: n_in -> n_out with per-neuron fan-in F, activation bits
    beta, and polynomial degree D."""

    n_in: int
    n_out: int
    fanin: int
    act_bits: int
    degree: int = 1

    def __post_init__(self):
        if self.n_in < 1 or self.n_out < 1:
            raise ValueError(f"layer dims must be >= 1, got {self.n_in}x{self.n_out}")
        if not 1 <= self.fanin <= self.n_in:
            raise ValueError(
                f"fanin must be in [1, {self.n_in}], got {self.fanin}")
        if self.act_bits < 1:
            raise ValueError(f"act_bits must be >= 1, got {self.act_bits}")
        if self.degree not in (1, 2):
            raise ValueError(f"degree must be 1 or 2, got {self.degree}")

    @property
    def n_monomials(self) -> int:
        return math.comb(self.fanin + self.degree, self.degree)


@dataclass
class ModelConfig:
    """Full description of one experiment's model and training protocol."""

    layers: tuple
    input_bits: int = 2
    mode: str = "sparselut"
    epochs: int = 300
    phase1_epochs: int | None = None   # default: 80% of epochs
    retrain_epochs: int | None = None  # default: epochs
    batch_size: int = 128
    seed: int = 0
    eta: float = 0.01
    bias_lr: float = 0.01
    retrain_lr: float = 0.01
    alpha: float = 1e-5
    eps1: float = 1e-12
    eps2: float = 5e-5
    noise_std: float = 1e-3
    weight_decay: float = 1e-4
    fanin_init: int | None = None      # None: dense start (sparse start for deepr_star)

    def __post_init__(self):
        self.layers = tuple(self.layers)
        if not self.layers:
            raise ValueError("config needs at least one layer")
        for prev, cur in zip(self.layers, self.layers[1:]):
            if prev.n_out != cur.n_in:
                raise ValueError(
                    f"layer dims do not chain: {prev.n_out} -> {cur.n_in}")
        if self.mode not in SPARSITY_MODES:
            raise ValueError(f"unknown sparsity mode {self.mode!r}")
        if self.mode == "dense":
            for i, spec in enumerate(self.layers):
                if spec.fanin != spec.n_in:
                    raise ValueError(
                        f"dense mode requires fanin == n_in, layer {i} has "
                        f"{spec.fanin} != {spec.n_in}")
        if self.input_bits < 1:
            raise ValueError(f"input_bits must be >= 1, got {self.input_bits}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")

    @property
    def n_inputs(self) -> int:
        return self.layers[0].n_in

    @property
    def n_classes(self) -> int:
        return self.layers[-1].n_out

    @property
    def phase_boundary_epochs(self) -> int:
        if self.phase1_epochs is not None:
            return self.phase1_epochs
        return max(1, int(round(0.8 * self.epochs)))

    @property
    def step2_epochs(self) -> int:
        return self.retrain_epochs if self.retrain_epochs is not None else self.epochs

    @classmethod
    def from_widths(cls, n_inputs, widths, fanin, act_bits, degree=1, **kwargs):
        """Chain layers from an input size plus hidden/output widths.

        fanin and act_bits may be scalars or per-layer sequences; fan-in is
        clamped to each layer's input size (a narrow layer cannot exceed it).
        """
        dims = [n_inputs] + list(widths)
        n_layers = len(widths)

        def per_layer(v):
            vals = list(v) if isinstance(v, (list, tuple)) else [v] * n_layers
            if len(vals) != n_layers:
                raise ValueError(f"expected {n_layers} per-layer values, got {len(vals)}")
            return vals

        fanins, betas = per_layer(fanin), per_layer(act_bits)
        layers = [
            LayerSpec(dims[i], dims[i + 1], min(fanins[i], dims[i]), betas[i], degree)
            for i in range(n_layers)
        ]
        return cls(layers=tuple(layers), **kwargs)


def monomial_slots(fanin: int, degree: int):
    """Operand slots (a, b) of every monomial over a fan-in window.

    Order: constant (-1, -1), linear terms (k, -1) in index order, then
    degree-2 products (a, b) with a <= b lexicographically. This order is
    shared by the scalar path, the vectorized layers, and both table-fill
    kernels.
    """
    if degree not in (1, 2):
        raise ValueError(f"degree must be 1 or 2, got {degree}")
    slots = [(-1, -1)] + [(k, -1) for k in range(fanin)]
    if degree == 2:
        slots += [(a, b) for a in range(fanin) for b in range(a, fanin)]
    a = np.array([s[0] for s in slots], dtype=np.int32)
    b = np.array([s[1] for s in slots], dtype=np.int32)
    return a, b


def poly_features(x, degree: int) -> np.ndarray:
    """Monomial vector (1, x1, .., xF, x1^2, x1 x2, ..) of one input window."""
    x = np.asarray(x, dtype=np.float64)
    mono_a, mono_b = monomial_slots(x.shape[0], degree)
    out = np.empty(mono_a.shape[0], dtype=np.float64)
    for m, (a, b) in enumerate(zip(mono_a, mono_b)):
        if a < 0:
            out[m] = 1.0
        elif b < 0:
            out[m] = x[a]
        else:
            out[m] = x[a] * x[b]
    return out


def neuron_forward(x, weights, bias, *, degree=1, activation="clip",
                   out_quant: QuantizerSpec | None = None) -> float:
    """Scalar reference path of one neuron: sigma(sum w_m phi_m(x) + b).

    Accumulates monomials sequentially in slot order then adds the bias,
    matching the vectorized layers bit for bit. activation "clip" is the
    hidden-layer hard clip onto [0, 1]; "linear" passes the sum through.
    Feeding the result to out_quant yields the neuron's table output value.
    """
    x = [float(v) for v in x]
    weights = [float(w) for w in weights]
    mono_a, mono_b = monomial_slots(len(x), degree)
    if len(weights) != mono_a.shape[0]:
        raise ValueError(
            f"got {len(weights)} weights for {mono_a.shape[0]} monomials")
    acc = 0.0
    for m in range(len(weights)):
        a, b = int(mono_a[m]), int(mono_b[m])
        if a < 0:
            acc += weights[m]
        elif b < 0:
            acc += weights[m] * x[a]
        else:
            acc += weights[m] * (x[a] * x[b])
    acc += float(bias)
    if activation == "clip":
        acc = min(max(acc, 0.0), 1.0)
    elif activation != "linear":
        raise ValueError(f"unknown activation {activation!r}")
    if out_quant is not None:
        acc = float(out_quant.levels()[out_quant.index_scalar(acc)])
    return acc


class PolyLayer:
    """Masked polynomial layer: each neuron sees only its F selected inputs.

    idx is the (n_out, F) matrix of selected input indices, ascending per
    neuron; coeffs is (n_monomials, n_out). Hidden layers clip onto [0, 1]
    and optionally quantize; the output layer emits linear logits.
    """

    def __init__(self, idx, coeffs, bias, degree, act_bits, is_output):
        self.idx = np.ascontiguousarray(idx, dtype=np.int64)
        self.coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
        self.bias = np.ascontiguousarray(bias, dtype=np.float64)
        self.degree = int(degree)
        self.act_bits = int(act_bits)
        self.is_output = bool(is_output)
        self.n_out, self.fanin = self.idx.shape
        self.mono_a, self.mono_b = monomial_slots(self.fanin, self.degree)
        if self.coeffs.shape != (self.mono_a.shape[0], self.n_out):
            raise ValueError(
                f"coeffs shape {self.coeffs.shape} does not match "
                f"({self.mono_a.shape[0]}, {self.n_out})")
        self.out_quant = QuantizerSpec(self.act_bits, 0.0, 1.0)
        # scatter plan for the input gradient: sorted flat target columns
        flat = self.idx.ravel()
        self._order = np.argsort(flat, kind="stable")
        sorted_cols = flat[self._order]
        self._unique_cols, self._starts = np.unique(sorted_cols, return_index=True)

    def forward(self, x, quantized, cache=None):
        xs = x[:, self.idx]                       # (B, n_out, F)
        z = np.zeros(xs.shape[:2], dtype=np.float64)
        phi = np.empty((xs.shape[0], self.n_out, self.mono_a.shape[0]))
        for m in range(self.mono_a.shape[0]):
            a, b = int(self.mono_a[m]), int(self.mono_b[m])
            if a < 0:
                phi[:, :, m] = 1.0
            elif b < 0:
                phi[:, :, m] = xs[:, :, a]
            else:
                phi[:, :, m] = xs[:, :, a] * xs[:, :, b]
            z += self.coeffs[m] * phi[:, :, m]
        z += self.bias
        if self.is_output:
            out = z
        else:
            clipped = np.minimum(np.maximum(z, 0.0), 1.0)
            if quantized:
                out = self.out_quant.levels()[self.out_quant.index(clipped)]
            else:
                out = clipped
        if cache is not None:
            cache["xs"], cache["phi"], cache["z"] = xs, phi, z
        return out

    def backward(self, d_out, cache, n_in):
        """Gradients from upstream d_out; returns (d_x, d_coeffs, d_bias)."""
        xs, phi, z = cache["xs"], cache["phi"], cache["z"]
        if self.is_output:
            dz = d_out
        else:
            dz = d_out * ((z >= 0.0) & (z <= 1.0))  # clip window, STE through quantizer
        d_coeffs = np.einsum("bo,bom->mo", dz, phi)
        d_bias = dz.sum(axis=0)

        dxs = np.zeros_like(xs)
        for m in range(self.mono_a.shape[0]):
            a, b = int(self.mono_a[m]), int(self.mono_b[m])
            if a < 0:
                continue
            w_dz = self.coeffs[m] * dz
            if b < 0:
                dxs[:, :, a] += w_dz
            else:
                dxs[:, :, a] += w_dz * xs[:, :, b]
                dxs[:, :, b] += w_dz * xs[:, :, a]

        flat = dxs.reshape(dxs.shape[0], -1)[:, self._order]
        sums = np.add.reduceat(flat, self._starts, axis=1)
        d_x = np.zeros((dxs.shape[0], n_in), dtype=np.float64)
        d_x[:, self._unique_cols] = sums
        return d_x, d_coeffs, d_bias


@dataclass
class TrainedModel:
    """A retrained network: frozen connectivity plus trained coefficients."""

    input_bits: int
    n_inputs: int = 0
    layers: list = field(default_factory=list)
    best_epoch: int = -1
    best_accuracy: float = float("nan")

    def mask(self) -> FeatureMask:
        mats = []
        n_in = self.n_inputs
        for layer in self.layers:
            m = np.zeros((n_in, layer.n_out), dtype=np.uint8)
            for j in range(layer.n_out):
                m[layer.idx[j], j] = 1
            mats.append(m)
            n_in = layer.n_out
        return FeatureMask(mats)

    def weight_matrix(self, layer_index: int, n_in: int) -> np.ndarray:
        """Linear-term coefficients scattered back to (n_in, n_out)."""
        layer = self.layers[layer_index]
        w = np.zeros((n_in, layer.n_out), dtype=np.float64)
        for j in range(layer.n_out):
            w[layer.idx[j], j] = layer.coeffs[1:1 + layer.fanin, j]
        return w


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _cross_entropy(probs, labels):
    return float(-np.mean(np.log(probs[np.arange(labels.shape[0]), labels] + 1e-300)))


class Network:
    """Stack of PolyLayers with an input quantizer."""

    def __init__(self, n_inputs, layers, input_bits, quantized=True):
        self.n_inputs = int(n_inputs)
        self.layers = list(layers)
        self.input_bits = int(input_bits)
        self.in_quant = QuantizerSpec(self.input_bits, 0.0, 1.0)
        self.quantized = bool(quantized)

    def forward(self, x, caches=None):
        if self.quantized:
            h = self.in_quant.levels()[self.in_quant.index(x)]
        else:
            h = x
        sizes = [self.n_inputs] + [l.n_out for l in self.layers]
        for i, layer in enumerate(self.layers):
            cache = {} if caches is not None else None
            h = layer.forward(h, self.quantized, cache)
            if caches is not None:
                cache["n_in"] = sizes[i]
                caches.append(cache)
        return h

    def loss_and_grads(self, x, labels):
        caches = []
        logits = self.forward(x, caches)
        probs = _softmax(logits)
        loss = _cross_entropy(probs, labels)
        dz = probs.copy()
        dz[np.arange(labels.shape[0]), labels] -= 1.0
        dz /= labels.shape[0]
        grads = [None] * len(self.layers)
        upstream = dz
        for i in reversed(range(len(self.layers))):
            upstream, d_coeffs, d_bias = self.layers[i].backward(
                upstream, caches[i], caches[i]["n_in"])
            grads[i] = (d_coeffs, d_bias)
        return loss, grads, upstream

    def predict(self, x):
        return np.argmax(self.forward(x), axis=1)


def forward(net: Network, batch: np.ndarray) -> np.ndarray:
    """Logits of a batch (convenience wrapper)."""
    if batch.ndim != 2 or batch.shape[1] != net.n_inputs:
        raise ValueError(
            f"batch shape {batch.shape} does not match {net.n_inputs} inputs")
    return net.forward(batch)


def backward(net: Network, batch: np.ndarray, labels: np.ndarray):
    """(loss, per-layer (d_coeffs, d_bias), d_input) for a labeled batch."""
    if batch.ndim != 2 or batch.shape[1] != net.n_inputs:
        raise ValueError(
            f"batch shape {batch.shape} does not match {net.n_inputs} inputs")
    if labels.shape[0] != batch.shape[0]:
        raise ValueError("labels do not match batch size")
    return net.loss_and_grads(batch, labels)


# ---------------------------------------------------------------------------
# step 1: mask derivation


def _batches(n, batch_size, rng):
    perm = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield perm[start:start + batch_size]


class _ThetaTrainer:
    """Full-precision linear network whose weights live in ConnectionStates.

    Forward scale 1/sqrt(initial fan-in) keeps pre-activations inside the
    clip window at init (the published baselines rely on batch norm for
    this; a fixed scale is the deterministic stand-in). The backward clip
    window leaks a small slope so neurons saturated at init still receive
    gradient and can re-enter the useful range; mask search cares about
    ranking connections, not about exact clipped-network gradients.
    """

    LEAK = 0.1
    BIAS_INIT = 0.25

    def __init__(self, config: ModelConfig, rng: RngStream):
        self.config = config
        start_dense = config.mode == "sparselut" and config.fanin_init is None
        self.states = []
        self.scales = []
        for i, spec in enumerate(config.layers):
            if config.mode == "deepr_star":
                f_init = spec.fanin if config.fanin_init is None else config.fanin_init
            else:
                f_init = spec.n_in if start_dense else min(config.fanin_init, spec.n_in)
            f_init = min(max(f_init, spec.fanin), spec.n_in)
            self.states.append(init_connection_state(
                spec.n_in, spec.n_out, f_init, rng.child(1, i),
                fanin_target=spec.fanin))
            self.scales.append(1.0 / math.sqrt(f_init))
        self.biases = [np.full(spec.n_out, self.BIAS_INIT) for spec in config.layers]
        self.bias_opt = [
            AdamW(b.shape, lr=config.bias_lr, weight_decay=0.0) for b in self.biases
        ]

    def forward_backward(self, x, labels):
        weights = [effective_weights(s) * c for s, c in zip(self.states, self.scales)]
        acts = [x]
        zs = []
        h = x
        last = len(weights) - 1
        for i, (w, b) in enumerate(zip(weights, self.biases)):
            z = h @ w + b
            zs.append(z)
            h = z if i == last else np.minimum(np.maximum(z, 0.0), 1.0)
            acts.append(h)
        probs = _softmax(acts[-1])
        loss = _cross_entropy(probs, labels)
        dz = probs
        dz[np.arange(labels.shape[0]), labels] -= 1.0
        dz /= labels.shape[0]
        d_weights, d_biases = [None] * len(weights), [None] * len(weights)
        for i in reversed(range(len(weights))):
            d_weights[i] = acts[i].T @ dz
            d_biases[i] = dz.sum(axis=0)
            if i > 0:
                dh = dz @ weights[i].T
                z = zs[i - 1]
                window = np.where((z >= 0.0) & (z <= 1.0), 1.0, self.LEAK)
                dz = dh * window
        return loss, d_weights, d_biases

    def step(self, x, labels, sched: RewiringSchedule, t: int, rng: RngStream):
        loss, d_weights, d_biases = self.forward_backward(x, labels)
        for i, state in enumerate(self.states):
            # chain rule through W = theta * sign (and the forward scale);
            # theta sees the raw gradient so that magnitude ranking tracks
            # how much each connection matters, not just its sign history
            d_theta = state.sign * d_weights[i] * self.scales[i]
            if self.config.mode == "deepr_star":
                deepr_star_step(state, d_theta, sched, rng)
            else:
                sparselut_step(state, d_theta, sched, t, rng)
            self.bias_opt[i].update(self.biases[i], d_biases[i])
        return loss

    def density(self) -> float:
        total = sum(s.active.sum() for s in self.states)
        slots = sum(s.theta.size for s in self.states)
        return float(total) / float(slots)


def derive_mask_traced(config: ModelConfig, dataset):
    """Step 1 with a per-epoch density trajectory; see :func:`derive_mask`."""
    if config.mode not in ("random", "deepr_star", "sparselut"):
        raise ValueError(
            f"mask derivation needs mode random, deepr_star or sparselut, "
            f"got {config.mode!r}")
    root = RngStream(config.seed)
    if config.mode == "random":
        mask = FeatureMask([
            init_random_mask(spec.n_in, spec.n_out, spec.fanin, root.child(1, i)).layers[0]
            for i, spec in enumerate(config.layers)
        ])
        density = (float(sum(s.fanin * s.n_out for s in config.layers))
                   / sum(s.n_in * s.n_out for s in config.layers))
        return mask, [density] * config.epochs

    x, y = dataset.train_x, dataset.train_y
    if x.shape[1] != config.n_inputs:
        raise ValueError(
            f"dataset has {x.shape[1]} features, model expects {config.n_inputs}")
    steps_per_epoch = max(1, math.ceil(x.shape[0] / config.batch_size))
    sched = RewiringSchedule(
        total_steps=max(1, config.epochs * steps_per_epoch),
        phase_boundary=max(1, config.phase_boundary_epochs * steps_per_epoch),
        eps1=config.eps1, eps2=config.eps2, noise_std=config.noise_std,
        reg_coeff=config.alpha, eta=config.eta)
    trainer = _ThetaTrainer(config, root)
    batch_rng = root.child(2)
    step_rng = root.child(3)
    trajectory = []
    t = 0
    for _ in range(config.epochs):
        for batch in _batches(x.shape[0], config.batch_size, batch_rng):
            trainer.step(x[batch], y[batch], sched, t, step_rng)
            t += 1
        trajectory.append(trainer.density())
    mask = FeatureMask([extract_mask(s).layers[0] for s in trainer.states])
    return mask, trajectory


def derive_mask(config: ModelConfig, dataset) -> FeatureMask:
    """Derive the per-layer connectivity mask (training step 1).

    random: sample masks directly, no training. deepr_star / sparselut: train
    the full-precision linear network with per-step rewiring and extract the
    final mask; every neuron then holds exactly its fan-in target.
    """
    return derive_mask_traced(config, dataset)[0]


# ---------------------------------------------------------------------------
# step 2: quantized retraining under a frozen mask


def _build_layers(config: ModelConfig, mask: FeatureMask, rng: RngStream):
    if len(mask) != len(config.layers):
        raise ValueError(
            f"mask has {len(mask)} layers, config has {len(config.layers)}")
    layers = []
    for i, spec in enumerate(config.layers):
        m = mask.layers[i]
        if m.shape != (spec.n_in, spec.n_out):
            raise ValueError(
                f"layer {i}: mask shape {m.shape} != ({spec.n_in}, {spec.n_out})")
        fanins = mask.column_fanins(i)
        if not np.all(fanins == spec.fanin):
            raise ValueError(
                f"layer {i}: mask fan-ins {np.unique(fanins)} != {spec.fanin}")
        idx = mask.input_indices(i)
        n_mono = spec.n_monomials
        coeffs = rng.child(4, i).normal((n_mono, spec.n_out)) / math.sqrt(n_mono)
        bias = np.zeros(spec.n_out)
        layers.append(PolyLayer(idx, coeffs, bias, spec.degree, spec.act_bits,
                                is_output=(i == len(config.layers) - 1)))
    return layers


def retrain_traced(config: ModelConfig, mask: FeatureMask, dataset):
    """Step 2 with the per-epoch test-accuracy curve; see :func:`retrain`."""
    root = RngStream(config.seed)
    layers = _build_layers(config, mask, root)
    net = Network(config.n_inputs, layers, config.input_bits, quantized=True)
    opts = [
        (AdamW(l.coeffs.shape, lr=config.retrain_lr, weight_decay=config.weight_decay),
         AdamW(l.bias.shape, lr=config.retrain_lr, weight_decay=0.0))
        for l in layers
    ]
    x, y = dataset.train_x, dataset.train_y
    if x.shape[1] != config.n_inputs:
        raise ValueError(
            f"dataset has {x.shape[1]} features, model expects {config.n_inputs}")
    batch_rng = root.child(5)
    history = []
    best = (-1.0, -1, None)
    for epoch in range(config.step2_epochs):
        for batch in _batches(x.shape[0], config.batch_size, batch_rng):
            _, grads, _ = net.loss_and_grads(x[batch], y[batch])
            for layer, (opt_c, opt_b), (d_c, d_b) in zip(layers, opts, grads):
                opt_c.update(layer.coeffs, d_c)
                opt_b.update(layer.bias, d_b)
        acc = _accuracy(net, dataset.test_x, dataset.test_y)
        history.append(acc)
        if acc > best[0]:
            best = (acc, epoch, [(l.coeffs.copy(), l.bias.copy()) for l in layers])

    if best[2] is not None:
        for layer, (coeffs, bias) in zip(layers, best[2]):
            layer.coeffs, layer.bias = coeffs, bias
    model = TrainedModel(
        input_bits=config.input_bits, n_inputs=config.n_inputs, layers=layers,
        best_epoch=best[1],
        best_accuracy=best[0] if history else float("nan"))
    return model, history


def retrain(config: ModelConfig, mask: FeatureMask, dataset) -> TrainedModel:
    """Quantized retraining with connectivity frozen to the mask.

    Weights are freshly initialized (derivation weights are discarded); the
    returned model carries the best-test-epoch coefficients.
    """
    return retrain_traced(config, mask, dataset)[0]


def _accuracy(net: Network, x, y) -> float:
    if x.shape[0] == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    correct = 0
    block = 4096
    for start in range(0, x.shape[0], block):
        pred = net.predict(x[start:start + block])
        correct += int((pred == y[start:start + block]).sum())
    return correct / x.shape[0]


def evaluate(model: TrainedModel, dataset, split: str = "test") -> float:
    """Fraction of argmax-correct predictions on a dataset split."""
    x, y = dataset.split(split)
    net = Network(model.n_inputs, model.layers, model.input_bits, quantized=True)
    return _accuracy(net, x, y)
