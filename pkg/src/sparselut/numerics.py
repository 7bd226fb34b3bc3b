"""Deterministic numerical substrate: seeded RNG, quantizer, AdamW.

Everything here is plain float64 numpy. Determinism contract: the same seed
produces bit-identical draws on every platform (PCG64 streams are stable),
and the quantizer resolves level boundaries by comparison against the exact
stored level values, so repeated quantization can never drift.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RngStream",
    "standard_normal_matrix",
    "QuantizerSpec",
    "quantize",
    "quantize_scalar",
    "quantize_grad",
    "AdamW",
]


class RngStream:
    """Seeded random stream with derivable child streams.

    A thin wrapper over ``numpy.random.Generator(PCG64)``. Child streams are
    derived from the seed plus integer tags via ``SeedSequence``, so a run is
    reproducible no matter how many independent streams it forks.
    """

    def __init__(self, seed, _sequence=None):
        self.seed = int(seed)
        self._sequence = _sequence or np.random.SeedSequence(self.seed)
        self._gen = np.random.Generator(np.random.PCG64(self._sequence))

    def child(self, *tags: int) -> "RngStream":
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=tuple(int(t) for t in tags))
        return RngStream(self.seed, _sequence=seq)

    def normal(self, shape) -> np.ndarray:
        return self._gen.standard_normal(shape)

    def uniform(self, shape) -> np.ndarray:
        return self._gen.random(shape)

    def signs(self, shape) -> np.ndarray:
        """Uniform {-1.0, +1.0} matrix."""
        return np.where(self._gen.random(shape) < 0.5, -1.0, 1.0)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice_without_replacement(self, n: int, k: int) -> np.ndarray:
        """k distinct indices from range(n), uniform over k-subsets."""
        return self._gen.choice(n, size=k, replace=False)


def standard_normal_matrix(rows: int, cols: int, rng: RngStream) -> np.ndarray:
    """i.i.d. standard normal matrix, deterministic given the stream state."""
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dimensions must be >= 1, got {rows}x{cols}")
    return rng.normal((rows, cols))


@dataclass(frozen=True)
class QuantizerSpec:
    """Uniform quantizer with 2**bits levels on [lo, hi).

    Level k has the real value lo + k*(hi-lo)/2**bits. Inputs are mapped to
    the level whose half-open bin [b_k, b_{k+1}) contains them and clamped at
    the ends; an input equal to a boundary lands on the upper bin (floor
    semantics). Quantization is idempotent by construction because the bin
    test compares against the exact emitted level values.
    """

    bits: int
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError(f"bits must be >= 1, got {self.bits}")
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def n_levels(self) -> int:
        return 1 << self.bits

    def levels(self) -> np.ndarray:
        """The 2**bits representable values, ascending."""
        n = self.n_levels
        k = np.arange(n, dtype=np.float64)
        return self.lo + k * (self.hi - self.lo) / n

    def interior_boundaries(self) -> np.ndarray:
        """Levels 1..2**bits-1: the decision boundaries between bins."""
        return self.levels()[1:]

    def index(self, x) -> np.ndarray:
        """Level index of x (vectorized), clamped to [0, 2**bits - 1]."""
        return np.searchsorted(self.interior_boundaries(), x, side="right")

    def index_scalar(self, x: float) -> int:
        """Scalar path of :meth:`index`; used by oracle-style recomputation."""
        return bisect.bisect_right(self.interior_boundaries().tolist(), x)

    def value(self, k) -> np.ndarray:
        return self.lo + np.asarray(k, dtype=np.float64) * (self.hi - self.lo) / self.n_levels


def quantize(x, q: QuantizerSpec):
    """Quantize x (scalar or array) onto q's levels."""
    return q.levels()[q.index(np.asarray(x, dtype=np.float64))]


def quantize_scalar(x: float, q: QuantizerSpec) -> float:
    """Scalar quantize via bisection; bit-identical to :func:`quantize`."""
    return float(q.levels()[q.index_scalar(float(x))])


def quantize_grad(upstream, x, q: QuantizerSpec):
    """Clipped straight-through gradient of the quantizer.

    Passes the upstream gradient where lo <= x <= hi (boundaries count as
    in-range) and zeroes it outside.
    """
    x = np.asarray(x, dtype=np.float64)
    window = (x >= q.lo) & (x <= q.hi)
    return np.asarray(upstream, dtype=np.float64) * window


class AdamW:
    """Adaptive-moment optimizer with decoupled (multiplicative) weight decay.

    ``direction`` returns the raw step direction m_hat/(sqrt(v_hat)+eps)
    + wd*p, which callers that own the parameter update (the rewiring engine)
    scale by the learning rate themselves; ``update`` applies the standard
    p <- p - lr*direction step in place.
    """

    def __init__(self, shape, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8,
                 weight_decay=1e-4):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.m = np.zeros(shape, dtype=np.float64)
        self.v = np.zeros(shape, dtype=np.float64)
        self.t = 0

    def direction(self, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
        if grads.shape != self.m.shape or params.shape != self.m.shape:
            raise ValueError(
                f"shape mismatch: state {self.m.shape}, params {params.shape}, "
                f"grads {grads.shape}")
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grads
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grads * grads
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return m_hat / (np.sqrt(v_hat) + self.eps) + self.weight_decay * params

    def update(self, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
        params -= self.lr * self.direction(params, grads)
        return params
