"""Connection-level sparsity engine.

Each input->neuron connection is parameterized by a trainable nonnegative
magnitude theta and a constant polarity fixed at initialization; a connection
is active exactly while theta > 0. Training alternates a stochastic update of
the active thetas with a per-neuron repair pass that steers every output
neuron toward its target fan-in: deficits are repaired immediately by random
regrowth at a tiny magnitude, surpluses are bled off with small penalties
during the first training phase and cut exactly at the target from the phase
boundary onward. The final connectivity is read off as a binary feature mask.

A strict drop-equals-regrow variant (`deepr_star_step`) is provided as a
baseline: it starts at the target fan-in and replaces every sign-flipped
connection in the same step, so the fan-in constraint holds at every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from sparselut import _backend
from sparselut.errors import StateError
from sparselut.numerics import RngStream, standard_normal_matrix

__all__ = [
    "ConnectionState",
    "FeatureMask",
    "RewiringSchedule",
    "init_random_mask",
    "init_connection_state",
    "effective_weights",
    "apply_stochastic_update",
    "residual",
    "regrow",
    "penalize",
    "hard_deactivate",
    "sparselut_step",
    "extract_mask",
    "deepr_star_step",
]


@dataclass
class ConnectionState:
    """Trainable connectivity of one layer.

    theta: (n_in, n_out) magnitudes; sign: fixed {-1,+1} polarities;
    active: boolean status, kept equal to theta > 0 between steps. Columns
    are output neurons.
    """

    theta: np.ndarray
    sign: np.ndarray
    active: np.ndarray
    fanin_target: int
    fanin_init: int

    @property
    def n_in(self) -> int:
        return self.theta.shape[0]

    @property
    def n_out(self) -> int:
        return self.theta.shape[1]

    def active_counts(self) -> np.ndarray:
        """Active connections per output neuron (column sums)."""
        return self.active.sum(axis=0)


@dataclass(eq=False)
class FeatureMask:
    """Binary connectivity, one (n_in, n_out) uint8 matrix per layer."""

    layers: list = field(default_factory=list)

    def __post_init__(self):
        self.layers = [np.ascontiguousarray(m, dtype=np.uint8) for m in self.layers]

    def __len__(self) -> int:
        return len(self.layers)

    def __eq__(self, other):
        if not isinstance(other, FeatureMask):
            return NotImplemented
        if len(self) != len(other):
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.layers, other.layers))

    def column_fanins(self, layer: int) -> np.ndarray:
        return self.layers[layer].sum(axis=0, dtype=np.int64)

    def input_indices(self, layer: int) -> np.ndarray:
        """(n_out, F) matrix of selected input indices, ascending per neuron.

        Requires every column of the layer to have the same number of ones.
        """
        m = self.layers[layer]
        fanins = self.column_fanins(layer)
        if fanins.size == 0 or not np.all(fanins == fanins[0]):
            raise StateError(f"layer {layer} does not have a uniform fan-in")
        rows, cols = np.nonzero(m.T)  # row-major over neurons gives ascending indices
        return cols.reshape(m.shape[1], int(fanins[0]))


@dataclass(frozen=True)
class RewiringSchedule:
    """Constants of one mask-derivation run; T counts optimizer steps."""

    total_steps: int
    phase_boundary: int
    eps1: float = 1e-12
    eps2: float = 5e-5
    noise_std: float = 1e-3
    reg_coeff: float = 1e-5
    eta: float = 0.01

    def __post_init__(self):
        if not 0 < self.phase_boundary <= self.total_steps:
            raise ValueError(
                f"need 0 < phase boundary <= total steps, got "
                f"{self.phase_boundary} / {self.total_steps}")
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ValueError("eps1 and eps2 must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")


def init_random_mask(n_in: int, n_out: int, fanin: int, rng: RngStream) -> FeatureMask:
    """Single-layer mask with `fanin` uniformly chosen inputs per neuron."""
    if not 1 <= fanin <= n_in:
        raise ValueError(f"fanin must be in [1, {n_in}], got {fanin}")
    if n_out < 1:
        raise ValueError(f"n_out must be >= 1, got {n_out}")
    m = np.zeros((n_in, n_out), dtype=np.uint8)
    for j in range(n_out):
        m[rng.choice_without_replacement(n_in, fanin), j] = 1
    return FeatureMask([m])


def init_connection_state(n_in: int, n_out: int, fanin_init: int,
                          rng: RngStream, fanin_target: int | None = None) -> ConnectionState:
    """Connection parameters from |N(0,1)| magnitudes and a random mask.

    fanin_init = n_in gives the fully dense starting point. Signs are fixed
    uniform {-1,+1} for every slot, including masked-out ones, so later
    regrowth reuses the polarity chosen here.
    """
    w0 = standard_normal_matrix(n_in, n_out, rng)
    is_con = init_random_mask(n_in, n_out, fanin_init, rng).layers[0]
    theta = np.abs(w0) * is_con
    sign = rng.signs((n_in, n_out))
    return ConnectionState(
        theta=theta,
        sign=sign,
        active=theta > 0.0,
        fanin_target=int(fanin_target if fanin_target is not None else fanin_init),
        fanin_init=int(fanin_init),
    )


def effective_weights(state: ConnectionState) -> np.ndarray:
    """W = theta * sign where theta > 0, exactly 0 elsewhere."""
    return np.where(state.theta > 0.0, state.theta * state.sign, 0.0)


def _check_shape(state: ConnectionState, dE_dtheta: np.ndarray):
    if dE_dtheta.shape != state.theta.shape:
        raise ValueError(
            f"gradient shape {dE_dtheta.shape} does not match theta "
            f"{state.theta.shape}")


def apply_stochastic_update(state: ConnectionState, dE_dtheta: np.ndarray,
                            sched: RewiringSchedule, rng: RngStream) -> ConnectionState:
    """theta <- theta - eta*dE/dtheta - eta*alpha + eta*v on active entries.

    v is fresh N(0, G^2) noise; the full noise matrix is drawn every step so
    the stream advances identically regardless of which entries are active.
    Entries driven to theta <= 0 are deactivated. dE_dtheta must already be
    the derivative w.r.t. theta (i.e. sign-adjusted from dE/dW).
    """
    _check_shape(state, dE_dtheta)
    noise = sched.noise_std * rng.normal(state.theta.shape)
    upd = (state.theta - sched.eta * dE_dtheta - sched.eta * sched.reg_coeff
           + sched.eta * noise)
    state.theta[state.active] = upd[state.active]
    np.logical_and(state.active, state.theta > 0.0, out=state.active)
    return state


def residual(state: ConnectionState, neuron_index: int, fanin: int | None = None) -> int:
    """Active count minus target fan-in for one output neuron."""
    if fanin is None:
        fanin = state.fanin_target
    return int(state.active[:, neuron_index].sum()) - int(fanin)


def regrow(state: ConnectionState, neuron_index: int, k: int, eps1: float,
           rng: RngStream) -> ConnectionState:
    """Activate k uniformly chosen dormant connections at theta = eps1."""
    if k == 0:
        return state
    col = state.active[:, neuron_index]
    dormant = np.nonzero(~col)[0]
    if k > dormant.size:
        raise StateError(
            f"neuron {neuron_index}: cannot regrow {k}, only {dormant.size} dormant")
    grown = dormant[rng.choice_without_replacement(dormant.size, k)]
    state.theta[grown, neuron_index] = eps1
    col[grown] = True
    return state


def _lowest_active(state: ConnectionState, neuron_index: int, k: int) -> np.ndarray:
    live = np.nonzero(state.active[:, neuron_index])[0]
    order = np.argsort(state.theta[live, neuron_index], kind="stable")
    return live[order[:k]]


def penalize(state: ConnectionState, neuron_index: int, k: int, eps2: float) -> ConnectionState:
    """Subtract eps2 from the k smallest active thetas of one neuron.

    Entries that cross zero deactivate; the rest stay active, so shedding a
    connection this way usually takes many iterations.
    """
    if k > 0:
        low = _lowest_active(state, neuron_index, k)
        state.theta[low, neuron_index] -= eps2
        dead = low[state.theta[low, neuron_index] <= 0.0]
        state.active[dead, neuron_index] = False
    return state


def hard_deactivate(state: ConnectionState, neuron_index: int, k: int) -> ConnectionState:
    """Cut the k smallest active thetas of one neuron to exactly zero."""
    if k > 0:
        low = _lowest_active(state, neuron_index, k)
        state.theta[low, neuron_index] = 0.0
        state.active[low, neuron_index] = False
    return state


def _fused_step(state: ConnectionState, dE_dtheta: np.ndarray,
                sched: RewiringSchedule, phase2: bool, rng: RngStream) -> ConnectionState:
    """Draw the step's randomness and run the backend kernel in place.

    Two fixed-shape draws per step (noise, regrow priorities) keep the stream
    consumption independent of the connectivity, so trajectories replay
    bit-identically on either backend. Picking the deficit-many dormant slots
    with the smallest i.i.d. uniform priorities is a uniform choice without
    replacement.
    """
    _check_shape(state, dE_dtheta)
    noise = sched.noise_std * rng.normal(state.theta.shape)
    priority = rng.uniform(state.theta.shape)
    _backend.rewire_step(
        state.theta, state.sign, state.active,
        np.ascontiguousarray(dE_dtheta, dtype=np.float64), noise, priority,
        sched.eta, sched.reg_coeff, sched.eps1, sched.eps2,
        state.fanin_target, phase2)
    return state


def sparselut_step(state: ConnectionState, dE_dtheta: np.ndarray,
                   sched: RewiringSchedule, t: int, rng: RngStream) -> ConnectionState:
    """One full training-step iteration of the two-phase rewiring scheme.

    Applies the stochastic update, then per neuron repairs a deficit by
    regrowth or sheds a surplus (penalties before the phase boundary, exact
    cuts after). After any step with t >= phase_boundary every neuron holds
    exactly its target fan-in.
    """
    return _fused_step(state, dE_dtheta, sched, t >= sched.phase_boundary, rng)


def deepr_star_step(state: ConnectionState, dE_dtheta: np.ndarray,
                    sched: RewiringSchedule, rng: RngStream) -> ConnectionState:
    """Strict drop/regrow-matched baseline step.

    Starting from exactly the target fan-in, every connection dropped by a
    sign change is replaced by a uniformly chosen dormant one at eps1 within
    the same step, so the fan-in constraint holds after every step.
    """
    return _fused_step(state, dE_dtheta, sched, True, rng)


def extract_mask(state: ConnectionState) -> FeatureMask:
    """Binary mask of the positive thetas; valid only at the target fan-in."""
    counts = state.active_counts()
    if not np.all(counts == state.fanin_target):
        bad = int(np.argmax(counts != state.fanin_target))
        raise StateError(
            f"neuron {bad} has {int(counts[bad])} active connections, "
            f"expected {state.fanin_target}; run the fine-tuning phase first")
    return FeatureMask([(state.theta > 0.0).astype(np.uint8)])
