import numpy as np
import pytest

from sparselut.errors import StateError
from sparselut.numerics import RngStream
from sparselut.rewiring import (
    ConnectionState,
    FeatureMask,
    RewiringSchedule,
    apply_stochastic_update,
    deepr_star_step,
    effective_weights,
    extract_mask,
    hard_deactivate,
    init_connection_state,
    init_random_mask,
    penalize,
    regrow,
    residual,
    sparselut_step,
)


def make_state(theta_col, fanin_target, sign_col=None):
    """Single-neuron state from an explicit theta column."""
    theta = np.asarray(theta_col, dtype=np.float64).reshape(-1, 1)
    sign = (np.asarray(sign_col, dtype=np.float64).reshape(-1, 1)
            if sign_col is not None else np.ones_like(theta))
    return ConnectionState(theta=theta.copy(), sign=sign,
                           active=theta > 0.0, fanin_target=fanin_target,
                           fanin_init=int((theta > 0).sum()))


def sched(**kw):
    defaults = dict(total_steps=100, phase_boundary=50, eps1=1e-12, eps2=5e-5,
                    noise_std=0.0, reg_coeff=0.0, eta=1.0)
    defaults.update(kw)
    return RewiringSchedule(**defaults)


class TestInitRandomMask:
    def test_forced_all_ones(self):
        m = init_random_mask(4, 1, 4, RngStream(0)).layers[0]
        assert np.array_equal(m, np.ones((4, 1), dtype=np.uint8))

    def test_column_sums(self):
        m = init_random_mask(784, 256, 6, RngStream(1)).layers[0]
        assert m.shape == (784, 256)
        assert np.all(m.sum(axis=0) == 6)

    def test_fanin_too_large(self):
        with pytest.raises(ValueError):
            init_random_mask(3, 2, 5, RngStream(0))

    def test_distribution_is_not_degenerate(self):
        m = init_random_mask(50, 400, 3, RngStream(2)).layers[0]
        rows = m.sum(axis=1)
        assert rows.min() > 0  # every input used somewhere at this density


class TestInitConnectionState:
    def test_masked_entries_inactive_with_zero_weight(self):
        s = init_connection_state(10, 4, 3, RngStream(3))
        w = effective_weights(s)
        assert np.all(s.theta[~s.active] == 0.0)
        assert np.all(w[~s.active] == 0.0)
        assert np.all(s.active.sum(axis=0) == 3)

    def test_effective_weight_formula(self):
        s = init_connection_state(6, 6, 6, RngStream(4))
        w = effective_weights(s)
        kept = s.theta > 0
        assert np.allclose(w[kept], (s.theta * s.sign)[kept])
        assert set(np.unique(s.sign)) == {-1.0, 1.0}

    def test_dense_start_fully_active(self):
        s = init_connection_state(20, 5, 20, RngStream(5))
        assert s.active.all()


class TestEffectiveWeights:
    def test_all_nonpositive_theta(self):
        s = make_state([0.0, -0.5, 0.0], fanin_target=1)
        s.active[:] = False
        assert np.array_equal(effective_weights(s), np.zeros((3, 1)))

    def test_sign_application(self):
        s = make_state([0.3, 0.3], 2, sign_col=[1.0, -1.0])
        w = effective_weights(s)
        assert w[0, 0] == 0.3 and w[1, 0] == -0.3

    def test_nonzero_count_equals_active_count(self):
        s = init_connection_state(30, 7, 4, RngStream(6))
        assert np.count_nonzero(effective_weights(s)) == s.active.sum()


class TestApplyStochasticUpdate:
    def test_noop_with_zero_everything(self):
        s = make_state([0.5, 0.2], 2)
        before = s.theta.copy()
        apply_stochastic_update(s, np.zeros((2, 1)), sched(), RngStream(0))
        assert np.array_equal(s.theta, before)
        assert s.active.all()

    def test_sign_flip_deactivates(self):
        s = make_state([0.01], 1)
        apply_stochastic_update(s, np.array([[0.02]]), sched(), RngStream(0))
        assert s.theta[0, 0] == pytest.approx(-0.01)
        assert not s.active[0, 0]

    def test_inactive_untouched(self):
        s = make_state([0.5, 0.0], 2)
        apply_stochastic_update(s, np.full((2, 1), 7.0), sched(), RngStream(0))
        assert s.theta[1, 0] == 0.0
        assert not s.active[1, 0]

    def test_shape_mismatch(self):
        s = make_state([0.5], 1)
        with pytest.raises(ValueError):
            apply_stochastic_update(s, np.zeros((2, 2)), sched(), RngStream(0))


class TestResidual:
    def test_deficit(self):
        assert residual(make_state([0.4, 0.0, 0.0], 2), 0) == -1

    def test_surplus(self):
        assert residual(make_state([0.4, 0.2, 0.1], 2), 0) == 1

    def test_exact(self):
        assert residual(make_state([0.4, 0.2], 2), 0) == 0


class TestRegrow:
    def test_zero_is_noop(self):
        s = make_state([0.4, 0.0], 1)
        before = s.theta.copy()
        regrow(s, 0, 0, 1e-12, RngStream(0))
        assert np.array_equal(s.theta, before)

    def test_regrows_at_eps1(self):
        s = make_state([0.4, 0.0, 0.0], 2)
        regrow(s, 0, 1, 1e-12, RngStream(0))
        assert s.active[:, 0].sum() == 2
        grown = (s.theta[:, 0] == 1e-12)
        assert grown.sum() == 1

    def test_regrown_participates_in_next_update(self):
        s = make_state([0.4, 0.0, 0.0], 2)
        regrow(s, 0, 1, 0.5, RngStream(0))
        grown = int(np.nonzero(s.theta[:, 0] == 0.5)[0][0])
        g = np.zeros((3, 1)); g[grown] = -1.0
        apply_stochastic_update(s, g, sched(), RngStream(1))
        assert s.theta[grown, 0] == pytest.approx(1.5)

    def test_over_regrow_is_state_error(self):
        s = make_state([0.4, 0.0], 1)
        with pytest.raises(StateError):
            regrow(s, 0, 2, 1e-12, RngStream(0))


class TestPenalize:
    def test_lowest_gets_penalty_and_survives(self):
        s = make_state([0.5, 0.3, 0.01], 2)
        penalize(s, 0, 1, 5e-5)
        assert s.theta[2, 0] == pytest.approx(0.01 - 5e-5)
        assert s.active[2, 0]
        assert s.theta[0, 0] == 0.5 and s.theta[1, 0] == 0.3

    def test_crossing_zero_deactivates(self):
        eps2 = 5e-5
        s = make_state([0.5, 0.3, eps2 / 2], 2)
        penalize(s, 0, 1, eps2)
        assert s.theta[2, 0] < 0.0
        assert not s.active[2, 0]

    def test_zero_k_noop(self):
        s = make_state([0.5, 0.3], 2)
        before = s.theta.copy()
        penalize(s, 0, 0, 5e-5)
        assert np.array_equal(s.theta, before)


class TestHardDeactivate:
    def test_smallest_removed(self):
        s = make_state([0.5, 0.3, 0.01], 2)
        hard_deactivate(s, 0, 1)
        assert s.theta[2, 0] == 0.0
        assert not s.active[2, 0]
        assert s.active[0, 0] and s.active[1, 0]

    def test_already_at_target_untouched(self):
        s = make_state([0.5, 0.3], 2)
        before = s.theta.copy()
        hard_deactivate(s, 0, 0)
        assert np.array_equal(s.theta, before)

    def test_tie_breaks_by_lowest_index(self):
        s = make_state([0.3, 0.3, 0.3], 2)
        hard_deactivate(s, 0, 1)
        assert int(s.active[:, 0].sum()) == 2  # exactly one removed
        assert not s.active[0, 0]              # the lowest flat index


def reference_sparselut_step(state, dtheta, sc, t, rng):
    """Spec-shaped reference: literal update then per-neuron branch logic.

    Draws the same (noise, priority) matrices as the fused kernel and then
    applies plain-python selection, so it is an independent check of the
    kernel's composition semantics.
    """
    noise = sc.noise_std * rng.normal(state.theta.shape)
    priority = rng.uniform(state.theta.shape)
    theta, active = state.theta, state.active
    n_in, n_out = theta.shape
    for j in range(n_out):
        for i in range(n_in):
            if active[i, j]:
                theta[i, j] = (theta[i, j] - sc.eta * dtheta[i, j]
                               - sc.eta * sc.reg_coeff + sc.eta * noise[i, j])
                if not theta[i, j] > 0.0:
                    active[i, j] = False
    for j in range(n_out):
        r = int(active[:, j].sum()) - state.fanin_target
        if r < 0:
            cand = sorted(i for i in range(n_in) if not active[i, j])
            cand.sort(key=lambda i: (priority[i, j], i))
            for i in cand[:-r]:
                theta[i, j] = sc.eps1
                active[i, j] = True
        elif r > 0:
            live = [i for i in range(n_in) if active[i, j]]
            live.sort(key=lambda i: (theta[i, j], i))
            for i in live[:r]:
                if t >= sc.phase_boundary:
                    theta[i, j] = 0.0
                    active[i, j] = False
                else:
                    theta[i, j] -= sc.eps2
                    if theta[i, j] <= 0.0:
                        active[i, j] = False
    return state


class TestSparselutStep:
    def test_matches_reference_composition(self):
        rng = RngStream(9)
        for trial in range(10):
            n_in, n_out, f = [(12, 5, 3), (30, 8, 6), (7, 7, 2)][trial % 3]
            s1 = init_connection_state(n_in, n_out, n_in, rng.child(trial, 0),
                                       fanin_target=f)
            s2 = ConnectionState(s1.theta.copy(), s1.sign.copy(),
                                 s1.active.copy(), f, n_in)
            sc = sched(total_steps=40, phase_boundary=20, noise_std=1e-3,
                       reg_coeff=1e-3, eta=0.1, eps2=5e-3)
            for t in range(40):
                g = rng.child(trial, 1, t).normal((n_in, n_out))
                sparselut_step(s1, g, sc, t, rng.child(trial, 2, t))
                reference_sparselut_step(s2, g, sc, t, rng.child(trial, 2, t))
                assert np.array_equal(s1.theta, s2.theta), f"trial {trial} step {t}"
                assert np.array_equal(s1.active, s2.active)

    def test_phase2_exact_fanin(self):
        rng = RngStream(10)
        s = init_connection_state(20, 6, 20, rng, fanin_target=4)
        sc = sched(total_steps=30, phase_boundary=10, noise_std=1e-2,
                   reg_coeff=1e-3, eta=0.1)
        for t in range(30):
            sparselut_step(s, rng.normal((20, 6)), sc, t, rng)
            if t >= sc.phase_boundary:
                assert np.all(s.active_counts() == 4), f"step {t}"

    def test_phase1_never_below_target(self):
        rng = RngStream(11)
        s = init_connection_state(15, 5, 15, rng, fanin_target=3)
        sc = sched(total_steps=50, phase_boundary=50, noise_std=0.05, eta=0.5)
        for t in range(49):
            sparselut_step(s, rng.normal((15, 5)), sc, t, rng)
            assert np.all(s.active_counts() >= 3)

    def test_monotone_pressure_with_zero_gradient(self):
        rng = RngStream(12)
        s = init_connection_state(10, 4, 10, rng, fanin_target=2)
        sc = sched(total_steps=200, phase_boundary=200, noise_std=0.0,
                   reg_coeff=0.0, eta=1.0, eps2=0.05)
        zero = np.zeros((10, 4))
        counts = [int(s.active.sum())]
        for t in range(150):
            sparselut_step(s, zero, sc, t, rng)
            counts.append(int(s.active.sum()))
        assert all(a >= b for a, b in zip(counts, counts[1:]))
        assert counts[-1] < counts[0]  # penalties do eventually bite

    def test_sign_immutable_and_coherence(self):
        rng = RngStream(13)
        s = init_connection_state(25, 8, 25, rng, fanin_target=5)
        sign0 = s.sign.copy()
        sc = sched(total_steps=60, phase_boundary=30, noise_std=1e-2, eta=0.2)
        for t in range(60):
            sparselut_step(s, rng.normal((25, 8)), sc, t, rng)
            assert np.array_equal(s.sign, sign0)
            assert np.array_equal(s.active, s.theta > 0.0)


class TestExtractMask:
    def trained_state(self):
        rng = RngStream(14)
        s = init_connection_state(16, 4, 16, rng, fanin_target=3)
        sc = sched(total_steps=20, phase_boundary=10, noise_std=1e-2, eta=0.2)
        for t in range(20):
            sparselut_step(s, rng.normal((16, 4)), sc, t, rng)
        return s

    def test_column_sums_and_mapping(self):
        s = self.trained_state()
        m = extract_mask(s).layers[0]
        assert np.all(m.sum(axis=0) == 3)
        assert np.array_equal(m.astype(bool), s.theta > 0.0)

    def test_wrong_count_is_state_error(self):
        s = init_connection_state(10, 3, 10, RngStream(15), fanin_target=4)
        with pytest.raises(StateError):
            extract_mask(s)


class TestDeepRStar:
    def test_no_flips_no_rewiring(self):
        s = init_connection_state(12, 4, 3, RngStream(16))
        before = s.active.copy()
        deepr_star_step(s, np.zeros((12, 4)), sched(noise_std=0.0), RngStream(17))
        assert np.array_equal(s.active, before)

    def test_flips_matched_by_regrowths(self):
        s = make_state([0.01, 0.02, 0.5, 0.0, 0.0], 3)
        s.fanin_target = 3
        g = np.array([[1.0], [1.0], [0.0], [0.0], [0.0]])  # kills the two small
        deepr_star_step(s, g, sched(eta=1.0), RngStream(18))
        col = s.active[:, 0]
        assert int(col.sum()) == 3
        assert col[2]
        assert (s.theta[:, 0] == 1e-12).sum() == 2  # two fresh regrowths

    def test_fanin_exact_at_every_step(self):
        rng = RngStream(19)
        s = init_connection_state(40, 10, 5, rng)
        sc = sched(total_steps=1000, phase_boundary=1000, noise_std=0.05, eta=0.3)
        for _ in range(1000):
            deepr_star_step(s, rng.normal((40, 10)), sc, rng)
            assert np.all(s.active_counts() == 5)


class TestFeatureMask:
    def test_equality(self):
        a = init_random_mask(10, 4, 2, RngStream(20))
        b = FeatureMask([a.layers[0].copy()])
        assert a == b
        b.layers[0][0, 0] ^= 1
        assert a != b

    def test_input_indices_sorted(self):
        m = init_random_mask(30, 9, 4, RngStream(21))
        idx = m.input_indices(0)
        assert idx.shape == (9, 4)
        assert np.all(np.diff(idx, axis=1) > 0)
