"""Pure-numpy implementations of the hot kernels.

This is the fallback backend; ``sparselut._fastcore`` (Cython) implements the
same two entry points. The float expressions and selection orders here are
the reference semantics: the compiled kernel must reproduce them bit for bit
(the parity test suite enforces this on random inputs).

Selection rule used throughout: "k smallest" means ascending by value with
ties broken by the lower row index, i.e. a stable sort on the value column.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def rewire_step(theta, sign, active, dtheta, noise, priority,
                eta, alpha, eps1, eps2, fanin, phase2):
    """One in-place rewiring step over a layer's connection parameters.

    theta, dtheta, noise, priority: float64 (n_in, n_out); sign is unused here
    (the caller already chain-ruled the gradient) but kept in the signature so
    both backends stay interchangeable. active: bool (n_in, n_out).

    Update order per output neuron (column): gradient/penalty/noise update of
    active entries, deactivation of non-positive theta, then one of
      deficit  -> activate the deficit-many dormant entries with the smallest
                  pre-drawn priority at theta = eps1,
      surplus  -> subtract eps2 from the surplus-many smallest active thetas
                  (phase 1) or zero them outright (phase 2).
    """
    upd = theta - eta * dtheta - eta * alpha + eta * noise
    theta[active] = upd[active]
    np.logical_and(active, theta > 0.0, out=active)

    counts = active.sum(axis=0)
    for j in np.nonzero(counts != fanin)[0]:
        r = int(counts[j]) - fanin
        col_active = active[:, j]
        if r < 0:
            dormant = np.nonzero(~col_active)[0]
            order = np.argsort(priority[dormant, j], kind="stable")
            grown = dormant[order[: -r]]
            theta[grown, j] = eps1
            col_active[grown] = True
        else:
            live = np.nonzero(col_active)[0]
            order = np.argsort(theta[live, j], kind="stable")
            low = live[order[:r]]
            if phase2:
                theta[low, j] = 0.0
                col_active[low] = False
            else:
                theta[low, j] -= eps2
                dead = low[theta[low, j] <= 0.0]
                col_active[dead] = False


def fill_table(in_levels, mono_a, mono_b, weights, bias,
               out_boundaries, beta_in, fan_in, out_codes):
    """Exhaustive neuron truth table over all 2**(beta_in*fan_in) input codes.

    in_levels: the 2**beta_in representable input values; mono_a/mono_b:
    per-monomial operand slots into the fan-in window (-1 = absent), constant
    term first; out_boundaries: interior decision boundaries of the output
    quantizer. Results are written into out_codes (uint32, one per row).

    Input field packing: the first (lowest mask index) input occupies the
    most significant beta_in bits of the row's input code.

    Accumulation is sequential over monomials then + bias, matching the
    scalar reference path so tables cannot drift between backends.
    """
    n_rows = out_codes.shape[0]
    level_mask = np.uint64((1 << beta_in) - 1)
    block = 1 << 18  # cap temporaries, tables can reach 2**24 rows

    for start in range(0, n_rows, block):
        stop = min(start + block, n_rows)
        codes = np.arange(start, stop, dtype=np.uint64)

        x = np.empty((stop - start, fan_in), dtype=np.float64)
        for f in range(fan_in):
            shift = np.uint64(beta_in * (fan_in - 1 - f))
            x[:, f] = in_levels[(codes >> shift) & level_mask]

        acc = np.zeros(stop - start, dtype=np.float64)
        for m in range(len(weights)):
            a, b = mono_a[m], mono_b[m]
            if a < 0:
                acc += weights[m]
            elif b < 0:
                acc += weights[m] * x[:, a]
            else:
                acc += weights[m] * (x[:, a] * x[:, b])
        acc += bias

        activated = np.minimum(np.maximum(acc, 0.0), 1.0)
        out_codes[start:stop] = np.searchsorted(
            out_boundaries, activated, side="right").astype(np.uint32)
