"""Pure-Python event loops (fallback backend).

Every function takes a numpy Generator and consumes uniforms in a fixed
pattern (one inverse-transform draw for each holding time, one draw for
each selection), so trajectories are bit-identical to the compiled
backend given the same bit generator state.
"""

from __future__ import annotations

from math import log1p

import numpy as np

BACKEND = "python"


def _refresh_bond(b, eta, active, pos, na):
    """Keep the discrepant-bond set consistent after eta[b] or eta[b+1] changed."""
    if b < 0 or b >= len(eta) - 1:
        return na
    should = eta[b] != eta[b + 1]
    if should and pos[b] < 0:
        active[na] = b
        pos[b] = na
        return na + 1
    if not should and pos[b] >= 0:
        k = pos[b]
        last = active[na - 1]
        active[k] = last
        pos[last] = k
        pos[b] = -1
        return na - 1
    return na


def _kmc_loop(gen, eta, n_minus, n_plus, m_size, times, out_minus, out_plus,
              include_null):
    """Shared event loop; records (n_minus, n_plus) at each sample time.

    ``times`` must be sorted and non-empty; the loop stops once every
    sample has been recorded (the last sample time is the horizon).
    """
    n = len(eta)
    rnd = gen.random
    if include_null:
        na = n - 1
        active = pos = None
    else:
        active = [0] * (n - 1)
        pos = [-1] * (n - 1)
        na = 0
        for b in range(n - 1):
            if eta[b] != eta[b + 1]:
                active[na] = b
                pos[b] = na
                na += 1
    nt = len(times)
    t = 0.0
    j = 0
    while True:
        if eta[0]:
            c_left = 0.5 * (1.0 - n_minus / m_size)
        else:
            c_left = 0.5 * (n_minus / m_size)
        if eta[n - 1]:
            c_right = 0.5 * (1.0 - n_plus / m_size)
        else:
            c_right = 0.5 * (n_plus / m_size)
        total = 0.5 * na + c_left + c_right
        if total <= 0.0:
            break  # absorbing: the state holds forever
        dt = -log1p(-rnd()) / total
        t_next = t + dt
        while j < nt and times[j] < t_next:
            out_minus[j] = n_minus
            out_plus[j] = n_plus
            j += 1
        if j >= nt:
            break
        t = t_next
        v = rnd() * total
        if v < 0.5 * na:
            k = int(v * 2.0)
            if k >= na:
                k = na - 1
            b = k if include_null else active[k]
            if eta[b] != eta[b + 1]:
                eta[b], eta[b + 1] = eta[b + 1], eta[b]
                if not include_null:
                    na = _refresh_bond(b - 1, eta, active, pos, na)
                    na = _refresh_bond(b + 1, eta, active, pos, na)
        elif v < 0.5 * na + c_left:
            if eta[0]:
                eta[0] = 0
                n_minus += 1
            else:
                eta[0] = 1
                n_minus -= 1
            if not include_null:
                na = _refresh_bond(0, eta, active, pos, na)
        else:
            if eta[n - 1]:
                eta[n - 1] = 0
                n_plus += 1
            else:
                eta[n - 1] = 1
                n_plus -= 1
            if not include_null:
                na = _refresh_bond(n - 2, eta, active, pos, na)
    while j < nt:
        out_minus[j] = n_minus
        out_plus[j] = n_plus
        j += 1
    return n_minus, n_plus


def kmc_run(gen, eta, n_minus, n_plus, m_size, t_total, include_null=False):
    """Advance the configuration to time t_total; eta is modified in place."""
    times = np.array([t_total], dtype=np.float64)
    sink_m = np.empty(1, dtype=np.int64)
    sink_p = np.empty(1, dtype=np.int64)
    return _kmc_loop(gen, eta, n_minus, n_plus, m_size, times, sink_m, sink_p,
                     include_null)


def kmc_run_record(gen, eta, n_minus, n_plus, m_size, times, out_minus, out_plus,
                   include_null=False):
    """Advance to times[-1], recording reservoir counts at each sample time."""
    return _kmc_loop(gen, eta, n_minus, n_plus, m_size, times, out_minus, out_plus,
                     include_null)


def sticky_many(gen, x0, t, n_sites, m_size, runs, counts):
    """Run the sticky walk ``runs`` times to time t; histogram end positions.

    Interior sites jump left/right at rate 1/2 each; the endpoints 0 and
    N+1 escape inward at rate 1/(2M).
    """
    rnd = gen.random
    slow = 1.0 / (2.0 * m_size)
    top = n_sites + 1
    for _ in range(runs):
        x = x0
        clock = 0.0
        while True:
            rate = slow if (x == 0 or x == top) else 1.0
            dt = -log1p(-rnd()) / rate
            if clock + dt > t:
                break
            clock += dt
            if x == 0:
                x = 1
            elif x == top:
                x = n_sites
            else:
                x += -1 if rnd() < 0.5 else 1
        counts[x] += 1


def sticky_tc_many(gen, x0, t, n_sites, m_size, runs, counts):
    """Sticky walk realized by time-changing the reflected walk.

    The reflected walk holds everywhere at rate 1 (at an endpoint both
    half-rate attempts point inward); the sticky clock advances by dt at
    interior sites and by 2M dt at the endpoints.
    """
    rnd = gen.random
    factor = 2.0 * m_size
    top = n_sites + 1
    for _ in range(runs):
        x = x0
        clock = 0.0
        while True:
            dt = -log1p(-rnd())
            inc = dt * factor if (x == 0 or x == top) else dt
            if clock + inc > t:
                break
            clock += inc
            if x == 0:
                x = 1
            elif x == top:
                x = n_sites
            else:
                x += -1 if rnd() < 0.5 else 1
        counts[x] += 1


def first_hit_many(gen, x0, n_sites, runs, taus, sides):
    """Simple interior walk from x0 until it first hits 0 or N+1.

    Records the hitting time and side (0 = left, 1 = right) per run.
    """
    rnd = gen.random
    top = n_sites + 1
    for r in range(runs):
        x = x0
        tau = 0.0
        while 0 < x < top:
            tau += -log1p(-rnd())
            x += -1 if rnd() < 0.5 else 1
        taus[r] = tau
        sides[r] = 0 if x == 0 else 1
