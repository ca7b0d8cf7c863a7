"""Compiled event loops (see _core_py for the reference implementation).

Draw-for-draw identical to the Python backend: both consume one
inverse-transform uniform per holding time and one per selection from
the same bit generator, so the two produce bit-identical trajectories.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport log1p
from numpy.random cimport bitgen_t

import numpy as np

BACKEND = "compiled"

cdef const char *_CAPSULE = "BitGenerator"


cdef bitgen_t *_bitgen(object generator) except NULL:
    capsule = generator.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, _CAPSULE):
        raise ValueError("expected a numpy Generator backed by a BitGenerator")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, _CAPSULE)


cdef inline long _refresh(long b, unsigned char[::1] eta, long[::1] active,
                          long[::1] pos, long na, Py_ssize_t n) noexcept nogil:
    cdef long k, last
    if b < 0 or b >= n - 1:
        return na
    if eta[b] != eta[b + 1]:
        if pos[b] < 0:
            active[na] = b
            pos[b] = na
            na += 1
    elif pos[b] >= 0:
        k = pos[b]
        last = active[na - 1]
        active[k] = last
        pos[last] = k
        pos[b] = -1
        na -= 1
    return na


cdef void _loop(bitgen_t *rng, unsigned char[::1] eta, long[::1] active,
                long[::1] pos, long n_minus, long n_plus, double m,
                double[::1] times, long[::1] out_minus, long[::1] out_plus,
                bint include_null, long *res_minus, long *res_plus) noexcept nogil:
    cdef Py_ssize_t n = eta.shape[0]
    cdef Py_ssize_t nt = times.shape[0]
    cdef Py_ssize_t j = 0, i
    cdef long na = 0, b, k
    cdef double c_left, c_right, total, dt, t_next, v
    cdef double t = 0.0
    cdef unsigned char tmp
    if include_null:
        na = n - 1
    else:
        for i in range(n - 1):
            pos[i] = -1
        for i in range(n - 1):
            if eta[i] != eta[i + 1]:
                active[na] = i
                pos[i] = na
                na += 1
    while True:
        if eta[0]:
            c_left = 0.5 * (1.0 - n_minus / m)
        else:
            c_left = 0.5 * (n_minus / m)
        if eta[n - 1]:
            c_right = 0.5 * (1.0 - n_plus / m)
        else:
            c_right = 0.5 * (n_plus / m)
        total = 0.5 * na + c_left + c_right
        if total <= 0.0:
            break  # absorbing: the state holds forever
        dt = -log1p(-rng.next_double(rng.state)) / total
        t_next = t + dt
        while j < nt and times[j] < t_next:
            out_minus[j] = n_minus
            out_plus[j] = n_plus
            j += 1
        if j >= nt:
            break
        t = t_next
        v = rng.next_double(rng.state) * total
        if v < 0.5 * na:
            k = <long>(v * 2.0)
            if k >= na:
                k = na - 1
            b = k if include_null else active[k]
            if eta[b] != eta[b + 1]:
                tmp = eta[b]
                eta[b] = eta[b + 1]
                eta[b + 1] = tmp
                if not include_null:
                    na = _refresh(b - 1, eta, active, pos, na, n)
                    na = _refresh(b + 1, eta, active, pos, na, n)
        elif v < 0.5 * na + c_left:
            if eta[0]:
                eta[0] = 0
                n_minus += 1
            else:
                eta[0] = 1
                n_minus -= 1
            if not include_null:
                na = _refresh(0, eta, active, pos, na, n)
        else:
            if eta[n - 1]:
                eta[n - 1] = 0
                n_plus += 1
            else:
                eta[n - 1] = 1
                n_plus -= 1
            if not include_null:
                na = _refresh(n - 2, eta, active, pos, na, n)
    while j < nt:
        out_minus[j] = n_minus
        out_plus[j] = n_plus
        j += 1
    res_minus[0] = n_minus
    res_plus[0] = n_plus


def kmc_run(object generator, unsigned char[::1] eta, long n_minus, long n_plus,
            long m_size, double t_total, bint include_null=False):
    """Advance the configuration to time t_total; eta is modified in place."""
    cdef bitgen_t *rng = _bitgen(generator)
    cdef Py_ssize_t nb = max(1, eta.shape[0] - 1)
    cdef double[::1] times = np.array([t_total], dtype=np.float64)
    cdef long[::1] sink_m = np.empty(1, dtype=np.int64)
    cdef long[::1] sink_p = np.empty(1, dtype=np.int64)
    cdef long[::1] active = np.empty(nb, dtype=np.int64)
    cdef long[::1] pos = np.empty(nb, dtype=np.int64)
    cdef long res_m = 0, res_p = 0
    with nogil:
        _loop(rng, eta, active, pos, n_minus, n_plus, <double>m_size, times,
              sink_m, sink_p, include_null, &res_m, &res_p)
    return res_m, res_p


def kmc_run_record(object generator, unsigned char[::1] eta, long n_minus,
                   long n_plus, long m_size, double[::1] times,
                   long[::1] out_minus, long[::1] out_plus,
                   bint include_null=False):
    """Advance to times[-1], recording reservoir counts at each sample time."""
    cdef bitgen_t *rng = _bitgen(generator)
    cdef Py_ssize_t nb = max(1, eta.shape[0] - 1)
    cdef long[::1] active = np.empty(nb, dtype=np.int64)
    cdef long[::1] pos = np.empty(nb, dtype=np.int64)
    cdef long res_m = 0, res_p = 0
    with nogil:
        _loop(rng, eta, active, pos, n_minus, n_plus, <double>m_size, times,
              out_minus, out_plus, include_null, &res_m, &res_p)
    return res_m, res_p


def sticky_many(object generator, long x0, double t, long n_sites, long m_size,
                long runs, long[::1] counts):
    """Run the sticky walk ``runs`` times to time t; histogram end positions."""
    cdef bitgen_t *rng = _bitgen(generator)
    cdef double slow = 1.0 / (2.0 * m_size)
    cdef long top = n_sites + 1
    cdef long x, r
    cdef double clock, dt, rate
    with nogil:
        for r in range(runs):
            x = x0
            clock = 0.0
            while True:
                rate = slow if (x == 0 or x == top) else 1.0
                dt = -log1p(-rng.next_double(rng.state)) / rate
                if clock + dt > t:
                    break
                clock += dt
                if x == 0:
                    x = 1
                elif x == top:
                    x = n_sites
                else:
                    x += -1 if rng.next_double(rng.state) < 0.5 else 1
            counts[x] += 1


def sticky_tc_many(object generator, long x0, double t, long n_sites, long m_size,
                   long runs, long[::1] counts):
    """Sticky walk realized by time-changing the reflected walk."""
    cdef bitgen_t *rng = _bitgen(generator)
    cdef double factor = 2.0 * m_size
    cdef long top = n_sites + 1
    cdef long x, r
    cdef double clock, dt, inc
    with nogil:
        for r in range(runs):
            x = x0
            clock = 0.0
            while True:
                dt = -log1p(-rng.next_double(rng.state))
                inc = dt * factor if (x == 0 or x == top) else dt
                if clock + inc > t:
                    break
                clock += inc
                if x == 0:
                    x = 1
                elif x == top:
                    x = n_sites
                else:
                    x += -1 if rng.next_double(rng.state) < 0.5 else 1
            counts[x] += 1


def first_hit_many(object generator, long x0, long n_sites, long runs,
                   double[::1] taus, unsigned char[::1] sides):
    """Simple interior walk from x0 until it first hits 0 or N+1."""
    cdef bitgen_t *rng = _bitgen(generator)
    cdef long top = n_sites + 1
    cdef long x, r
    cdef double tau
    with nogil:
        for r in range(runs):
            x = x0
            tau = 0.0
            while 0 < x < top:
                tau += -log1p(-rng.next_double(rng.state))
                x += -1 if rng.next_double(rng.state) < 0.5 else 1
            taus[r] = tau
            sides[r] = 0 if x == 0 else 1
