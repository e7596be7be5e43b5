# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the per-frame audio kernels.

Mirrors ``_reference.py``; see that module for the contract. Kept loop-for-loop
equivalent so the two backends agree to floating-point noise.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double _EPS = 1e-12


def frame_count(Py_ssize_t n_samples, Py_ssize_t frame_len, Py_ssize_t hop):
    if n_samples < frame_len:
        return 0
    return 1 + (n_samples - frame_len) // hop


def frame_rms(samples, Py_ssize_t frame_len, Py_ssize_t hop):
    """Root-mean-square energy of each complete frame."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(samples, dtype=np.float64)
    cdef Py_ssize_t n = frame_count(x.shape[0], frame_len, hop)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n)
    cdef Py_ssize_t i, t, start
    cdef double acc, v
    for i in range(n):
        start = i * hop
        acc = 0.0
        for t in range(frame_len):
            v = x[start + t]
            acc += v * v
        out[i] = (acc / frame_len) ** 0.5
    return out


def acf_pitch(samples, Py_ssize_t frame_len, Py_ssize_t hop,
              Py_ssize_t lag_min, Py_ssize_t lag_max, double peak_accept=0.9):
    """Fundamental-period search via normalized autocorrelation.

    Same algorithm as the reference: earliest local maximum within
    ``peak_accept`` of the best one, refined by parabolic interpolation.
    Returns ``(lags, clarity)`` arrays.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(samples, dtype=np.float64)
    if lag_min < 2:
        raise ValueError("lag_min must be >= 2")
    if lag_max + 2 > frame_len:
        raise ValueError("frame too short for requested lag range")
    cdef Py_ssize_t n_frames = frame_count(x.shape[0], frame_len, hop)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lags_out = np.zeros(n_frames)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] clarity_out = np.zeros(n_frames)
    if n_frames == 0:
        return lags_out, clarity_out

    cdef Py_ssize_t lo = lag_min - 1
    cdef Py_ssize_t hi = lag_max + 1
    cdef Py_ssize_t n_lags = hi - lo + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] corr = np.zeros(n_lags)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] energy = np.zeros(frame_len)
    cdef Py_ssize_t i, j, t, tau, start, chosen, first_ok, m, m4
    cdef double prod, p0, p1, p2, p3, e_head, e_tail, acc, best, a, b, c, denom, delta, refined
    cdef const double* xp = <const double*> cnp.PyArray_DATA(x)
    cdef const double* head
    cdef const double* tail

    for i in range(n_frames):
        start = i * hop
        acc = 0.0
        for t in range(frame_len):
            acc += x[start + t] * x[start + t]
            energy[t] = acc
        for j in range(n_lags):
            tau = lo + j
            head = xp + start
            tail = xp + start + tau
            m = frame_len - tau
            m4 = m - (m & 3)
            p0 = p1 = p2 = p3 = 0.0
            for t in range(0, m4, 4):
                p0 += head[t] * tail[t]
                p1 += head[t + 1] * tail[t + 1]
                p2 += head[t + 2] * tail[t + 2]
                p3 += head[t + 3] * tail[t + 3]
            prod = p0 + p1 + p2 + p3
            for t in range(m4, m):
                prod += head[t] * tail[t]
            e_head = energy[frame_len - tau - 1]
            e_tail = energy[frame_len - 1] - energy[tau - 1]
            corr[j] = prod / (e_head * e_tail + _EPS) ** 0.5

        best = 0.0
        for j in range(1, n_lags - 1):
            if corr[j] > corr[j - 1] and corr[j] >= corr[j + 1] and corr[j] > best:
                best = corr[j]
        if best <= 0.0:
            continue
        first_ok = 0
        for j in range(1, n_lags - 1):
            if corr[j] > corr[j - 1] and corr[j] >= corr[j + 1] and corr[j] >= peak_accept * best:
                first_ok = j
                break
        if first_ok == 0:
            continue
        chosen = first_ok
        a = corr[chosen - 1]
        b = corr[chosen]
        c = corr[chosen + 1]
        denom = a - 2.0 * b + c
        if denom >= -_EPS:
            delta = 0.0
            clarity_out[i] = b
        else:
            delta = (a - c) / (2.0 * denom)
            if delta > 0.5:
                delta = 0.5
            elif delta < -0.5:
                delta = -0.5
            clarity_out[i] = b - (a - c) * (a - c) / (8.0 * denom)
        refined = lo + chosen + delta
        if refined < lag_min:
            refined = lag_min
        elif refined > lag_max:
            refined = lag_max
        lags_out[i] = refined
    return lags_out, clarity_out
