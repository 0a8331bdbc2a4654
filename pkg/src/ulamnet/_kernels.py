"""Compiled inner loops (numba) for trajectory iteration and matrix assembly.

Everything here mirrors the pure-Python map definition in ``typical_map``
bit for bit: same expressions, same wrapping rules, no fastmath. Keep the
two in sync or the brute-force equivalence tests will catch you.
"""

from __future__ import annotations

import numpy as np
from numba import njit

TWO_PI = 2.0 * np.pi
PI = np.pi

# splitmix64 constants
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _cell_stream_state(seed, j):
    # decorrelated starting state per source cell
    return _mix64(np.uint64(seed) ^ _mix64((np.uint64(j) + np.uint64(1)) * _GOLDEN))


@njit(cache=True)
def _next_uniform(state):
    state = state + _GOLDEN
    z = _mix64(state)
    return (z >> np.uint64(11)) * (1.0 / 9007199254740992.0), state


@njit(cache=True, inline="always")
def _wrap_x(x):
    x = x % TWO_PI
    if x == TWO_PI:  # floor-mod can round up to the divisor
        x = 0.0
    return x


@njit(cache=True, inline="always")
def _wrap_y(y):
    if -PI <= y < PI:  # keep in-range values bit-exact
        return y
    y = (y + PI) % TWO_PI - PI
    if y == PI:
        y = -PI
    return y


@njit(cache=True)
def _one_period(x, y, theta, k, eta):
    for t in range(theta.shape[0]):
        y = eta * y + k * np.sin(x + theta[t])
        x = _wrap_x(x + y)
    return x, _wrap_y(y)


@njit(cache=True, inline="always")
def _bin_node(x, y, n_x, n_y):
    cx = int(x * n_x / TWO_PI)
    if cx >= n_x:
        cx = n_x - 1
    ry = int((y + PI) * n_y / TWO_PI)
    if ry >= n_y:
        ry = n_y - 1
    return n_y * cx + ry


@njit(cache=True)
def build_columns(n_x, n_y, theta, k, eta, n_c, seed, stratified, m):
    """Assemble the transition matrix in CSC order, one source cell at a time.

    Returns (indptr, indices, data) with row indices sorted within each
    column and data = count / n_c. Start points are either an m x m
    sub-cell-centered lattice (stratified) or n_c seeded uniform draws.
    """
    N = n_x * n_y
    w_x = TWO_PI / n_x
    w_y = TWO_PI / n_y

    indptr = np.empty(N + 1, dtype=np.int64)
    cap = 32 * N
    indices = np.empty(cap, dtype=np.int32)
    data = np.empty(cap, dtype=np.float64)
    counts = np.zeros(N, dtype=np.int32)
    touched = np.empty(min(n_c, N), dtype=np.int32)

    pos = 0
    for j in range(N):
        indptr[j] = pos
        cx = j // n_y
        ry = j % n_y
        x0 = cx * w_x
        y0 = -PI + ry * w_y

        n_touched = 0
        if stratified:
            for a in range(m):
                for b in range(m):
                    x = x0 + (a + 0.5) * w_x / m
                    y = y0 + (b + 0.5) * w_y / m
                    x, y = _one_period(x, y, theta, k, eta)
                    d = _bin_node(x, y, n_x, n_y)
                    if counts[d] == 0:
                        touched[n_touched] = d
                        n_touched += 1
                    counts[d] += 1
        else:
            state = _cell_stream_state(seed, j)
            for _ in range(n_c):
                u, state = _next_uniform(state)
                v, state = _next_uniform(state)
                x = x0 + u * w_x
                y = y0 + v * w_y
                x, y = _one_period(x, y, theta, k, eta)
                d = _bin_node(x, y, n_x, n_y)
                if counts[d] == 0:
                    touched[n_touched] = d
                    n_touched += 1
                counts[d] += 1

        if pos + n_touched > cap:
            cap = max(cap + cap // 2, pos + n_touched)
            new_indices = np.empty(cap, dtype=np.int32)
            new_indices[:pos] = indices[:pos]
            indices = new_indices
            new_data = np.empty(cap, dtype=np.float64)
            new_data[:pos] = data[:pos]
            data = new_data

        dests = np.sort(touched[:n_touched])
        for d in dests:
            indices[pos] = d
            data[pos] = counts[d] / n_c
            counts[d] = 0
            pos += 1

    indptr[N] = pos
    return indptr, indices[:pos].copy(), data[:pos].copy()


@njit(cache=True)
def lyapunov_sums(theta, k, eta, n_periods, n_transient_periods, x0, y0):
    """Tangent-map log-growth sums; renormalization every T steps.

    Returns (log_sum_total, log_sum_at_90pct, periods_at_90pct) over the
    post-transient stretch, so the caller can form the running estimate
    and its drift over the last 10%.
    """
    T = theta.shape[0]
    x = x0
    y = y0
    dx = 0.7071067811865476
    dy = 0.7071067811865476

    for _ in range(n_transient_periods):
        for t in range(T):
            c = k * np.cos(x + theta[t])
            y = eta * y + k * np.sin(x + theta[t])
            dy_new = eta * dy + c * dx
            dx = dx + dy_new
            dy = dy_new
            x = _wrap_x(x + y)
        y = _wrap_y(y)
        nrm = np.sqrt(dx * dx + dy * dy)
        dx /= nrm
        dy /= nrm

    mark = (9 * n_periods) // 10
    log_sum = 0.0
    log_sum_mark = 0.0
    for p in range(n_periods):
        for t in range(T):
            c = k * np.cos(x + theta[t])
            y = eta * y + k * np.sin(x + theta[t])
            dy_new = eta * dy + c * dx
            dx = dx + dy_new
            dy = dy_new
            x = _wrap_x(x + y)
        y = _wrap_y(y)
        nrm = np.sqrt(dx * dx + dy * dy)
        log_sum += np.log(nrm)
        dx /= nrm
        dy /= nrm
        if p + 1 == mark:
            log_sum_mark = log_sum

    return log_sum, log_sum_mark, mark


@njit(cache=True)
def record_window_y(x0s, y0s, theta, k, eta, start, stop):
    """y at each period boundary p with start < p <= stop, per trajectory."""
    n_traj = x0s.shape[0]
    out = np.empty((n_traj, stop - start), dtype=np.float64)
    for i in range(n_traj):
        x = x0s[i]
        y = y0s[i]
        for p in range(1, stop + 1):
            x, y = _one_period(x, y, theta, k, eta)
            if p > start:
                out[i, p - start - 1] = y
    return out
