"""Compiled sum-product kernel shared by the block, windowed and genie decoders.

The graph is given check-centrically: ``chk_var[c, d]`` is the d-th variable
of check c (``-1`` if absent) and ``chk_llr[c]`` the channel LLR of the
observed parity bit attached to check c as a half-edge.  Variable posteriors
``post`` hold ``prior + sum of incoming check messages`` and are updated in
place, so consecutive calls (sliding windows) continue from the previous
state.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _clip(x, cap):
    if x > cap:
        return cap
    if x < -cap:
        return -cap
    return x


@njit(cache=True)
def check_sweeps(chk_var, chk_llr, c2v, post, c_lo, c_hi, v_lo, v_hi,
                 max_iter, threshold, cap):
    """Serial (check-by-check) sum-product sweeps over checks ``[c_lo, c_hi)``.

    Stops once the largest change of the cap-clipped posteriors of variables
    ``[v_lo, v_hi)`` over one sweep is below ``threshold``.  Returns
    ``(sweeps, converged)``.
    """
    D = chk_var.shape[1]
    tv = np.empty(D)
    fwd = np.empty(D + 1)
    snap = np.empty(max(v_hi - v_lo, 0))
    tmax = math.tanh(0.5 * cap)
    for it in range(max_iter):
        for v in range(v_lo, v_hi):
            snap[v - v_lo] = _clip(post[v], cap)
        for c in range(c_lo, c_hi):
            fwd[0] = math.tanh(0.5 * chk_llr[c])
            for d in range(D):
                v = chk_var[c, d]
                if v < 0:
                    tv[d] = 1.0
                else:
                    x = post[v] - c2v[c, d]
                    post[v] = x
                    tv[d] = math.tanh(0.5 * x)
                fwd[d + 1] = fwd[d] * tv[d]
            bwd = 1.0
            for d in range(D - 1, -1, -1):
                v = chk_var[c, d]
                if v >= 0:
                    p = fwd[d] * bwd
                    if p > tmax:
                        p = tmax
                    elif p < -tmax:
                        p = -tmax
                    msg = 2.0 * math.atanh(p)
                    c2v[c, d] = msg
                    post[v] += msg
                bwd *= tv[d]
        delta = 0.0
        for v in range(v_lo, v_hi):
            dv = abs(_clip(post[v], cap) - snap[v - v_lo])
            if dv > delta:
                delta = dv
        if delta < threshold:
            return it + 1, True
    return max_iter, False


@njit(cache=True)
def conv_parity(chk_var, u):
    """XOR of the message bits attached to each check (encoder over the same graph)."""
    C, D = chk_var.shape
    out = np.zeros(C, dtype=np.uint8)
    for c in range(C):
        acc = 0
        for d in range(D):
            v = chk_var[c, d]
            if v >= 0:
                acc ^= u[v]
        out[c] = acc
    return out
