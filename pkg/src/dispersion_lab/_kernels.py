"""Compiled inner loops for the Monte Carlo engines.

Every trial owns a SplitMix64 stream whose starting state is a hash of
``(seed, trial_index)``, so a trial's path does not depend on which thread or
chunk ran it.  Each walk step consumes exactly one 64-bit draw, split into two
32-bit uniforms (mixture choice, then increment), whatever the policy, which keeps runs with different
controllers but the same seed coupled step by step.
"""
import math

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_S32 = np.uint64(32)
_LO32 = np.uint64(0xFFFFFFFF)
_TWO_M53 = 1.0 / 9007199254740992.0
_TWO_M32 = 1.0 / 4294967296.0

MODE_CONSTANT = 0
MODE_HALF = 1
MODE_BAND = 2


@njit(cache=True, nogil=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, nogil=True)
def trial_state(seed, trial):
    return mix64(np.uint64(seed) ^ mix64(np.uint64(trial) * _GOLDEN + _GOLDEN))


@njit(cache=True, nogil=True)
def next_uniform(state):
    """Advance a SplitMix64 state; returns ``(state, u)`` with u in [0, 1)."""
    state = state + _GOLDEN
    return state, float(mix64(state) >> _S11) * _TWO_M53


@njit(cache=True, nogil=True)
def next_uniform_pair(state):
    """Two uniforms on [0, 1) with 32-bit resolution from one state advance."""
    state = state + _GOLDEN
    z = mix64(state)
    return state, float(z >> _S32) * _TWO_M32, float(z & _LO32) * _TWO_M32


def _ziggurat_tables():
    # 128-layer ziggurat for the standard normal (Marsaglia & Tsang, 2000)
    m1 = 2147483648.0
    dn = 3.442619855899
    tn = dn
    vn = 9.91256303526217e-3
    kn = np.zeros(128, dtype=np.int64)
    wn = np.zeros(128)
    fn = np.zeros(128)
    q = vn / math.exp(-0.5 * dn * dn)
    kn[0] = int((dn / q) * m1)
    kn[1] = 0
    wn[0] = q / m1
    wn[127] = dn / m1
    fn[0] = 1.0
    fn[127] = math.exp(-0.5 * dn * dn)
    for i in range(126, 0, -1):
        dn = math.sqrt(-2.0 * math.log(vn / dn + math.exp(-0.5 * dn * dn)))
        kn[i + 1] = int((dn / tn) * m1)
        tn = dn
        fn[i] = math.exp(-0.5 * dn * dn)
        wn[i] = dn / m1
    return kn, wn, fn


_ZIG_K, _ZIG_W, _ZIG_F = _ziggurat_tables()
_ZIG_R = 3.442619855899


@njit(cache=True, nogil=True)
def _zig_draw(state):
    state = state + _GOLDEN
    z = mix64(state)
    hz = np.int64(np.int32(z & _LO32))
    iz = np.int64((z >> _S32) & np.uint64(127))
    return state, hz, iz


@njit(cache=True, nogil=True)
def _zig_slow(state, hz, iz):
    while True:
        x = hz * _ZIG_W[iz]
        if iz == 0:
            while True:
                state, u1 = next_uniform(state)
                state, u2 = next_uniform(state)
                xt = -math.log(1.0 - u1) / _ZIG_R
                yt = -math.log(1.0 - u2)
                if yt + yt >= xt * xt:
                    break
            return state, (_ZIG_R + xt) if hz > 0 else -(_ZIG_R + xt)
        state, u = next_uniform(state)
        if _ZIG_F[iz] + u * (_ZIG_F[iz - 1] - _ZIG_F[iz]) < math.exp(-0.5 * x * x):
            return state, x
        state, hz, iz = _zig_draw(state)
        if abs(hz) < _ZIG_K[iz]:
            return state, hz * _ZIG_W[iz]


@njit(cache=True, nogil=True)
def next_normal(state):
    """One standard normal draw (ziggurat; layer index and abscissa use disjoint bits)."""
    state, hz, iz = _zig_draw(state)
    if abs(hz) < _ZIG_K[iz]:
        return state, hz * _ZIG_W[iz]
    return _zig_slow(state, hz, iz)


@njit(cache=True, nogil=True)
def alpha_delta(x, delta, beta):
    """Mixture weight on the high-variance law at band position ``x``."""
    if beta >= 1.0 - 1e-12:
        return 1.0 - x / delta
    t = 1.0 - x * (1.0 - beta) / delta
    a = (t * t - beta * beta) / (1.0 - beta * beta)
    if a < 0.0:
        return 0.0
    if a > 1.0:
        return 1.0
    return a


@njit(cache=True, nogil=True)
def bold_weight(mode, step, n, s, latched, p0, p1, p2, beta):
    """Probability of drawing from the bold (high-variance) law.

    ``step`` is the 0-based index of the channel use being decided and ``s``
    the running statistic before it.

    * constant: weight ``p0``
    * half: timid for the first ``n // 2`` uses, then bold iff the statistic
      latched after ``n // 2`` uses is ``<= p0``
    * band: bold at or below ``p0``, timid above ``p0 + p1``, and in between
      ``alpha_delta((s - p0) / p2, p1 / p2, beta)``
    """
    if mode == MODE_CONSTANT:
        return p0
    if mode == MODE_HALF:
        if step < n // 2:
            return 0.0
        return 1.0 if latched <= p0 else 0.0
    if s <= p0:
        return 1.0
    if s > p0 + p1:
        return 0.0
    return alpha_delta((s - p0) / p2, p1 / p2, beta)


@njit(cache=True, nogil=True)
def _draw(values, cdf, u):
    # branch-free count; supports here have a handful of atoms
    i = 0
    for j in range(values.shape[0] - 1):
        i += cdf[j] <= u
    return values[i]


@njit(cache=True, nogil=True)
def walk_chunk(out, first_trial, seed, n, start, vals0, cdf0, vals1, cdf1,
               mode, p0, p1, p2, beta):
    """Fill ``out[t]`` with the terminal value of trial ``first_trial + t``.

    Law 0 is the timid increment law, law 1 the bold one.
    """
    half = n // 2
    for t in range(out.shape[0]):
        state = trial_state(seed, first_trial + t)
        s = start
        latched = start
        for k in range(n):
            state, u_mix, u_inc = next_uniform_pair(state)
            w = bold_weight(mode, k, n, s, latched, p0, p1, p2, beta)
            if u_mix < w:
                s += _draw(vals1, cdf1, u_inc)
            else:
                s += _draw(vals0, cdf0, u_inc)
            if k + 1 == half:
                latched = s
        out[t] = s


@njit(cache=True, nogil=True)
def band_increments(out, seed, x, delta, beta, vals0, cdf0, vals1, cdf1):
    """Independent draws of the band mixture increment at fixed position ``x``."""
    a = alpha_delta(x, delta, beta)
    state = trial_state(seed, 0)
    for t in range(out.shape[0]):
        state, u_mix, u_inc = next_uniform_pair(state)
        if u_mix < a:
            out[t] = _draw(vals1, cdf1, u_inc)
        else:
            out[t] = _draw(vals0, cdf0, u_inc)


@njit(cache=True, nogil=True)
def sigma_eval(x, lower, upper, width):
    """``lower`` for x <= 0, ``upper`` beyond ``width``, linear in between.

    With ``width == 0`` this is the two-level field switching at 0.
    """
    if x <= 0.0:
        return lower
    if x >= width:
        return upper
    return lower + (upper - lower) * x / width


@njit(cache=True, nogil=True)
def euler_chunk(out, first_trial, seed, x0, steps, lower, upper, width):
    """Zero-drift Euler-Maruyama on [0, 1]; terminal values into ``out``."""
    h = math.sqrt(1.0 / steps)
    for t in range(out.shape[0]):
        state = trial_state(seed, first_trial + t)
        x = x0
        for _ in range(steps):
            state, g = next_normal(state)
            x += sigma_eval(x, lower, upper, width) * h * g
        out[t] = x


@njit(cache=True, nogil=True)
def normal_samples(out, seed):
    state = trial_state(seed, 0)
    for t in range(out.shape[0]):
        state, out[t] = next_normal(state)
