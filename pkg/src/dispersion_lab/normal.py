"""Standard normal CDF, PDF and quantile.

Thin wrappers over :mod:`scipy.special` so that every module goes through
one place; ``ndtri`` is accurate to a few ulp on (0, 1).
"""
import math

import numpy as np
from scipy import special

SQRT_2PI = math.sqrt(2.0 * math.pi)


def cdf(x):
    """Phi(x). Scalars in, floats out; arrays in, arrays out."""
    out = special.ndtr(x)
    return float(out) if np.ndim(out) == 0 else out


def sf(x):
    """1 - Phi(x), without cancellation for large x."""
    out = special.ndtr(-np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def pdf(x):
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / SQRT_2PI
    return float(out) if out.ndim == 0 else out


def ppf(p):
    """Phi^{-1}(p); returns -inf/inf at 0/1 and nan outside [0, 1]."""
    out = special.ndtri(p)
    return float(out) if np.ndim(out) == 0 else out
