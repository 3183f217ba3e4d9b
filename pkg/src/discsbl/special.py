"""Special functions needed by the solvers and the matrix generators."""

import math

import numpy as np

from .errors import InvalidArgument

# Bernoulli-number coefficients B_2k / (2k) of the digamma asymptotic series.
_DIGAMMA_ASYMP = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)

_J0_SERIES_LIMIT = 12.0


def digamma(x):
    """Digamma function psi(x) for x > 0.

    Shifts the argument upward with psi(x) = psi(x + 1) - 1/x until x >= 6,
    then sums the asymptotic expansion. Accepts scalars or arrays.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr <= 0):
        raise InvalidArgument("digamma is only defined here for x > 0")
    z = arr.copy()
    acc = np.zeros_like(z)
    small = z < 6.0
    while np.any(small):
        acc[small] -= 1.0 / z[small]
        z[small] += 1.0
        small = z < 6.0
    inv2 = 1.0 / (z * z)
    series = np.zeros_like(z)
    power = inv2.copy()
    for c in _DIGAMMA_ASYMP:
        series += c * power
        power = power * inv2
    out = acc + np.log(z) - 0.5 / z - series
    if np.ndim(x) == 0:
        return float(out)
    return out


def _j0_series(t):
    q = 0.25 * t * t
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= -q / (k * k)
        total += term
        if abs(term) < 1e-17 * max(1.0, abs(total)) and k > q:
            return total


def _j0_hankel(t):
    # a_k = prod_{j=1..k} (2j-1)^2 / (k! 8^k); P takes even k, Q odd k, both with
    # alternating signs (Q starts at -1/(8t)). Truncate at the smallest term.
    p = 0.0
    q = 0.0
    a = 1.0
    prev = math.inf
    for k in range(60):
        term = a / t**k
        if term > prev:
            break
        prev = term
        if k % 4 == 0:
            p += term
        elif k % 4 == 1:
            q -= term
        elif k % 4 == 2:
            p -= term
        else:
            q += term
        if term < 1e-17:
            break
        a *= (2 * k + 1) ** 2 / ((k + 1) * 8.0)
    chi = t - 0.25 * math.pi
    return math.sqrt(2.0 / (math.pi * t)) * (p * math.cos(chi) - q * math.sin(chi))


def bessel_j0(t):
    """Bessel function of the first kind, order zero, for real ``t``.

    Power series below |t| = 12, Hankel asymptotic expansion above.
    """
    t = float(t)
    if math.isnan(t):
        raise InvalidArgument("bessel_j0 got NaN")
    t = abs(t)
    if math.isinf(t):
        return 0.0
    if t < _J0_SERIES_LIMIT:
        return _j0_series(t)
    return _j0_hankel(t)
