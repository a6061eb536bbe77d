"""Scalar special functions: complex log-gamma, Stirling numbers, falling factorials."""
import cmath
import math
from functools import lru_cache

from .errors import PoleError

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)


def log_gamma(z):
    """Complex log-gamma, continuous in the cut plane.

    Lanczos series for ``Re z >= 0.5`` and the reflection formula otherwise.
    ``exp(log_gamma(z)) == gamma(z)``; the imaginary part is only defined
    modulo ``2*pi`` on the reflected half plane.
    """
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        raise PoleError(f"log_gamma has a pole at z = {z.real:g}")
    if z.real < 0.5:
        # Gamma(z) Gamma(1 - z) = pi / sin(pi z)
        return _LOG_PI - _log_sin_pi(z) - log_gamma(1.0 - z)
    z -= 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_TWO_PI + (z + 0.5) * cmath.log(t) - t + cmath.log(acc)


def _log_sin_pi(z):
    # sin(pi z) overflows for large |Im z|; factor out the growing exponential.
    x, y = z.real, z.imag
    if abs(y) < 20.0:
        return cmath.log(cmath.sin(math.pi * z))
    # sin(pi z) = (e^{i pi z} - e^{-i pi z}) / 2i; keep the dominant term
    s = 1.0 if y > 0 else -1.0
    w = complex(x, y)
    dominant = -s * 1j * math.pi * w  # exponent of the large term
    ratio = cmath.exp(2j * s * math.pi * w)  # small term / large term
    return dominant + cmath.log((1.0 - ratio) / (-2j * s))


def gamma_ratio(num, den):
    """Return prod(Gamma(num)) / prod(Gamma(den)) via log-gamma sums."""
    total = sum(log_gamma(z) for z in num) - sum(log_gamma(z) for z in den)
    return cmath.exp(total)


@lru_cache(maxsize=None)
def stirling2(m, j):
    """Stirling number of the second kind S(m, j), as an exact integer."""
    if m < 0 or j < 0:
        raise ValueError("stirling2 needs nonnegative arguments")
    if m > 64 or j > 64:
        raise OverflowError("stirling2 is limited to m, j <= 64")
    if m == 0 and j == 0:
        return 1
    if m == 0 or j == 0 or j > m:
        return 0
    return j * stirling2(m - 1, j) + stirling2(m - 1, j - 1)


def falling_factorial(x, n):
    """x (x - 1) ... (x - n + 1), with the empty product equal to 1."""
    if n < 0:
        raise ValueError("falling_factorial needs n >= 0")
    if n > 64:
        raise OverflowError("falling_factorial is limited to n <= 64")
    out = 1
    for i in range(n):
        out *= x - i
    return out
