"""
Special functions on the real line: Gamma, log-Gamma, sin(pi x) and the
modified Bessel function of the first kind I_nu with its scaled variant.

All functions are pure and scalar; domain violations raise DomainError.
"""

import math

from utils import DomainError, NumericalError

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
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
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# largest argument with a finite double Gamma value
GAMMA_MAX_ARG = 171.62
# e^z I_nu(z) overflows a double shortly above this
BESSEL_I_MAX_ARG = 700.0
# the asymptotic series of e^{-z} I_0 bottoms out near e^{-2z}; below z = 20 it misses double precision
_BESSEL_SERIES_MIN_CROSSOVER = 20.0


class OverflowRangeError(NumericalError):
    """Result does not fit in a double; use the scaled variant."""


def sinpi(x: float) -> float:
    """sin(pi x), exact at integers and half-integers."""
    r = math.fmod(x, 2.0)
    if r > 1.0:
        r -= 2.0
    elif r < -1.0:
        r += 2.0
    # r in [-1, 1]; fold onto [-1/2, 1/2]
    if r > 0.5:
        r = 1.0 - r
    elif r < -0.5:
        r = -1.0 - r
    if r == 0.0:
        return 0.0
    return math.sin(math.pi * r)


def _lanczos_sum(z: float) -> float:
    acc = _LANCZOS_COEFFS[0]
    for i, c in enumerate(_LANCZOS_COEFFS[1:], start=1):
        acc += c / (z + i)
    return acc


def gamma(x: float) -> float:
    """
    Gamma function for real x > 0.

    Lanczos approximation for x >= 1/2 and the reflection formula below.

    Raises:
        DomainError: if x <= 0
        OverflowRangeError: if x exceeds GAMMA_MAX_ARG
    """
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"gamma is evaluated on x > 0 only, got {x!r}")
    if x > GAMMA_MAX_ARG:
        raise OverflowRangeError(f"gamma({x}) overflows a double")
    if x < 0.5:
        return math.pi / (sinpi(x) * gamma(1.0 - x))

    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    # split the power so t**(z+1/2) never overflows before exp(-t) is applied
    half = t ** ((z + 0.5) / 2.0)
    return _SQRT_2PI * half * (half * math.exp(-t)) * _lanczos_sum(z)


def log_gamma(x: float) -> float:
    """log Gamma(x) for real x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"log_gamma is evaluated on x > 0 only, got {x!r}")
    if x < 0.5:
        return math.log(math.pi / sinpi(x)) - log_gamma(1.0 - x)
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (z + 0.5) * math.log(t) - t + math.log(_lanczos_sum(z))


def _check_bessel_args(nu: float, z: float) -> None:
    if nu < -0.5:
        raise DomainError(f"bessel_i needs nu >= -1/2, got {nu!r}")
    if z < 0.0 or math.isnan(z):
        raise DomainError(f"bessel_i needs z >= 0, got {z!r}")


def _series_crossover(nu: float) -> float:
    return max(_BESSEL_SERIES_MIN_CROSSOVER, 2.0 * nu * nu)


def _scaled_series(nu: float, z: float) -> float:
    # e^{-z} sum_k (z/2)^{2k+nu} / (k! Gamma(k+nu+1)); all terms positive
    term = math.exp(nu * math.log(z / 2.0) - log_gamma(nu + 1.0) - z)
    total = term
    quarter_z2 = 0.25 * z * z
    k = 0
    while True:
        k += 1
        term *= quarter_z2 / (k * (k + nu))
        total += term
        if term <= 1e-17 * total:
            return total


def _scaled_asymptotic(nu: float, z: float) -> float:
    # e^{-z} I_nu(z) ~ (2 pi z)^{-1/2} sum_k (-1)^k a_k(nu) / z^k
    mu = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        if abs(nxt) >= abs(term) or nxt == 0.0:
            break
        term = nxt
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return total / math.sqrt(2.0 * math.pi * z)


def bessel_ie(nu: float, z: float) -> float:
    """
    Exponentially scaled modified Bessel function e^{-z} I_nu(z).

    Ascending series for z <= max(20, 2 nu^2), asymptotic expansion above.
    """
    nu = float(nu)
    z = float(z)
    _check_bessel_args(nu, z)
    if z == 0.0:
        if nu == 0.0:
            return 1.0
        return math.inf if nu < 0.0 else 0.0
    if z <= _series_crossover(nu):
        return _scaled_series(nu, z)
    return _scaled_asymptotic(nu, z)


def bessel_i(nu: float, z: float) -> float:
    """
    Modified Bessel function of the first kind I_nu(z), nu >= -1/2, z >= 0.

    Raises:
        DomainError: outside the preconditions
        OverflowRangeError: for z > BESSEL_I_MAX_ARG (use bessel_ie)
    """
    _check_bessel_args(float(nu), float(z))
    if z > BESSEL_I_MAX_ARG:
        raise OverflowRangeError(f"bessel_i({nu}, {z}) overflows; use bessel_ie")
    if z == 0.0:
        return bessel_ie(nu, z)
    return math.exp(z) * bessel_ie(nu, z)
