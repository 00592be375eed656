"""Real polylogarithms of order 2 and 3 on the branches needed for
complete Fermi-Dirac and Bose-Einstein integrals.

Both families are written in terms of the log-fugacity ``eta``::

    fermi_dirac(s, eta)   = -Li_s(-exp(eta))     (any real eta)
    bose_einstein(s, eta) =  Li_s(exp(eta))      (eta < 0)

Working in ``eta`` avoids overflowing ``exp`` deep in the degenerate regime.
"""

import math
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli

__all__ = ["fermi_dirac", "bose_einstein"]

_LN2 = math.log(2.0)
_ZETA = {2: math.pi**2 / 6.0, 3: 1.2020569031595942}
_ETA = {1: _LN2, 2: math.pi**2 / 12.0, 3: 0.75 * _ZETA[3]}
_NTERMS = 40


@lru_cache(maxsize=None)
def _bernoulli_numbers():
    return bernoulli(_NTERMS + 4)


def _dirichlet_eta(n):
    if n >= 1:
        return _ETA[n]
    if n == 0:
        return 0.5
    m = -n
    return (2.0 ** (m + 1) - 1.0) * _bernoulli_numbers()[m + 1] / (m + 1)


def _zeta(n):
    if n >= 2:
        return _ZETA[n]
    if n == 0:
        return -0.5
    m = -n
    return -_bernoulli_numbers()[m + 1] / (m + 1)


@lru_cache(maxsize=None)
def _fermi_taylor(s):
    # -Li_s(-e^w) = sum_k eta(s - k) w^k / k!, radius pi
    return np.array([_dirichlet_eta(s - k) / math.factorial(k) for k in range(_NTERMS)])


@lru_cache(maxsize=None)
def _bose_taylor(s):
    # regular part of Li_s(e^w) around w = 0; the k = s-1 term is logarithmic
    c = [0.0 if k == s - 1 else _zeta(s - k) / math.factorial(k) for k in range(_NTERMS)]
    return np.array(c)


def _power_series(x, s):
    """sum_{k>=1} x^k / k^s for |x| <= 1/2."""
    total = 0.0
    term = x
    k = 1
    while True:
        inc = term / k**s
        total += inc
        if abs(inc) <= 1e-17 * abs(total) or k > 80:
            return total
        k += 1
        term *= x


def _horner(coeffs, w):
    acc = 0.0
    for c in coeffs[::-1]:
        acc = acc * w + c
    return acc


def fermi_dirac(s, eta):
    """Return ``-Li_s(-exp(eta))`` for ``s`` in {2, 3}."""
    if s not in (2, 3):
        raise ValueError(f"order s={s} not supported")
    eta = float(eta)
    if eta <= -_LN2:
        return -_power_series(-math.exp(eta), s)
    if eta < _LN2:
        return _horner(_fermi_taylor(s), eta)
    # inversion formulas map the degenerate side onto the small-fugacity series
    tail = -_power_series(-math.exp(-eta), s)
    if s == 2:
        return math.pi**2 / 6.0 + 0.5 * eta**2 - tail
    return eta**3 / 6.0 + math.pi**2 * eta / 6.0 + tail


def bose_einstein(s, eta):
    """Return ``Li_s(exp(eta))`` for ``s`` in {2, 3} and ``eta < 0``."""
    if s not in (2, 3):
        raise ValueError(f"order s={s} not supported")
    eta = float(eta)
    if not eta < 0.0:
        raise ValueError("Bose-Einstein integral requires eta < 0")
    if eta <= -_LN2:
        return _power_series(math.exp(eta), s)
    log_term = eta ** (s - 1) / math.factorial(s - 1)
    harmonic = sum(1.0 / k for k in range(1, s))
    return _horner(_bose_taylor(s), eta) + log_term * (harmonic - math.log(-eta))
