"""Exact steady photon-number distribution of the engineered master equation.

The populations obey a birth-death chain whose only non-thermal links are
``l -> l+1`` (selective absorption) and ``m+1 -> m`` (selective emission),
so the stationary distribution is geometric with ratio
``R = (eps + nbar) / (1 + nbar)`` on three branches, rescaled by
``A_l`` above ``l`` and by ``B_lm`` above ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .reservoir import EngineeredRates

TRUNCATION_MAX = 0.05
AMPLIFICATION_MIN = 20.0
TAIL_TOL = 1e-8


@dataclass(frozen=True)
class AnalyticSolution:
    R: float
    A_l: float
    B_lm: float
    rho0: float
    m: int
    l: int

    def branch_factor(self, n):
        n = np.asarray(n)
        return np.where(n <= self.l, 1.0, np.where(n <= self.m, self.A_l, self.B_lm))

    def populations(self, n):
        """Steady occupation of Fock level(s) ``n``."""
        n = np.asarray(n)
        return self.rho0 * self.branch_factor(n) * self.R ** n

    def tail_mass(self, n_max: int) -> float:
        """Exact population above ``n_max`` (closed-form geometric sums)."""
        R = self.R
        if R == 0:
            return 0.0
        start = n_max + 1
        total = 0.0
        segments = ((0, self.l, 1.0), (self.l + 1, self.m, self.A_l), (self.m + 1, None, self.B_lm))
        for lo, hi, factor in segments:
            lo = max(lo, start)
            if hi is not None and lo > hi:
                continue
            upper = 0.0 if hi is None else R ** (hi + 1)
            total += factor * (R ** lo - upper) / (1 - R)
        return float(self.rho0 * total)

    def mean_photon_number(self) -> float:
        n = np.arange(auto_truncation_from_solution(self, 1e-17) + 1)
        return float(np.sum(n * self.populations(n)))


def analytic_populations(rates: EngineeredRates) -> AnalyticSolution:
    """Closed-form stationary distribution (valid for every ``l < m``, Fock case included)."""
    if rates.l >= rates.m:
        raise ValueError(f"need l < m, got l={rates.l}, m={rates.m}")
    eps, nbar, gamma = rates.epsilon, rates.nbar, rates.gamma
    l, m = rates.l, rates.m
    R = (eps + nbar) / (1 + nbar)
    up = (l + 1) * (eps + nbar) * gamma
    if up == 0:
        # R = 0: only the vacuum is populated unless the pump starts from it.
        if rates.gamma_l > 0 and l == 0:
            raise ValueError("eps = nbar = 0 with a vacuum pump (l = 0) is outside the "
                             "three-branch formula")
        A = 1.0
    else:
        A = (rates.gamma_l + up) / up
    down = (m + 1) * (1 + nbar) * gamma
    B = down / (rates.gamma_m + down) * A
    denom = 1 - R ** (l + 1) + A * (R ** (l + 1) - R ** (m + 1)) + B * R ** (m + 1)
    rho0 = ((1 - eps) / (1 + nbar)) / denom
    return AnalyticSolution(R=R, A_l=A, B_lm=B, rho0=rho0, m=m, l=l)


def population_series(sol: AnalyticSolution, n_max: int) -> tuple[np.ndarray, float]:
    """Populations on ``0..n_max`` and the exact mass above ``n_max``."""
    if n_max < sol.m + 2:
        raise ValueError(f"n_max={n_max} must be >= m+2={sol.m + 2}")
    return sol.populations(np.arange(n_max + 1)), sol.tail_mass(n_max)


def auto_truncation_from_solution(sol: AnalyticSolution, tail_tol: float = TAIL_TOL,
                                  floor: int = 0) -> int:
    """Smallest ``n_max >= floor`` whose own population is at most ``tail_tol``."""
    n = max(floor, sol.m + 2)
    if sol.R == 0:
        return n
    p = float(sol.populations(n))
    if p <= tail_tol:
        return n
    # Above m the decay is purely geometric.
    steps = math.ceil(math.log(tail_tol / p) / math.log(sol.R))
    return n + max(steps, 0)


def auto_truncation(rates: EngineeredRates, tail_tol: float = TAIL_TOL) -> int:
    """Default cutoff: at least ``max(2m+10, 30)``, extended until the last level is negligible."""
    floor = max(2 * rates.m + 10, 30)
    return auto_truncation_from_solution(analytic_populations(rates), tail_tol, floor)


@dataclass(frozen=True)
class RegimeReport:
    truncation_ratio: float
    amplification_ratio: float
    truncates: bool
    amplifies: bool
    regime: str

    def as_dict(self) -> dict:
        return {
            "truncation_ratio": self.truncation_ratio,
            "amplification_ratio": self.amplification_ratio,
            "truncates": self.truncates,
            "amplifies": self.amplifies,
            "regime": self.regime,
        }


def check_conditions(rates: EngineeredRates, sol: Optional[AnalyticSolution] = None) -> RegimeReport:
    """Grade the truncation and amplification conditions and name the regime.

    truncation_ratio = R^{m+1} B / (R^m A) must be <= 0.05, and
    amplification_ratio = R^{l+1} A / R^0 must be >= 20. A condition only
    counts when its engineered rate is switched on, so a bare thermal state
    with small ``R`` is not reported as truncated.
    """
    sol = sol or analytic_populations(rates)
    R = sol.R
    trunc = R * sol.B_lm / sol.A_l
    amp = R ** (rates.l + 1) * sol.A_l
    truncates = rates.gamma_m > 0 and trunc <= TRUNCATION_MAX
    amplifies = rates.gamma_l > 0 and amp >= AMPLIFICATION_MIN
    if truncates and amplifies:
        regime = "fock" if rates.m == rates.l + 1 else "sliced"
    elif truncates:
        regime = "truncated"
    elif amplifies:
        regime = "amplified"
    else:
        regime = "thermal"
    return RegimeReport(trunc, amp, bool(truncates), bool(amplifies), regime)
