"""Engineered and natural reservoirs of the cavity mode.

Rates are absolute but conventionally expressed with the cavity damping
``gamma = 1``, so every engineered rate reads directly in units of gamma
and times in units of ``1/gamma``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

from scipy import constants

from .errors import NoSteadyStateError
from .fock import HilbertSpec, annihilation, creation, selective_lowering
from .lindblad import Channel, MasterEquationSpec

WEAK_COUPLING_MAX = 0.1
DUTY_CYCLE_MAX = 0.5


@dataclass(frozen=True)
class EngineeredRates:
    """Rates of the engineered master equation plus the natural cavity bath.

    gamma_m: selective emission ``|m><m+1|`` driven by ground-state atoms.
    gamma_l: selective absorption ``|l+1><l|`` driven by excited atoms.
    epsilon: non-selective absorption rate over gamma (auxiliary-level atoms).
    """

    gamma_m: float
    gamma_l: float
    epsilon: float
    m: int
    l: int
    nbar: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        for name in ("gamma_m", "gamma_l", "nbar"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not 0 <= self.epsilon:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.epsilon >= 1:
            raise NoSteadyStateError(
                f"epsilon={self.epsilon} >= 1: engineered absorption overwhelms cavity "
                "damping and no steady equilibrium exists (need epsilon < 1)"
            )
        if int(self.m) != self.m or int(self.l) != self.l or self.l < 0:
            raise ValueError(f"m and l must be non-negative integers, got m={self.m}, l={self.l}")
        if not self.l < self.m:
            raise ValueError(f"need l < m (l = m-1 is the Fock case), got l={self.l}, m={self.m}")

    @property
    def gamma_tilde(self) -> float:
        return self.epsilon * self.gamma

    @property
    def is_fock(self) -> bool:
        return self.m == self.l + 1

    def with_(self, **changes) -> "EngineeredRates":
        return replace(self, **changes)


@dataclass(frozen=True)
class BeamParams:
    """Atomic beam crossing the cavity one atom at a time.

    Atoms arrive in slots at a fixed slot rate; each slot carries a
    ground, excited or auxiliary atom with probabilities ``p_g, p_e, p_i``
    (or nothing), so the species arrival rates ``r_s = slot_rate * p_s``.
    """

    r_g: float
    r_e: float
    r_i: float
    p_g: float
    p_e: float
    p_i: float
    tau: float
    zeta: complex
    lambda_tilde: complex

    def __post_init__(self):
        probs = (self.p_g, self.p_e, self.p_i)
        rates = (self.r_g, self.r_e, self.r_i)
        if any(not 0 <= p <= 1 for p in probs):
            raise ValueError(f"probabilities must lie in [0, 1], got {probs}")
        if sum(probs) > 1 + 1e-12:
            raise ValueError(f"p_g + p_e + p_i = {sum(probs)} exceeds 1")
        if any(not math.isfinite(r) or r < 0 for r in rates):
            raise ValueError(f"arrival rates must be finite and >= 0, got {rates}")
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        slot = self.slot_rate
        for r, p, s in zip(rates, probs, "gei"):
            if not math.isclose(r, slot * p, rel_tol=1e-9, abs_tol=1e-12 * max(1.0, slot)):
                raise ValueError(f"r_{s}={r} is not slot_rate*p_{s}={slot * p}")
        if abs(self.lambda_tilde) * self.tau > WEAK_COUPLING_MAX:
            warnings.warn(
                f"|lambda_tilde|*tau = {abs(self.lambda_tilde) * self.tau:.3g} exceeds "
                f"{WEAK_COUPLING_MAX}; the absorption channel leaves the weak-coupling regime",
                stacklevel=2,
            )

    @classmethod
    def from_slots(cls, slot_rate: float, p_g: float, p_e: float, p_i: float, tau: float,
                   zeta: complex, lambda_tilde: complex) -> "BeamParams":
        return cls(slot_rate * p_g, slot_rate * p_e, slot_rate * p_i, p_g, p_e, p_i,
                   tau, zeta, lambda_tilde)

    @property
    def slot_rate(self) -> float:
        ptot = self.p_g + self.p_e + self.p_i
        if ptot == 0:
            return 0.0
        return (self.r_g + self.r_e + self.r_i) / ptot

    @property
    def duty_cycle(self) -> float:
        """Expected fraction of time an atom is inside the cavity."""
        return (self.r_g + self.r_e + self.r_i) * self.tau


def rates_from_beam(beam: BeamParams, m: int, l: int, nbar: float = 0.0,
                    gamma: float = 1.0) -> EngineeredRates:
    """Coarse-grained rates ``r (coupling * tau)^2`` of each atomic species."""
    zeta_m = math.sqrt(m + 1) * abs(beam.zeta)
    zeta_l = math.sqrt(l + 1) * abs(beam.zeta)
    gamma_m = beam.r_g * (zeta_m * beam.tau) ** 2
    gamma_l = beam.r_e * (zeta_l * beam.tau) ** 2
    gamma_tilde = beam.r_i * (abs(beam.lambda_tilde) * beam.tau) ** 2
    return EngineeredRates(gamma_m, gamma_l, gamma_tilde / gamma, m, l, nbar, gamma)


def natural_channels(spec: HilbertSpec, nbar: float, gamma: float = 1.0) -> list[Channel]:
    """Thermal emission and absorption of the lossy cavity."""
    a = annihilation(spec)
    return [Channel(gamma * (1 + nbar), a), Channel(gamma * nbar, a.dag())]


def build_master_equation(rates: EngineeredRates, spec: HilbertSpec) -> MasterEquationSpec:
    """Engineered channels plus natural damping, in the interaction picture.

    Channel order: selective emission, selective absorption, non-selective
    absorption, cavity emission, cavity thermal absorption.
    """
    if spec.atom_levels is not None:
        raise ValueError("the cavity master equation lives on the field-only space")
    if spec.n_max < rates.m + 2:
        raise ValueError(
            f"n_max={spec.n_max} too small for m={rates.m}; need n_max >= m + 2"
        )
    a_m = selective_lowering(rates.m, spec)
    a_l_dag = selective_lowering(rates.l, spec).dag()
    channels = [
        Channel(rates.gamma_m, a_m),
        Channel(rates.gamma_l, a_l_dag),
        Channel(rates.gamma_tilde, creation(spec)),
        *natural_channels(spec, rates.nbar, rates.gamma),
    ]
    return MasterEquationSpec(spec, channels)


def natural_master_equation(spec: HilbertSpec, nbar: float, gamma: float = 1.0) -> MasterEquationSpec:
    return MasterEquationSpec(spec, natural_channels(spec, nbar, gamma))


def nbar_temperature(nbar: float, omega: float) -> float:
    """Bath temperature (K) giving mean occupation ``nbar`` at angular frequency ``omega``.

    ``nbar = 0`` maps to ``T = 0`` by convention.
    """
    if nbar < 0 or not omega > 0:
        raise ValueError(f"need nbar >= 0 and omega > 0, got nbar={nbar}, omega={omega}")
    if nbar == 0:
        return 0.0
    return constants.hbar * omega / (constants.k * math.log1p(1.0 / nbar))


def temperature_nbar(temperature: float, omega: float) -> float:
    """Bose-Einstein occupation at ``temperature``; inverse of :func:`nbar_temperature`."""
    if temperature < 0 or not omega > 0:
        raise ValueError(f"need T >= 0 and omega > 0, got T={temperature}, omega={omega}")
    if temperature == 0:
        return 0.0
    return 1.0 / math.expm1(constants.hbar * omega / (constants.k * temperature))


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    note: str = ""

    @property
    def status(self) -> str:
        return "pass" if self.passed else "warn"


@dataclass(frozen=True)
class FeasibilityReport:
    checks: tuple[Check, ...]

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {c.name: {"value": c.value, "threshold": c.threshold, "status": c.status,
                         "note": c.note} for c in self.checks}


# Order-of-magnitude couplings for a microwave cavity-QED setup (Hz).
PHYSICAL_PRESET = {"lambda": 5e5, "gamma": 7.5}

_SLACK = 1 + 1e-9


def feasibility_check(beam: Optional[BeamParams], raman, k: int,
                      n_dispersive: Optional[int] = None) -> FeasibilityReport:
    """Grade the parameter hierarchy behind the engineered reservoir.

    ``raman`` is a :class:`~steadyfock.engineering.RamanParams`;
    ``n_dispersive`` is the highest Fock index whose cavity coupling
    ``|lambda| sqrt(n+1)`` must stay dispersive (defaults to ``k``, the
    lower level of the selected doublet). Report-only: nothing raises.
    """
    from .engineering import derive_effective

    n_disp = k if n_dispersive is None else n_dispersive
    eff = derive_effective(raman)
    lam = abs(raman.lam)
    checks = [
        Check("dispersive_cavity", lam * math.sqrt(n_disp + 1) / abs(raman.Delta), 0.1,
              lam * math.sqrt(n_disp + 1) / abs(raman.Delta) <= 0.1 * _SLACK,
              "|lambda| sqrt(n+1) / Delta"),
        Check("dispersive_laser1", abs(raman.Omega1) / abs(raman.Delta1), 0.1,
              abs(raman.Omega1) / abs(raman.Delta1) <= 0.1 * _SLACK, "|Omega1| / Delta1"),
        Check("dispersive_laser2", abs(raman.Omega2) / abs(raman.Delta2), 0.1,
              abs(raman.Omega2) / abs(raman.Delta2) <= 0.1 * _SLACK, "|Omega2| / Delta2"),
    ]
    neighbour = math.sqrt(k + 2) * abs(eff.zeta)
    sel_ratio = eff.xi / neighbour if neighbour else math.inf
    checks.append(Check("selectivity", sel_ratio, 10.0, sel_ratio >= 10.0,
                        "xi / (sqrt(k+2) |zeta|)"))
    zk = abs(eff.zeta_n(k))
    detune = abs(eff.phi_n(k)) / zk if zk else math.inf
    checks.append(Check("resonance", detune, 0.1, detune <= 0.1, "|phi_k| / |zeta_k|"))
    if beam is not None:
        weak = abs(beam.lambda_tilde) * beam.tau
        checks.append(Check("weak_coupling_absorption", weak, WEAK_COUPLING_MAX,
                            weak <= WEAK_COUPLING_MAX * _SLACK, "|lambda_tilde| tau"))
        checks.append(Check("one_atom_at_a_time", beam.duty_cycle, DUTY_CYCLE_MAX,
                            beam.duty_cycle <= DUTY_CYCLE_MAX, "total arrival rate * tau"))
        checks.append(Check("selective_pulse_area", zk * beam.tau, math.inf, True,
                            "|zeta_k| tau (informational)"))
    return FeasibilityReport(tuple(checks))


def selective_operating_point(k: int, lam: float = 1.0, scale: float = 10.0):
    """Raman parameters on the dispersive hierarchy ``Delta = scale sqrt(k+1) |lambda|``.

    Returns ``(raman, tau)`` with ``tau`` chosen so that ``|zeta_k| tau = 1``.
    ``Delta2`` is set so the resonance condition holds exactly.
    """
    from .engineering import RamanParams, derive_effective, solve_selectivity

    delta = scale * math.sqrt(k + 1) * lam
    omega2 = math.sqrt(k + 1) * lam / 10
    raman = solve_selectivity(k, RamanParams(lam, 0.0, omega2, delta, delta, delta))
    tau = 1.0 / abs(derive_effective(raman).zeta_n(k))
    return raman, tau


def physical_feasibility(k: int = 10, max_rate_hz: float = 1e4,
                         preset: dict = PHYSICAL_PRESET) -> dict:
    """Dimensionless feasibility summary at the physical-constants preset."""
    from .engineering import derive_effective

    lam, gamma = preset["lambda"], preset["gamma"]
    raman, tau = selective_operating_point(k, lam)
    zeta_k = abs(derive_effective(raman).zeta_n(k))
    gamma_k_max = max_rate_hz * (zeta_k * tau) ** 2
    return {
        "k": k,
        "lambda_hz": lam,
        "gamma_hz": gamma,
        "tau_s": tau,
        "zeta_k_hz": zeta_k,
        "zeta_k_over_lambda": zeta_k / lam,
        "gamma_k_max_over_gamma": gamma_k_max / gamma,
        "duty_cycle_at_max_rate": max_rate_hz * tau,
    }
