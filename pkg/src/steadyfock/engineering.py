"""Selective Jaynes-Cummings interactions from a dispersive Raman scheme.

Atomic levels are ordered ``g, e, i`` (indices 0, 1, 2) and composite
states are atom ⊗ field. All frequencies are angular and usually measured
in units of the cavity coupling ``|lambda|``.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from .errors import IntegrationError
from .fock import HilbertSpec, Operator, annihilation, atomic, fock_ket

G, E, I = 0, 1, 2
EFFECTIVE_RATIO_MAX = 0.2


@dataclass(frozen=True)
class RamanParams:
    """Couplings and detunings of the three-level Raman configuration.

    lam: cavity coupling on g<->i.  Omega1, Omega2: laser Rabi strengths on
    g<->i and e<->i.  Delta = omega - omega_ig, Delta1 = omega_ig - omega_1,
    Delta2 = omega_2 - omega_ie.
    """

    lam: complex
    Omega1: complex
    Omega2: complex
    Delta: float
    Delta1: float
    Delta2: float

    def __post_init__(self):
        for name in ("Delta", "Delta1", "Delta2"):
            if getattr(self, name) == 0:
                raise ValueError(f"{name} must be nonzero")
        for om, dl, name in ((self.Omega1, self.Delta1, "Omega1"), (self.Omega2, self.Delta2, "Omega2")):
            if abs(om) / abs(dl) > EFFECTIVE_RATIO_MAX:
                warnings.warn(f"|{name}|/Delta = {abs(om) / abs(dl):.3g} > {EFFECTIVE_RATIO_MAX}; "
                              "effective description unreliable", stacklevel=3)

    def dispersive_ratio(self, n: int) -> float:
        """``|lambda| sqrt(n+1) / |Delta|`` for the coupling out of ``|g, n+1>``."""
        return abs(self.lam) * math.sqrt(n + 1) / abs(self.Delta)

    def with_(self, **changes) -> "RamanParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class EffectiveParams:
    xi: float
    zeta: complex
    varpi_g: float
    varpi_e: float
    delta: float

    def zeta_n(self, n: int) -> complex:
        return math.sqrt(n + 1) * self.zeta

    def phi_n(self, n: int) -> float:
        """Residual rotation frequency of the doublet ``{|n>, |n+1>}``."""
        return (n + 1) * self.xi + self.delta - self.varpi_g - self.varpi_e

    def free_hamiltonian(self, spec: HilbertSpec) -> np.ndarray:
        """Diagonal Stark/dispersive part ``(xi a†a - varpi_g) s_gg + varpi_e s_ee`` (3-level)."""
        d = spec.field_dim
        diag = np.zeros(3 * d)
        diag[G * d:(G + 1) * d] = self.xi * np.arange(d) - self.varpi_g
        diag[E * d:(E + 1) * d] = self.varpi_e
        return np.diag(diag).astype(complex)


def derive_effective(p: RamanParams) -> EffectiveParams:
    """Second-order effective couplings and level shifts of the Raman scheme."""
    return EffectiveParams(
        xi=abs(p.lam) ** 2 / p.Delta,
        zeta=np.conj(p.lam) * p.Omega2 * (1 / p.Delta + 1 / p.Delta2) / 2,
        varpi_g=abs(p.Omega1) ** 2 / p.Delta1,
        varpi_e=abs(p.Omega2) ** 2 / p.Delta2,
        delta=p.Delta - p.Delta2,
    )


def effective_terms(eff: EffectiveParams, n_max: int) -> list[tuple[int, complex, float]]:
    """``(n, zeta_n, phi_n)`` for every doublet ``{|n>, |n+1>}`` below ``n_max``.

    The n = 0 doublet is included.
    """
    return [(n, eff.zeta_n(n), eff.phi_n(n)) for n in range(n_max)]


def solve_selectivity(k: int, p: RamanParams) -> RamanParams:
    """Tune the lasers so the doublet ``{|k>, |k+1>}`` is exactly resonant.

    Sets ``|Omega1|`` so that ``varpi_g = (k+1) xi`` and ``Delta2`` so that
    ``delta = varpi_e``; the phase of a nonzero ``Omega1`` is kept.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    ratio = (k + 1) * p.Delta1 / p.Delta
    if ratio <= 0:
        raise ValueError("Delta and Delta1 must share a sign to meet the resonance condition")
    mag1 = math.sqrt(ratio) * abs(p.lam)
    phase1 = cmath.phase(p.Omega1) if p.Omega1 != 0 else 0.0
    if mag1 / abs(p.Delta1) > EFFECTIVE_RATIO_MAX:
        raise ValueError(
            f"infeasible hierarchy: required |Omega1|/Delta1 = {mag1 / abs(p.Delta1):.3g} "
            f"exceeds {EFFECTIVE_RATIO_MAX}"
        )
    disc = p.Delta ** 2 - 4 * abs(p.Omega2) ** 2
    if disc < 0:
        raise ValueError("no real Delta2 satisfies delta = varpi_e; reduce |Omega2|")
    delta2 = (p.Delta + math.copysign(math.sqrt(disc), p.Delta)) / 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return replace(p, Omega1=mag1 * cmath.exp(1j * phase1), Delta2=delta2)


def selective_jc(k: int, zeta_k: complex, spec: HilbertSpec) -> Operator:
    """``zeta_k |k+1><k| s_ge + h.c.`` on the (g, e) ⊗ field space."""
    if not 0 <= k < spec.n_max:
        raise ValueError(f"selective index k={k} needs k+1 <= n_max={spec.n_max}")
    flip = np.zeros((spec.field_dim, spec.field_dim))
    flip[k + 1, k] = 1.0
    term = zeta_k * np.kron(atomic(G, E, 2).data, flip)
    return Operator(term + term.conj().T, f"H_sel[{k}]")


def resonant_jc(lambda_tilde: complex, spec: HilbertSpec) -> Operator:
    """``lambda_tilde s_ig a + h.c.`` on the (g, i) ⊗ field space (i has index 1)."""
    a = annihilation(spec).data
    term = lambda_tilde * np.kron(atomic(1, 0, 2).data, a)
    return Operator(term + term.conj().T, "H_res")


class RamanHamiltonian:
    """Time-dependent ``H(t) = sum_j (h_j e^{-i w_j t} + h.c.)`` on 3-level ⊗ field."""

    def __init__(self, p: RamanParams, spec: HilbertSpec):
        d = spec.field_dim
        a = annihilation(spec).data
        eye = np.eye(d)
        self.spec = spec.with_atom(3)
        self.terms = [
            (p.lam * np.kron(atomic(I, G, 3).data, a), p.Delta),
            (p.Omega1 * np.kron(atomic(I, G, 3).data, eye), -p.Delta1),
            (p.Omega2 * np.kron(atomic(I, E, 3).data, eye), p.Delta2),
        ]
        self._pairs = [(h, h.conj().T, w) for h, w in self.terms]

    @property
    def max_frequency(self) -> float:
        return max(abs(w) for _, w in self.terms)

    def __call__(self, t: float) -> np.ndarray:
        H = sum(h * np.exp(-1j * w * t) for h, w in self.terms)
        return H + H.conj().T

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        for h, hd, w in self._pairs:
            ph = np.exp(-1j * w * t)
            out += ph * (h @ psi) + np.conj(ph) * (hd @ psi)
        return out


def integrate_schrodinger(hamiltonian: RamanHamiltonian, psi0: np.ndarray, t_eval: np.ndarray,
                          rtol: float = 1e-9, atol: float = 1e-12) -> np.ndarray:
    """Columns of the returned array are ``psi(t)`` at ``t_eval``."""
    max_step = 2 * np.pi / (20 * hamiltonian.max_frequency)

    def rhs(t, y):
        return -1j * hamiltonian.apply(t, y)

    sol = solve_ivp(rhs, (0.0, float(t_eval[-1])), psi0.astype(complex), method="DOP853",
                    t_eval=t_eval, rtol=rtol, atol=atol, max_step=max_step)
    if sol.status != 0:
        t_fail = float(sol.t[-1]) if sol.t.size else 0.0
        raise IntegrationError(f"Schrodinger integration failed at t={t_fail:.6g}: {sol.message}",
                               t=t_fail)
    return sol.y


def detuned_rabi_max(coupling: complex, detuning: float) -> float:
    """Peak transfer ``4|g|^2 / (4|g|^2 + d^2)`` of a detuned two-level system."""
    g2 = 4 * abs(coupling) ** 2
    if g2 == 0:
        return 0.0
    return g2 / (g2 + detuning ** 2)


@dataclass(frozen=True)
class SelectivityReport:
    k: int
    n_probe: int
    t_end: float
    times: np.ndarray
    transfer: np.ndarray
    fidelity: np.ndarray
    auxiliary_max: float
    norm_error: float
    detuned_rabi_bound: float
    effective: EffectiveParams

    @property
    def transfer_final(self) -> float:
        return float(self.transfer[-1])

    @property
    def transfer_max(self) -> float:
        return float(self.transfer.max())

    @property
    def fidelity_final(self) -> float:
        return float(self.fidelity[-1])

    @property
    def error(self) -> float:
        """Infidelity against the selective model at ``t_end``."""
        return 1.0 - self.fidelity_final

    def summary(self) -> dict:
        return {
            "k": self.k,
            "n_probe": self.n_probe,
            "t_end": self.t_end,
            "transfer_final": self.transfer_final,
            "transfer_max": self.transfer_max,
            "fidelity_final": self.fidelity_final,
            "infidelity": self.error,
            "auxiliary_max": self.auxiliary_max,
            "norm_error": self.norm_error,
            "detuned_rabi_bound": self.detuned_rabi_bound,
            "phi_probe": self.effective.phi_n(self.n_probe),
            "zeta_probe_abs": abs(self.effective.zeta_n(self.n_probe)),
        }


def validate_selectivity(k: int, p: RamanParams, n_probe: int, t_end: Optional[float] = None,
                         n_max: int = 15, n_samples: int = 401) -> SelectivityReport:
    """Integrate the full Raman Hamiltonian and compare with the selective model.

    The atom starts in ``|g, n_probe+1>``, the upper member of the doublet
    ``{|n_probe>, |n_probe+1>}``; transfer is the excited-state population.
    The selective prediction is moved into the lab frame with
    ``exp(-i H0 t)``, ``H0`` the diagonal Stark part, before the overlap is
    taken. ``t_end`` defaults to the half Rabi period ``pi / (2 |zeta_k|)``.
    """
    spec = HilbertSpec(n_max)
    if not 0 <= n_probe < n_max:
        raise ValueError(f"n_probe={n_probe} needs n_probe+1 <= n_max={n_max}")
    eff = derive_effective(p)
    zk = eff.zeta_n(k)
    if t_end is None:
        if zk == 0:
            raise ValueError("zeta_k = 0; pass t_end explicitly")
        t_end = math.pi / (2 * abs(zk))
    d = spec.field_dim
    times = np.linspace(0.0, t_end, n_samples)
    psi0 = fock_ket(G * d + n_probe + 1, 3 * d)

    ham = RamanHamiltonian(p, spec)
    psi_full = integrate_schrodinger(ham, psi0, times)
    norms = np.linalg.norm(psi_full, axis=0)
    transfer = np.sum(np.abs(psi_full[E * d:(E + 1) * d]) ** 2, axis=0)
    aux = np.sum(np.abs(psi_full[I * d:(I + 1) * d]) ** 2, axis=0)

    # (g, e) ⊗ field occupies the leading 2d indices of the 3-level space.
    h_sel = np.zeros((3 * d, 3 * d), dtype=complex)
    h_sel[:2 * d, :2 * d] = selective_jc(k, zk, spec).data
    h0 = np.real(np.diag(eff.free_hamiltonian(spec)))
    w, v = np.linalg.eigh(h_sel)
    coeff = v.conj().T @ psi0
    fidelity = np.empty(times.size)
    for j, t in enumerate(times):
        psi_sel = v @ (np.exp(-1j * w * t) * coeff)
        psi_pred = np.exp(-1j * h0 * t) * psi_sel
        fidelity[j] = abs(np.vdot(psi_pred, psi_full[:, j])) ** 2

    return SelectivityReport(
        k=k,
        n_probe=n_probe,
        t_end=float(t_end),
        times=times,
        transfer=transfer,
        fidelity=fidelity,
        auxiliary_max=float(aux.max()),
        norm_error=float(np.max(np.abs(norms - 1))),
        detuned_rabi_bound=detuned_rabi_max(eff.zeta_n(n_probe), eff.phi_n(n_probe)),
        effective=eff,
    )


def selective_propagator(k: int, zeta_k: complex, spec: HilbertSpec, t: float) -> np.ndarray:
    return sla.expm(-1j * t * selective_jc(k, zeta_k, spec).data)
