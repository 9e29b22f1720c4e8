"""Repeated-interaction model of the atomic beam.

Each arrival slot brings a ground, excited or auxiliary atom (or none) that
interacts unitarily with the cavity for the dwell time ``tau`` and is then
traced out. Natural cavity damping acts continuously. Per period it is
applied as a Lie-Trotter step ``M = Phi . exp(L_nat T)`` with
``T = 1 / slot_rate``.

All maps here are phase covariant: they never mix density-matrix elements
with different offsets ``n - n'``. Superoperators are therefore stored as
dense blocks over those invariant index sets. This keeps cutoffs of
seventy-odd levels cheap.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .engineering import resonant_jc, selective_jc
from .errors import SolverError
from .fock import DensityMatrix, HilbertSpec, Operator, as_array, trace_distance
from .lindblad import invariant_blocks, liouvillian_sparse, steady_state
from .reservoir import (
    DUTY_CYCLE_MAX,
    BeamParams,
    EngineeredRates,
    build_master_equation,
    natural_master_equation,
    rates_from_beam,
)

ARRIVALS = ("regular", "poisson")
# Species label, initial atomic level in the two-level interaction space.
SPECIES = (("g", 0), ("e", 1), ("i", 1))


@dataclass(frozen=True)
class CollisionConfig:
    """Beam, targets and bookkeeping for one repeated-interaction run.

    ``coarse_grain_window`` counts arrival slots per coarse-graining step.
    When ``seed`` is ``None`` for Poisson arrivals a fresh seed is drawn
    and recorded on the resulting trajectory.
    """

    beam: BeamParams
    m: int
    l: int
    n_max: int
    arrival: str = "regular"
    gamma: float = 1.0
    nbar: float = 0.0
    total_time: float = 1.0
    n_records: int = 100
    coarse_grain_window: int = 1
    seed: Optional[int] = None

    def __post_init__(self):
        if self.arrival not in ARRIVALS:
            raise ValueError(f"arrival must be one of {ARRIVALS}, got {self.arrival!r}")
        for name, k in (("m", self.m), ("l", self.l)):
            if not 0 <= k < self.n_max:
                raise ValueError(f"{name}={k} needs 0 <= {name} < n_max={self.n_max}")
        if self.gamma < 0 or self.nbar < 0:
            raise ValueError("gamma and nbar must be >= 0")
        if not self.total_time > 0 or self.n_records < 1:
            raise ValueError("total_time must be > 0 and n_records >= 1")
        if self.coarse_grain_window < 1:
            raise ValueError("coarse_grain_window must be >= 1")
        if self.beam.duty_cycle > DUTY_CYCLE_MAX:
            warnings.warn(
                f"arrival rate x tau = {self.beam.duty_cycle:.3g} exceeds {DUTY_CYCLE_MAX}; "
                "atoms overlap inside the cavity",
                stacklevel=2,
            )

    @property
    def spec(self) -> HilbertSpec:
        return HilbertSpec(self.n_max)

    @property
    def period(self) -> float:
        slot = self.beam.slot_rate
        return math.inf if slot == 0 else 1.0 / slot

    def engineered_rates(self) -> EngineeredRates:
        return rates_from_beam(self.beam, self.m, self.l, self.nbar, self.gamma)


@dataclass(frozen=True)
class SpeciesChannel:
    name: str
    probability: float
    hamiltonian: Operator
    kraus: tuple[np.ndarray, ...]


def species_kraus(hamiltonian: Operator, start: int, tau: float, field_dim: int) -> tuple[np.ndarray, ...]:
    """Kraus operators ``<j|U(tau)|start>`` of a two-level atom prepared in ``start``."""
    U = sla.expm(-1j * tau * hamiltonian.data)
    d = field_dim
    return tuple(U[j * d:(j + 1) * d, start * d:(start + 1) * d] for j in range(2))


def species_channels(cfg: CollisionConfig) -> list[SpeciesChannel]:
    beam, spec = cfg.beam, cfg.spec
    hams = {
        "g": selective_jc(cfg.m, math.sqrt(cfg.m + 1) * abs(beam.zeta), spec),
        "e": selective_jc(cfg.l, math.sqrt(cfg.l + 1) * abs(beam.zeta), spec),
        "i": resonant_jc(abs(beam.lambda_tilde), spec),
    }
    probs = {"g": beam.p_g, "e": beam.p_e, "i": beam.p_i}
    return [
        SpeciesChannel(name, probs[name], hams[name],
                       species_kraus(hams[name], start, beam.tau, spec.field_dim))
        for name, start in SPECIES
    ]


def _kraus_superop(kraus: Sequence[np.ndarray]) -> sp.csr_matrix:
    out = None
    for K in kraus:
        Ks = sp.csr_matrix(K)
        term = sp.kron(Ks, Ks.conj())
        out = term if out is None else out + term
    return sp.csr_matrix(out)


class CollisionMap:
    """Species-averaged map of one arrival slot.

    ``rho -> sum_s p_s Tr_atom[U_s (rho x |s><s|) U_s†] + (1 - sum_s p_s) rho``.
    """

    def __init__(self, channels: Sequence[SpeciesChannel], field_dim: int):
        self.channels = tuple(channels)
        self.field_dim = field_dim
        self.idle = 1.0 - sum(ch.probability for ch in self.channels)

    def __call__(self, rho) -> DensityMatrix:
        rho = as_array(rho)
        out = self.idle * rho
        for ch in self.channels:
            if ch.probability:
                for K in ch.kraus:
                    out = out + ch.probability * (K @ rho @ K.conj().T)
        return DensityMatrix(out, check=False)

    def superoperator(self) -> sp.csr_matrix:
        """Sparse row-major superoperator of the averaged map."""
        d = self.field_dim
        S = self.idle * sp.identity(d * d, dtype=complex, format="csr")
        for ch in self.channels:
            if ch.probability:
                S = S + ch.probability * _kraus_superop(ch.kraus)
        S = sp.csr_matrix(S)
        S.eliminate_zeros()
        return S

    def choi(self) -> np.ndarray:
        """Choi matrix ``sum_ij |i><j| x Phi(|i><j|)`` built by reshuffling the superoperator."""
        d = self.field_dim
        S = self.superoperator().toarray().reshape(d, d, d, d)  # [a, b, c, e]: rho_ce -> out_ab
        return S.transpose(2, 0, 3, 1).reshape(d * d, d * d)

    def min_choi_eigenvalue(self) -> float:
        C = self.choi()
        return float(np.linalg.eigvalsh(0.5 * (C + C.conj().T)).min())

    def is_cptp(self, tol: float = 1e-9) -> bool:
        d = self.field_dim
        S = self.superoperator()
        # Trace preservation: the row-vector vec(I) is a left fixed point.
        tr_row = np.eye(d).reshape(-1)
        tp = np.max(np.abs(S.T @ tr_row - tr_row)) <= tol
        return bool(tp and self.min_choi_eigenvalue() >= -tol)


def collision_map(cfg: CollisionConfig) -> CollisionMap:
    return CollisionMap(species_channels(cfg), cfg.spec.field_dim)


class BlockMap:
    """Linear map on row-major ``vec(rho)`` stored as dense blocks on invariant index sets."""

    def __init__(self, size: int, blocks: Sequence[tuple[np.ndarray, np.ndarray]]):
        self.size = size
        self.blocks = list(blocks)

    @classmethod
    def from_sparse(cls, S: sp.spmatrix, partition: Sequence[np.ndarray]) -> "BlockMap":
        S = sp.csr_matrix(S)
        return cls(S.shape[0], [(idx, S[idx][:, idx].toarray()) for idx in partition])

    @classmethod
    def exp_generator(cls, L: sp.spmatrix, t: float, partition: Sequence[np.ndarray]) -> "BlockMap":
        L = sp.csr_matrix(L)
        return cls(L.shape[0], [(idx, sla.expm(t * L[idx][:, idx].toarray())) for idx in partition])

    def apply(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros(self.size, dtype=complex)
        for idx, mat in self.blocks:
            out[idx] = mat @ vec[idx]
        return out

    def __matmul__(self, other: "BlockMap") -> "BlockMap":
        return BlockMap(self.size, [(idx, a @ b) for (idx, a), (_, b) in zip(self.blocks, other.blocks)])

    def power(self, k: int) -> "BlockMap":
        return BlockMap(self.size, [(idx, np.linalg.matrix_power(mat, k)) for idx, mat in self.blocks])

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.size, self.size), dtype=complex)
        for idx, mat in self.blocks:
            out[np.ix_(idx, idx)] = mat
        return out


@dataclass
class BeamModel:
    """Precomputed pieces of a configuration: arrival map, natural generator, block partition."""

    cfg: CollisionConfig
    arrival_map: CollisionMap
    arrival_super: sp.csr_matrix
    natural: sp.csr_matrix
    partition: list[np.ndarray]
    _nat_cache: dict = field(default_factory=dict)

    @classmethod
    def build(cls, cfg: CollisionConfig) -> "BeamModel":
        cmap = collision_map(cfg)
        S = cmap.superoperator()
        L = liouvillian_sparse(natural_master_equation(cfg.spec, cfg.nbar, cfg.gamma))
        pattern = abs(S) + abs(L) + sp.identity(S.shape[0], format="csr")
        return cls(cfg, cmap, S, L, invariant_blocks(pattern))

    def arrival_blocks(self) -> BlockMap:
        return BlockMap.from_sparse(self.arrival_super, self.partition)

    def natural_blocks(self, t: float) -> BlockMap:
        key = round(float(t), 15)
        if key not in self._nat_cache:
            self._nat_cache[key] = BlockMap.exp_generator(self.natural, t, self.partition)
        return self._nat_cache[key]

    def period_map(self) -> BlockMap:
        """Natural damping over one slot followed by one arrival."""
        T = self.cfg.period
        if not math.isfinite(T):
            raise ValueError("period map needs a non-zero slot rate")
        return self.arrival_blocks() @ self.natural_blocks(T)


@dataclass(frozen=True)
class BeamTrajectory:
    times: np.ndarray
    states: tuple[DensityMatrix, ...]
    arrivals: np.ndarray  # cumulative arrivals up to each record
    arrival: str
    seed: Optional[int]

    @property
    def populations(self) -> np.ndarray:
        return np.array([s.populations for s in self.states])

    def to_csv(self, path) -> None:
        pops = self.populations
        with open(path, "w") as fh:
            fh.write("time," + ",".join(f"p{n}" for n in range(pops.shape[1])) + "\n")
            for t, row in zip(self.times, pops):
                fh.write(repr(float(t)) + "," + ",".join(repr(float(x)) for x in row) + "\n")


def _to_state(vec: np.ndarray, d: int) -> DensityMatrix:
    rho = vec.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real, check=False)


def simulate_beam(cfg: CollisionConfig, rho0, t_grid: Optional[Sequence[float]] = None,
                  model: Optional[BeamModel] = None) -> BeamTrajectory:
    """Field state at the record times under interleaved damping and arrivals.

    Regular arrivals land at ``T, 2T, ...`` and are deterministic. Poisson
    arrivals use exponential waiting times with mean ``T`` drawn from a
    seeded generator. Either way each arrival applies the species-averaged
    map.
    """
    model = model or BeamModel.build(cfg)
    d = cfg.spec.field_dim
    rho0 = as_array(rho0)
    if rho0.shape != (d, d):
        raise ValueError(f"rho0 has shape {rho0.shape}, expected {(d, d)}")
    times = np.linspace(0.0, cfg.total_time, cfg.n_records + 1) if t_grid is None else np.asarray(t_grid, float)
    if times[0] != 0 or np.any(np.diff(times) <= 0):
        raise ValueError("t_grid must start at 0 and increase strictly")
    T = cfg.period
    vec = rho0.reshape(-1).astype(complex)

    seed = cfg.seed
    if cfg.arrival == "poisson":
        if seed is None:
            seed = int(np.random.SeedSequence().entropy % (2 ** 63))
        rng = np.random.default_rng(seed)
        arrival_times = []
        if math.isfinite(T):
            t = rng.exponential(T)
            while t <= times[-1]:
                arrival_times.append(t)
                t += rng.exponential(T)
        events = np.asarray(arrival_times)
        A = model.arrival_blocks()
        states, counts = [], []
        t_now, n_done = 0.0, 0
        for t_rec in times:
            while n_done < events.size and events[n_done] <= t_rec:
                vec = A.apply(model.natural_blocks(events[n_done] - t_now).apply(vec))
                t_now = events[n_done]
                n_done += 1
            if t_rec > t_now:
                vec = model.natural_blocks(t_rec - t_now).apply(vec)
                t_now = t_rec
            states.append(_to_state(vec, d))
            counts.append(n_done)
    else:
        M = model.period_map() if math.isfinite(T) else None
        states, counts = [], []
        n_done = 0
        for t_rec in times:
            n_target = 0 if M is None else int(math.floor(t_rec / T + 1e-12))
            if n_target > n_done:
                vec = M.power(n_target - n_done).apply(vec)
                n_done = n_target
            last = n_done * T if M is not None else 0.0
            out = vec if t_rec == last else model.natural_blocks(t_rec - last).apply(vec)
            states.append(_to_state(out, d))
            counts.append(n_done)
    return BeamTrajectory(times, tuple(states), np.asarray(counts), cfg.arrival, seed)


@dataclass(frozen=True)
class BeamSteadyState:
    rho: DensityMatrix
    eigenvalue_gap: float  # 1 - largest |eigenvalue| of the period map below 1
    fixed_point_count: int


def beam_steady_state(cfg: CollisionConfig, model: Optional[BeamModel] = None,
                      tol: float = 1e-10) -> BeamSteadyState:
    """Fixed point of the regular-arrival period map (state just after an arrival)."""
    model = model or BeamModel.build(cfg)
    M = model.period_map()
    d = cfg.spec.field_dim
    trace_row = np.eye(d).reshape(-1)
    count, gap, target = 0, 1.0, None
    for idx, mat in M.blocks:
        mods = np.abs(np.linalg.eigvals(mat))
        ones = np.abs(mods - 1) < tol
        count += int(ones.sum())
        if (~ones).any():
            gap = min(gap, float(1 - mods[~ones].max()))
        if ones.any() and np.any(trace_row[idx]):
            target = (idx, mat)
    if target is None or count != 1:
        raise SolverError(f"period map has {count} fixed points; expected exactly one")
    idx, mat = target
    bordered = np.vstack([mat - np.eye(len(idx)), trace_row[idx][None, :]])
    rhs = np.zeros(len(idx) + 1, dtype=complex)
    rhs[-1] = 1.0
    x, *_ = np.linalg.lstsq(bordered, rhs, rcond=None)
    vec = np.zeros(d * d, dtype=complex)
    vec[idx] = x
    return BeamSteadyState(_to_state(vec, d), gap, count)


def lindblad_distance(cfg: CollisionConfig, model: Optional[BeamModel] = None) -> float:
    """Trace distance between the beam fixed point and the engineered Lindblad steady state.

    Both live on the same truncation, so the cutoff affects them alike.
    """
    beam_rho = beam_steady_state(cfg, model).rho
    me = build_master_equation(cfg.engineered_rates(), cfg.spec)
    lind = steady_state(me, tail_tol=None)
    return trace_distance(beam_rho, lind.rho)


def beam_for_rates(rates: EngineeredRates, tau: float, slot_rate: float,
                   p_auxiliary: float = 0.1, p_total: float = 1.0) -> BeamParams:
    """Beam whose coarse-grained rates equal ``rates``.

    ``p_auxiliary`` of the slots carry auxiliary atoms. The remaining
    ``p_total - p_auxiliary`` are split between ground and excited atoms in
    the ratio ``gamma_m / (m+1) : gamma_l / (l+1)``. The common coupling
    ``zeta`` and ``lambda_tilde`` then follow from ``r (coupling tau)^2``.
    """
    gm = rates.gamma_m / (rates.m + 1)
    gl = rates.gamma_l / (rates.l + 1)
    p_i = p_auxiliary if rates.gamma_tilde > 0 else 0.0
    budget = p_total - p_i
    if budget <= 0 and gm + gl > 0:
        raise ValueError("no slots left for selective atoms")
    if gm + gl > 0:
        p_g, p_e = budget * gm / (gm + gl), budget * gl / (gm + gl)
        zeta = math.sqrt((gm + gl) / (slot_rate * budget)) / tau
    else:
        p_g = p_e = 0.0
        zeta = 0.0
    lam = math.sqrt(rates.gamma_tilde / (slot_rate * p_i)) / tau if p_i else 0.0
    return BeamParams.from_slots(slot_rate, p_g, p_e, p_i, tau, zeta, lam)


@dataclass(frozen=True)
class ConvergenceStudy:
    taus: np.ndarray
    distances: np.ndarray

    @property
    def halving_ratios(self) -> np.ndarray:
        """``error(tau) / error(tau / 2)`` for successive pairs; 2 means first order."""
        return self.distances[:-1] / self.distances[1:]

    @property
    def order(self) -> float:
        slope, _ = np.polyfit(np.log(self.taus), np.log(self.distances), 1)
        return float(slope)


def convergence_study(rates: EngineeredRates, n_max: int, taus: Sequence[float],
                      duty_cycle: float = 0.5, p_auxiliary: float = 0.1) -> ConvergenceStudy:
    """Beam-vs-Lindblad distance as ``tau`` shrinks at fixed rates and fixed slot duty cycle.

    With ``slot_rate = duty_cycle / tau`` the couplings scale as
    ``tau^(-1/2)``, so each collision transfers probability ``O(tau)`` and
    the leading error is first order in ``tau``.
    """
    dists = []
    for tau in taus:
        beam = beam_for_rates(rates, tau, duty_cycle / tau, p_auxiliary)
        cfg = CollisionConfig(beam, rates.m, rates.l, n_max, gamma=rates.gamma, nbar=rates.nbar)
        dists.append(lindblad_distance(cfg))
    return ConvergenceStudy(np.asarray(taus, float), np.asarray(dists))


def coarse_grained_generator(cfg: CollisionConfig, window: Optional[int] = None) -> sp.csr_matrix:
    """Atom-only generator ``(Phi^w - id) / (w T)`` over a window of ``w`` slots."""
    w = window or cfg.coarse_grain_window
    S = collision_map(cfg).superoperator()
    Sw = S
    for _ in range(w - 1):
        Sw = Sw @ S
    eye = sp.identity(S.shape[0], dtype=complex, format="csr")
    return sp.csr_matrix((Sw - eye) / (w * cfg.period))


def dissipator(jump: Operator) -> sp.csr_matrix:
    """Unit-rate Lindblad dissipator of ``jump`` on row-major ``vec(rho)``."""
    J = sp.csr_matrix(jump.data)
    JdJ = J.conj().T @ J
    eye = sp.identity(J.shape[0], format="csr")
    return sp.csr_matrix(sp.kron(J, J.conj()) - 0.5 * sp.kron(JdJ, eye) - 0.5 * sp.kron(eye, JdJ.T))


def fit_channel_rate(generator: sp.spmatrix, jump: Operator) -> tuple[float, float]:
    """Least-squares rate of ``jump``'s dissipator in ``generator`` and the relative misfit."""
    D = dissipator(jump).toarray().ravel()
    G = sp.csr_matrix(generator).toarray().ravel()
    rate = float(np.real(np.vdot(D, G)) / np.real(np.vdot(D, D)))
    misfit = float(np.linalg.norm(G - rate * D) / np.linalg.norm(G)) if np.any(G) else 0.0
    return rate, misfit
