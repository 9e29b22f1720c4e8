"""Dense Lindblad generator: superoperator assembly, propagation, steady states.

Vectorisation is row-major, ``vec(rho) = rho.reshape(-1)``, so that
``vec(A rho B) = kron(A, B.T) @ vec(rho)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp
import scipy.sparse as sp
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import IntegrationError, SolverError, TruncationError
from .fock import DensityMatrix, HilbertSpec, Operator, as_array, maximally_mixed

log = logging.getLogger(__name__)

MAX_SUPEROP_DIM = 10_000
DENSE_LIMIT = 60
TAIL_TOL = 1e-8
RESIDUAL_TOL = 1e-9
UNIQUENESS_GAP = 1e-8


@dataclass(frozen=True)
class Channel:
    rate: float
    jump: Operator

    def __post_init__(self):
        if not np.isfinite(self.rate) or self.rate < 0:
            raise ValueError(f"channel rate must be finite and >= 0, got {self.rate}")


@dataclass(frozen=True)
class MasterEquationSpec:
    """Hamiltonian plus Lindblad channels ``(rate, jump)`` on one Hilbert space.

    Each channel contributes ``rate * (J rho J† - {J†J, rho}/2)``.
    """

    spec: HilbertSpec
    channels: tuple[Channel, ...] = ()
    hamiltonian: Optional[Operator] = None

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        d = self.spec.dim
        for ch in self.channels:
            if ch.jump.dim != d:
                raise ValueError(f"jump {ch.jump.label!r} has dim {ch.jump.dim}, expected {d}")
        if self.hamiltonian is not None and self.hamiltonian.dim != d:
            raise ValueError(f"hamiltonian has dim {self.hamiltonian.dim}, expected {d}")

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def rates(self) -> list[float]:
        return [ch.rate for ch in self.channels]

    def max_rate(self) -> float:
        scales = [ch.rate * np.max(np.abs(ch.jump.data)) ** 2 for ch in self.channels]
        if self.hamiltonian is not None:
            scales.append(np.max(np.abs(self.hamiltonian.data)))
        return float(max(scales, default=0.0))

    def min_rate(self) -> float:
        nonzero = [ch.rate for ch in self.channels if ch.rate > 0]
        return float(min(nonzero, default=0.0))

    def effective_hamiltonian(self) -> np.ndarray:
        """``-iH - 1/2 sum rate J†J``, the no-jump part of the generator."""
        d = self.dim
        heff = np.zeros((d, d), dtype=complex)
        if self.hamiltonian is not None:
            heff -= 1j * self.hamiltonian.data
        for ch in self.channels:
            if ch.rate:
                J = ch.jump.data
                heff -= 0.5 * ch.rate * (J.conj().T @ J)
        return heff


@dataclass(frozen=True)
class SteadyStateReport:
    rho: DensityMatrix
    residual: float
    null_space_dim: int
    tail_mass: float
    method: str
    spectral_gap: float = float("nan")
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def populations(self) -> np.ndarray:
        return self.rho.populations


def liouvillian_matrix(me: MasterEquationSpec, max_dim: int = MAX_SUPEROP_DIM) -> np.ndarray:
    """Dense ``dim^2 x dim^2`` generator acting on row-major ``vec(rho)``."""
    d = me.dim
    if d * d > max_dim:
        raise ValueError(
            f"superoperator dimension {d * d} exceeds limit {max_dim}; "
            "pass max_dim to override or use the rate-equation path"
        )
    heff = me.effective_hamiltonian()
    eye = np.eye(d)
    L = np.kron(heff, eye)
    L += np.kron(eye, heff.conj())
    for ch in me.channels:
        if ch.rate:
            J = ch.jump.data
            L += ch.rate * np.kron(J, J.conj())
    return L


def liouvillian_sparse(me: MasterEquationSpec) -> sp.csr_matrix:
    """Sparse form of :func:`liouvillian_matrix`, with no size limit."""
    d = me.dim
    heff = sp.csr_matrix(me.effective_hamiltonian())
    eye = sp.identity(d, format="csr")
    L = sp.kron(heff, eye) + sp.kron(eye, heff.conj())
    for ch in me.channels:
        if ch.rate:
            J = sp.csr_matrix(ch.jump.data)
            L = L + ch.rate * sp.kron(J, J.conj())
    L = sp.csr_matrix(L)
    L.eliminate_zeros()
    return L


def apply_lindbladian(me: MasterEquationSpec, rho) -> np.ndarray:
    """Matrix-form action of the generator, ``d rho / dt``."""
    rho = as_array(rho)
    heff = me.effective_hamiltonian()
    out = heff @ rho + rho @ heff.conj().T
    for ch in me.channels:
        if ch.rate:
            J = ch.jump.data
            out += ch.rate * (J @ rho @ J.conj().T)
    return out


def _rhs_factory(me: MasterEquationSpec):
    d = me.dim
    heff = me.effective_hamiltonian()
    heff_dag = heff.conj().T
    jumps = [(ch.rate, ch.jump.data, ch.jump.data.conj().T) for ch in me.channels if ch.rate]

    def rhs(t, y):
        rho = y.reshape(d, d)
        out = heff @ rho + rho @ heff_dag
        for rate, J, Jd in jumps:
            out += rate * (J @ rho @ Jd)
        return out.reshape(-1)

    return rhs


def _finalize(rho: np.ndarray, t=None, trace_tol: float = 1e-8) -> DensityMatrix:
    rho = 0.5 * (rho + rho.conj().T)
    drift = abs(np.trace(rho) - 1)
    if drift > trace_tol:
        raise IntegrationError(f"trace drift {drift:.3e} exceeds {trace_tol:g}", t=t)
    return DensityMatrix(rho / np.trace(rho).real)


def evolve(me: MasterEquationSpec, rho0, t_grid: Sequence[float], method: str = "rk",
           rtol: float = 1e-9, atol: float = 1e-12,
           max_step: Optional[float] = None) -> list[DensityMatrix]:
    """Propagate ``rho0`` and return the states at every time in ``t_grid``.

    ``method="rk"`` uses an adaptive embedded Runge-Kutta pair (DOP853) with
    the step clamped to ``0.1 / max_rate``; ``method="expm"`` applies exact
    propagators of the time-independent generator, which is the practical
    choice for horizons of hundreds of ``1/gamma`` with rates near ``1e3``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a non-empty 1-D sequence")
    if t_grid[0] != 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must start at 0 and increase strictly")
    rho0 = as_array(rho0)
    d = me.dim
    if rho0.shape != (d, d):
        raise ValueError(f"rho0 has shape {rho0.shape}, expected {(d, d)}")

    if method == "expm":
        L = liouvillian_matrix(me)
        out = [_finalize(rho0.copy(), 0.0)]
        vec = rho0.reshape(-1).astype(complex)
        cache: dict[float, np.ndarray] = {}
        for t_prev, t_next in zip(t_grid[:-1], t_grid[1:]):
            dt = float(t_next - t_prev)
            key = round(dt, 12)
            if key not in cache:
                cache[key] = sla.expm(L * dt)
            vec = cache[key] @ vec
            out.append(_finalize(vec.reshape(d, d), t_next))
        return out

    if method != "rk":
        raise ValueError(f"unknown evolve method {method!r}")
    if max_step is None:
        rate = me.max_rate()
        max_step = 0.1 / rate if rate > 0 else np.inf
    if t_grid.size == 1:
        return [_finalize(rho0.copy(), 0.0)]
    sol = solve_ivp(_rhs_factory(me), (0.0, t_grid[-1]), rho0.reshape(-1).astype(complex),
                    method="DOP853", t_eval=t_grid, rtol=rtol, atol=atol, max_step=max_step)
    if sol.status != 0:
        t_fail = float(sol.t[-1]) if sol.t.size else 0.0
        raise IntegrationError(f"integration failed at t={t_fail:.6g}: {sol.message}", t=t_fail)
    return [_finalize(sol.y[:, k].reshape(d, d), t) for k, t in enumerate(sol.t)]


def _field_tail(rho: np.ndarray, spec: HilbertSpec) -> float:
    d = spec.field_dim
    levels = spec.atom_levels or 1
    diag = np.real(np.diag(rho)).reshape(levels, d)
    return float(diag[:, -1].sum())


def invariant_blocks(L) -> list[np.ndarray]:
    """Index sets of the decoupled diagonal blocks of a dense or sparse ``L`` (exact, by sparsity)."""
    pattern = csr_matrix(L != 0) if not sp.issparse(L) else (L != 0).astype(np.int8).tocsr()
    n_comp, labels = connected_components(pattern, directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(n_comp + 1))
    return [order[bounds[c]:bounds[c + 1]] for c in range(n_comp)]


def _null_space_solve(me: MasterEquationSpec, zero_tol: float):
    L = liouvillian_matrix(me)
    d = me.dim
    scale = max(1.0, float(np.max(np.abs(L))))
    trace_row = np.eye(d).reshape(-1)
    null_dim = 0
    nonzero_min = np.inf
    candidates = []
    for idx in invariant_blocks(L):
        block = L[np.ix_(idx, idx)]
        sv = np.linalg.svd(block, compute_uv=False)
        n_zero = int(np.sum(sv < zero_tol * scale))
        null_dim += n_zero
        if sv.size > n_zero:
            nonzero_min = min(nonzero_min, float(sv[sv.size - n_zero - 1]))
        if n_zero and np.any(trace_row[idx]):
            candidates.append(idx)
    if not candidates:
        raise SolverError("generator has no trace-carrying stationary state")
    idx = candidates[0]
    block = L[np.ix_(idx, idx)]
    bordered = np.vstack([block, trace_row[idx][None, :]])
    rhs = np.zeros(len(idx) + 1, dtype=complex)
    rhs[-1] = 1.0
    x, *_ = np.linalg.lstsq(bordered, rhs, rcond=None)
    vec = np.zeros(d * d, dtype=complex)
    vec[idx] = x
    return vec.reshape(d, d), null_dim, nonzero_min


def population_closed(me: MasterEquationSpec) -> bool:
    """True when populations obey a closed rate equation.

    Holds for a diagonal Hamiltonian and jumps with at most one nonzero
    entry per row and per column (ladder and selective flips qualify).
    """
    if me.hamiltonian is not None:
        H = me.hamiltonian.data
        if np.any(H - np.diag(np.diag(H))):
            return False
    for ch in me.channels:
        nz = ch.jump.data != 0
        if np.any(nz.sum(axis=0) > 1) or np.any(nz.sum(axis=1) > 1):
            return False
    return True


def rate_matrix(me: MasterEquationSpec) -> np.ndarray:
    """Classical generator ``W`` with ``dp/dt = W p`` for population-closed specs."""
    d = me.dim
    W = np.zeros((d, d))
    for ch in me.channels:
        if ch.rate:
            T = ch.rate * np.abs(ch.jump.data) ** 2
            W += T - np.diag(T.sum(axis=0))
    return W


def _rate_equation_solve(me: MasterEquationSpec, zero_tol: float):
    W = rate_matrix(me)
    d = me.dim
    scale = max(1.0, float(np.max(np.abs(W))))
    sv = np.linalg.svd(W, compute_uv=False)
    null_dim = int(np.sum(sv < zero_tol * scale))
    gap = float(sv[d - null_dim - 1]) if d > null_dim else np.inf
    bordered = np.vstack([W, np.ones((1, d))])
    rhs = np.zeros(d + 1)
    rhs[-1] = 1.0
    p, *_ = np.linalg.lstsq(bordered, rhs, rcond=None)
    return np.diag(p).astype(complex), null_dim, gap


def _long_time(me: MasterEquationSpec, t_scale: float, tol: float = 1e-12, max_doublings: int = 40):
    L = liouvillian_matrix(me)
    d = me.dim
    vec = maximally_mixed(d).data.reshape(-1)
    P = sla.expm(L * t_scale)
    for _ in range(max_doublings):
        nxt = P @ vec
        if np.max(np.abs(nxt - vec)) < tol:
            return nxt.reshape(d, d)
        vec = nxt
        P = P @ P
    raise SolverError("long-time integration did not converge")


def steady_state(me: MasterEquationSpec, method: str = "auto", tail_tol: Optional[float] = TAIL_TOL,
                 dense_limit: int = DENSE_LIMIT, zero_tol: float = 1e-11,
                 uniqueness_gap: float = UNIQUENESS_GAP) -> SteadyStateReport:
    """Stationary state of the generator.

    ``method`` is ``"null-space"`` (bordered least squares on the dense
    superoperator, split into its decoupled blocks), ``"rate-equation"``
    (populations only; requires :func:`population_closed`) or ``"auto"``,
    which picks the dense solve up to ``dense_limit`` and the rate equation
    beyond it. A degenerate null space falls back to long-time propagation.

    Raises :class:`TruncationError` when the population of the highest
    retained Fock level exceeds ``tail_tol`` (``None`` disables the check).
    """
    d = me.dim
    if method == "auto":
        if d <= dense_limit or not population_closed(me):
            method = "null-space"
        else:
            method = "rate-equation"
    notes = []
    if method == "null-space":
        rho, null_dim, gap = _null_space_solve(me, zero_tol)
        if null_dim != 1 or gap < uniqueness_gap:
            notes.append(f"degenerate null space (dim={null_dim}, gap={gap:.2e}); long-time fallback")
            log.warning(notes[-1])
            rate = me.min_rate() or 1.0
            rho = _long_time(me, 1.0 / rate)
            method = "long-time"
    elif method == "rate-equation":
        if not population_closed(me):
            raise ValueError("rate-equation path needs a population-closed master equation")
        rho, null_dim, gap = _rate_equation_solve(me, zero_tol)
        if null_dim != 1 or gap < uniqueness_gap:
            raise SolverError(f"rate equation has degenerate null space (dim={null_dim}, gap={gap:.2e})")
    else:
        raise ValueError(f"unknown steady-state method {method!r}")

    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    residual = float(np.max(np.abs(apply_lindbladian(me, rho))))
    if residual > RESIDUAL_TOL:
        raise SolverError(f"steady-state residual {residual:.3e} too large")
    report = SteadyStateReport(
        rho=DensityMatrix(rho),
        residual=residual,
        null_space_dim=null_dim,
        tail_mass=_field_tail(rho, me.spec),
        method=method,
        spectral_gap=gap,
        notes=tuple(notes),
    )
    if tail_tol is not None and report.tail_mass > tail_tol:
        raise TruncationError(
            f"population {report.tail_mass:.3e} on n_max={me.spec.n_max} exceeds {tail_tol:g}; "
            "increase n_max",
            report=report,
        )
    return report
