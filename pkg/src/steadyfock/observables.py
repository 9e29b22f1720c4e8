"""Observables of the cavity field: photon statistics, Wigner functions, fidelities.

Phase space uses the complex amplitude ``alpha = x + i p`` and the
normalisation ``W(alpha) = (2/pi) Tr[rho D(alpha) P D(alpha)†]`` with
``P`` the photon-number parity, so ``∫ W dx dp = 1`` and the vacuum has
``W(0) = 2/pi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .fock import ArrayOrState, DensityMatrix, as_array

MIN_RESOLUTION = 32
NONCLASSICAL_THRESHOLD = -1e-3


@dataclass(frozen=True)
class GridSpec:
    x_range: tuple[float, float] = (-6.0, 6.0)
    p_range: tuple[float, float] = (-6.0, 6.0)
    resolution: int = 201

    def __post_init__(self):
        if self.resolution < MIN_RESOLUTION:
            raise ValueError(f"grid resolution {self.resolution} below minimum {MIN_RESOLUTION}")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.resolution)

    @property
    def ps(self) -> np.ndarray:
        return np.linspace(*self.p_range, self.resolution)

    @property
    def cell_area(self) -> float:
        dx = (self.x_range[1] - self.x_range[0]) / (self.resolution - 1)
        dp = (self.p_range[1] - self.p_range[0]) / (self.resolution - 1)
        return dx * dp


@dataclass(frozen=True, eq=False)
class WignerGrid:
    grid: GridSpec
    values: np.ndarray  # values[i, j] = W(x_i + i p_j)
    imag_residue: float  # bounded by the anti-Hermitian part of rho

    @property
    def x_range(self):
        return self.grid.x_range

    @property
    def p_range(self):
        return self.grid.p_range

    @property
    def resolution(self) -> int:
        return self.grid.resolution

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    @property
    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_area)

    @property
    def negativity_volume(self) -> float:
        """``∫|W| - 1`` over the grid; zero for non-negative functions."""
        return float(np.abs(self.values).sum() * self.grid.cell_area - 1.0)

    def to_csv(self, path) -> None:
        xs, ps = self.grid.xs, self.grid.ps
        with open(path, "w") as fh:
            fh.write("x,p,W\n")
            for i, x in enumerate(xs.tolist()):
                for p, w in zip(ps.tolist(), self.values[i].tolist()):
                    fh.write(f"{x!r},{p!r},{w!r}\n")

    def to_matrix_file(self, path) -> None:
        """Dense matrix (rows: x, columns: p) under a one-line header."""
        g = self.grid
        x0, x1 = map(float, g.x_range)
        p0, p1 = map(float, g.p_range)
        header = f"x_range={x0!r}:{x1!r} p_range={p0!r}:{p1!r} resolution={g.resolution}"
        np.savetxt(Path(path), self.values, fmt="%.17g", header=header)

    @classmethod
    def from_matrix_file(cls, path) -> "WignerGrid":
        with open(path) as fh:
            header = fh.readline().lstrip("#").split()
        fields = dict(item.split("=") for item in header)
        xr = tuple(float(v) for v in fields["x_range"].split(":"))
        pr = tuple(float(v) for v in fields["p_range"].split(":"))
        values = np.loadtxt(path)
        return cls(GridSpec(xr, pr, int(fields["resolution"])), values, 0.0)


def laguerre_envelopes(x: np.ndarray, dim: int, offsets=None):
    """Yield ``(k, F)`` with ``F[n] = sqrt(n!/(n+k)!) e^{-x/2} x^{k/2} L_n^{(k)}(x)``.

    ``k`` runs over ``offsets`` (default ``0..dim-1``).

    ``F[n]`` is ``|<n+k|D(beta)|n>|`` up to phase for ``x = |beta|^2``, so all
    values are bounded by one. The forward three-term recurrence in ``n`` is
    applied to the normalised functions directly and is stable for ``x >= 0``.
    Values underflow to zero once ``x`` exceeds about 1400.
    """
    x = np.asarray(x, dtype=float)
    half_log_x = 0.5 * np.log(np.where(x > 0, x, 1.0))
    for k in (range(dim) if offsets is None else offsets):
        size = dim - k
        F = np.empty((size,) + x.shape)
        if k == 0:
            F[0] = np.exp(-0.5 * x)
        else:
            F[0] = np.where(x > 0, np.exp(-0.5 * x + k * half_log_x - 0.5 * math.lgamma(k + 1)), 0.0)
        if size > 1:
            F[1] = F[0] * (1 + k - x) / math.sqrt(k + 1)
        for n in range(1, size - 1):
            a = math.sqrt((n + 1) / (n + k + 1))
            b = math.sqrt(n * (n + 1) / ((n + k) * (n + k + 1)))
            F[n + 1] = ((2 * n + 1 + k - x) * a * F[n] - (n + k) * b * F[n - 1]) / (n + 1)
        yield k, F


def displaced_parity(rho: ArrayOrState, alpha: np.ndarray) -> np.ndarray:
    """``Tr[rho D(alpha) P D(alpha)†]``, real by construction.

    ``D(alpha) P D(-alpha) = D(2 alpha) P``, and the matrix elements of
    ``D(beta)`` are associated Laguerre functions of ``|beta|^2`` times a
    phase ``e^{i k arg beta}``, which gives
    ``sum_n (-1)^n [rho_nn F0_n + 2 Re sum_k rho_{n,n+k} e^{i k theta} Fk_n]``.
    """
    rho = as_array(rho)
    dim = rho.shape[0]
    beta = 2 * np.asarray(alpha, dtype=complex)
    x = np.abs(beta) ** 2
    phase = np.exp(1j * np.angle(beta))
    out = np.zeros(beta.shape)
    # Offsets with an all-zero diagonal contribute nothing.
    offsets = [k for k in range(dim) if np.any(np.diagonal(rho, offset=k))]
    for k, F in laguerre_envelopes(x, dim, offsets):
        n = np.arange(dim - k)
        coeff = ((-1.0) ** n) * np.diagonal(rho, offset=k)
        s = np.tensordot(coeff, F, axes=(0, 0))
        if k == 0:
            out += s.real
        else:
            out += 2 * np.real(s * phase ** k)
    return out


def wigner(rho: ArrayOrState, grid: Optional[GridSpec] = None, chunk: int = 16) -> WignerGrid:
    grid = grid or GridSpec()
    xs, ps = grid.xs, grid.ps
    rho = as_array(rho)
    values = np.empty((xs.size, ps.size))
    for start in range(0, xs.size, chunk):
        alpha = xs[start:start + chunk, None] + 1j * ps[None, :]
        values[start:start + chunk] = (2 / np.pi) * displaced_parity(rho, alpha)
    herm = float(np.max(np.abs(rho - rho.conj().T))) if rho.size else 0.0
    return WignerGrid(grid, values, herm)


def wigner_fock_closed_form(n: int, alpha) -> np.ndarray:
    """``(2/pi) (-1)^n e^{-2|alpha|^2} L_n(4|alpha|^2)`` for the Fock state ``|n>``."""
    from scipy.special import eval_laguerre

    r2 = np.abs(np.asarray(alpha)) ** 2
    return (2 / np.pi) * (-1) ** n * np.exp(-2 * r2) * eval_laguerre(n, 4 * r2)


@dataclass(frozen=True)
class FockFidelity:
    n: int
    sqrt: float
    overlap: float

    def __iter__(self):
        return iter((self.sqrt, self.overlap))


def fock_fidelity(rho: ArrayOrState, n: int) -> FockFidelity:
    """Fidelity with the pure target ``|n>``.

    ``sqrt`` is ``sqrt(<n|rho|n>)``, the root fidelity specialised to a
    pure target and the default reported convention. ``overlap`` is ``<n|rho|n>``.
    """
    rho = as_array(rho)
    if not 0 <= n < rho.shape[0]:
        raise ValueError(f"target |{n}> outside the truncated space of dim {rho.shape[0]}")
    overlap = float(np.clip(rho[n, n].real, 0.0, 1.0))
    return FockFidelity(n, math.sqrt(overlap), overlap)


def photon_moments(rho: ArrayOrState) -> tuple[float, float]:
    p = np.real(np.diag(as_array(rho)))
    n = np.arange(p.size)
    return float(n @ p), float((n ** 2) @ p)


def mandel_q(rho: ArrayOrState) -> float:
    """``(Var n - <n>) / <n>``; NaN for the vacuum, where it is undefined."""
    mean, second = photon_moments(rho)
    if mean <= 0:
        return float("nan")
    return (second - mean ** 2 - mean) / mean


def purity(rho: ArrayOrState) -> float:
    rho = as_array(rho)
    return float(np.real(np.vdot(rho.conj().T, rho)))


@dataclass(frozen=True)
class NonclassicalityReport:
    nonclassical: bool
    min_value: float
    negativity_volume: float
    threshold: float = NONCLASSICAL_THRESHOLD


def classify_nonclassical(w: WignerGrid, threshold: float = NONCLASSICAL_THRESHOLD) -> NonclassicalityReport:
    return NonclassicalityReport(w.min_value < threshold, w.min_value, w.negativity_volume, threshold)


@dataclass(frozen=True)
class StateMetrics:
    populations: np.ndarray
    target: int
    fidelity: FockFidelity
    purity: float
    mandel_q: float
    mean_photon_number: float
    wigner_min: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "target": self.target,
            "fidelity_sqrt": self.fidelity.sqrt,
            "fidelity_overlap": self.fidelity.overlap,
            "fidelity_convention": "sqrt",
            "purity": self.purity,
            "mandel_q": self.mandel_q,
            "mean_photon_number": self.mean_photon_number,
            "wigner_min": self.wigner_min,
        }


def state_metrics(rho: ArrayOrState, target: int, w: Optional[WignerGrid] = None) -> StateMetrics:
    arr = as_array(rho)
    mean, _ = photon_moments(arr)
    return StateMetrics(
        populations=np.real(np.diag(arr)).copy(),
        target=target,
        fidelity=fock_fidelity(arr, target),
        purity=purity(arr),
        mandel_q=mandel_q(arr),
        mean_photon_number=mean,
        wigner_min=None if w is None else w.min_value,
    )


def coherent_populations(alpha: complex, n_max: int) -> np.ndarray:
    """Poissonian photon-number distribution of a coherent state."""
    from scipy.stats import poisson

    return poisson.pmf(np.arange(n_max + 1), abs(alpha) ** 2)


def rotate(rho: ArrayOrState, theta: float) -> DensityMatrix:
    """``exp(i theta a†a) rho exp(-i theta a†a)``."""
    rho = as_array(rho)
    phase = np.exp(1j * theta * np.arange(rho.shape[0]))
    return DensityMatrix(phase[:, None] * rho * phase.conj()[None, :])
