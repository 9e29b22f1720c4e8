"""Truncated Fock-space algebra: ladder operators, selective flips, states.

Composite spaces are ordered atom ⊗ field, so the basis index of
``|s, n⟩`` is ``s * (n_max + 1) + n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

ATOL_TRACE = 1e-10
ATOL_HERM = 1e-10
ATOL_PSD = 1e-8


@dataclass(frozen=True)
class HilbertSpec:
    """Truncated cavity mode, optionally tensored with an atom."""

    n_max: int
    atom_levels: Optional[int] = None

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max}")
        if self.atom_levels not in (None, 2, 3):
            raise ValueError(f"atom_levels must be 2 or 3, got {self.atom_levels}")

    @property
    def field_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return (self.atom_levels or 1) * self.field_dim

    def field_only(self) -> "HilbertSpec":
        return HilbertSpec(self.n_max)

    def with_atom(self, levels: int) -> "HilbertSpec":
        return HilbertSpec(self.n_max, levels)


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex matrix with a human-readable label."""

    data: np.ndarray
    label: str = ""

    def __post_init__(self):
        arr = np.array(self.data, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"operator must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"operator {self.label!r} has non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def dag(self) -> "Operator":
        label = self.label[:-1] if self.label.endswith("†") else self.label + "†"
        return Operator(self.data.conj().T, label)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return Operator(self.data @ other.data, f"{self.label}·{other.label}")
        return self.data @ np.asarray(other)

    def __add__(self, other: "Operator") -> "Operator":
        return Operator(self.data + other.data, f"({self.label}+{other.label})")

    def __mul__(self, c) -> "Operator":
        return Operator(c * self.data, self.label)

    __rmul__ = __mul__

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.data, self.data.conj().T, atol=atol))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Trace-one, Hermitian, positive semidefinite state.

    Construction validates the invariants; pass ``check=False`` for
    intermediate numerical states that are re-validated later.
    """

    data: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        arr = np.array(self.data, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        if self.check:
            self.validate()

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.data)).copy()

    def validate(self, atol_trace: float = ATOL_TRACE, atol_herm: float = ATOL_HERM,
                 atol_psd: float = ATOL_PSD) -> None:
        rho = self.data
        if not np.all(np.isfinite(rho)):
            raise ValueError("density matrix has non-finite entries")
        tr = np.trace(rho)
        if abs(tr - 1) > atol_trace:
            raise ValueError(f"trace deviates from 1 by {abs(tr - 1):.3e}")
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > atol_herm:
            raise ValueError(f"not Hermitian: max |ρ-ρ†| = {herm:.3e}")
        lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
        if lo < -atol_psd:
            raise ValueError(f"not positive semidefinite: min eigenvalue {lo:.3e}")

    def purity(self) -> float:
        return float(np.real(np.trace(self.data @ self.data)))


ArrayOrState = Union[np.ndarray, DensityMatrix, Operator]


def as_array(x: ArrayOrState) -> np.ndarray:
    if isinstance(x, (DensityMatrix, Operator)):
        return x.data
    return np.asarray(x, dtype=complex)


def annihilation(spec: HilbertSpec) -> Operator:
    """Field annihilation operator, ``a[n-1, n] = sqrt(n)``."""
    d = spec.field_dim
    return Operator(np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1), "a")


def creation(spec: HilbertSpec) -> Operator:
    return annihilation(spec).dag()


def number(spec: HilbertSpec) -> Operator:
    return Operator(np.diag(np.arange(spec.field_dim, dtype=float)), "a†a")


def selective_lowering(k: int, spec: HilbertSpec) -> Operator:
    """Unit-amplitude flip ``|k⟩⟨k+1|``.

    The sqrt(k+1) enhancement of the selective coupling is carried by the
    channel rate, not by this operator.
    """
    if not 0 <= k < spec.n_max:
        raise ValueError(f"selective index k={k} outside [0, {spec.n_max - 1}]")
    op = np.zeros((spec.field_dim, spec.field_dim))
    op[k, k + 1] = 1.0
    return Operator(op, f"a_{k}")


def projector(n: int, spec: HilbertSpec) -> Operator:
    if not 0 <= n <= spec.n_max:
        raise ValueError(f"Fock index {n} outside [0, {spec.n_max}]")
    op = np.zeros((spec.field_dim, spec.field_dim))
    op[n, n] = 1.0
    return Operator(op, f"|{n}⟩⟨{n}|")


def atomic(r: int, s: int, levels: int) -> Operator:
    """Atomic transition operator ``σ_rs = |r⟩⟨s|`` on ``levels`` states."""
    op = np.zeros((levels, levels))
    op[r, s] = 1.0
    return Operator(op, f"σ_{r}{s}")


def tensor(atom_op: Operator | np.ndarray, field_op: Operator | np.ndarray) -> np.ndarray:
    return np.kron(as_array(atom_op), as_array(field_op))


def identity(dim: int) -> Operator:
    return Operator(np.eye(dim), "I")


def fock_state(n: int, spec: HilbertSpec) -> DensityMatrix:
    if not 0 <= n <= spec.n_max:
        raise ValueError(f"Fock index {n} outside [0, {spec.n_max}]")
    rho = np.zeros((spec.field_dim, spec.field_dim), dtype=complex)
    rho[n, n] = 1.0
    return DensityMatrix(rho)


def fock_ket(n: int, dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[n] = 1.0
    return psi


def thermal_populations(nbar: float, n_max: int) -> np.ndarray:
    """Bose-Einstein occupation probabilities, renormalised on ``0..n_max``."""
    if nbar < 0:
        raise ValueError(f"nbar must be >= 0, got {nbar}")
    if nbar == 0:
        p = np.zeros(n_max + 1)
        p[0] = 1.0
        return p
    x = nbar / (1.0 + nbar)
    p = x ** np.arange(n_max + 1)
    return p / p.sum()


def thermal_state(nbar: float, spec: HilbertSpec) -> DensityMatrix:
    return DensityMatrix(np.diag(thermal_populations(nbar, spec.n_max)).astype(complex))


def diagonal_state(populations) -> DensityMatrix:
    p = np.asarray(populations, dtype=float)
    return DensityMatrix(np.diag(p / p.sum()).astype(complex))


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


def partial_trace_atom(rho: np.ndarray, levels: int) -> np.ndarray:
    """Reduce an atom ⊗ field density matrix to the field."""
    rho = np.asarray(rho)
    d = rho.shape[0] // levels
    return np.einsum("aiaj->ij", rho.reshape(levels, d, levels, d))


def trace_distance(rho: ArrayOrState, sigma: ArrayOrState) -> float:
    diff = as_array(rho) - as_array(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())
