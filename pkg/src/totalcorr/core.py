"""Dense complex linear algebra over multi-qudit registers.

Conventions used throughout the package:

- subsystem 0 is the most significant digit of the computational-basis
  index (left-to-right ket order),
- matrices are dense row-major ``numpy`` arrays of ``complex128``,
- partial traces preserve the original register order of the kept
  subsystems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-10


class ResourceLimitError(RuntimeError):
    """A request exceeds the configured size caps."""


class SupportError(ValueError):
    """A relative-entropy support condition is violated."""


def _check_keep(keep: Iterable[int], nsites: int) -> tuple[int, ...]:
    keep = sorted({int(i) for i in keep})
    if not keep:
        raise ValueError("subsystem selection must be non-empty")
    if keep[0] < 0 or keep[-1] >= nsites:
        raise ValueError(f"subsystem index out of range for {nsites} subsystems: {keep}")
    return tuple(keep)


@dataclass(frozen=True)
class RegisterShape:
    """Ordered local dimensions of a multi-qudit register."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValueError("register needs at least one subsystem")
        if any(d < 2 for d in dims):
            raise ValueError(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        """Total Hilbert-space dimension."""
        return math.prod(self.dims)

    @property
    def nsites(self) -> int:
        return len(self.dims)

    def restrict(self, keep: Iterable[int]) -> "RegisterShape":
        """Shape of the register reduced to `keep`, original order preserved."""
        keep = _check_keep(keep, self.nsites)
        return RegisterShape(tuple(self.dims[i] for i in keep))


def _frozen_complex(arr, shape) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    if out.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {out.shape}")
    if not np.all(np.isfinite(out.view(float))):
        raise ValueError("entries must be finite")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite state over a register.

    Construction checks only dimensions and finiteness; the numeric
    invariants are checked by :func:`validate_density`.
    """

    shape: RegisterShape
    matrix: np.ndarray

    def __post_init__(self) -> None:
        d = self.shape.dim
        object.__setattr__(self, "matrix", _frozen_complex(self.matrix, (d, d)))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; dimensions multiply."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace_matrix(mat: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not in `keep` from a raw matrix."""
    dims = [int(d) for d in dims]
    keep = _check_keep(keep, len(dims))
    out = np.asarray(mat, dtype=complex)
    drop = [i for i in range(len(dims)) if i not in set(keep)]
    for idx in sorted(drop, reverse=True):
        left = math.prod(dims[:idx])
        d = dims[idx]
        right = math.prod(dims[idx + 1:])
        t = out.reshape(left, d, right, left, d, right)
        out = np.einsum("aibcid->abcd", t).reshape(left * right, left * right)
        dims.pop(idx)
    return out


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the subsystems in `keep` (original order preserved)."""
    keep = _check_keep(keep, rho.shape.nsites)
    reduced = partial_trace_matrix(rho.matrix, rho.shape.dims, keep)
    return DensityMatrix(rho.shape.restrict(keep), reduced)


def pure_marginal(amplitudes: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Reduced density matrix of a pure state, contracted from its amplitudes.

    Avoids materializing the full D x D matrix, which keeps sweeps over
    large registers cheap.
    """
    dims = tuple(int(d) for d in dims)
    keep = _check_keep(keep, len(dims))
    t = np.asarray(amplitudes, dtype=complex).reshape(dims)
    t = np.moveaxis(t, keep, range(len(keep)))
    dk = math.prod(dims[i] for i in keep)
    flat = t.reshape(dk, -1)
    return flat @ flat.conj().T


def hermitian_eigenvalues(h: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, ascending.

    Raises ValueError when the input deviates from Hermiticity by more
    than `tol` entrywise.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    dev = np.max(np.abs(h - h.conj().T))
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3e})")
    return np.linalg.eigvalsh(h)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the density-matrix invariant checks."""

    ok: bool
    violations: tuple[str, ...]
    hermiticity_deviation: float
    trace_deviation: float
    min_eigenvalue: float


def validate_density(rho: DensityMatrix, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check Hermiticity, unit trace and positivity at tolerance `tol`."""
    mat = rho.matrix
    violations = []
    herm_dev = float(np.max(np.abs(mat - mat.conj().T)))
    if herm_dev > tol:
        violations.append(f"not Hermitian: max |rho - rho^dag| = {herm_dev:.3e}")
    trace_dev = float(abs(np.trace(mat) - 1.0))
    if trace_dev > tol:
        violations.append(f"trace differs from 1 by {trace_dev:.3e}")
    sym = (mat + mat.conj().T) / 2
    min_eig = float(np.linalg.eigvalsh(sym)[0])
    if min_eig < -tol:
        violations.append(f"negative eigenvalue {min_eig:.3e}")
    return ValidationReport(
        ok=not violations,
        violations=tuple(violations),
        hermiticity_deviation=herm_dev,
        trace_deviation=trace_dev,
        min_eigenvalue=min_eig,
    )
