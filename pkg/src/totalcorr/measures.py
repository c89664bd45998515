"""Correlation functionals evaluated directly on states.

All logarithms are base 2, so every quantity is reported in bits and
the qubit bounds come out as integers or half-integers. For mixed
inputs the functions return the direct functional value; the roof
extension is a separate, explicit call in :mod:`totalcorr.roof`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .core import (
    DensityMatrix,
    RegisterShape,
    ResourceLimitError,
    SupportError,
    partial_trace_matrix,
    pure_marginal,
)
from .states import PureState, State, as_density

EIG_CLAMP = 1e-12
SUPPORT_TOL = 1e-10
SUBSET_SUM_MAX_SITES = 12


def _entropy_of_eigenvalues(vals: np.ndarray) -> float:
    vals = np.asarray(vals, dtype=float)
    vals = vals[vals > EIG_CLAMP]
    return float(-(vals * np.log2(vals)).sum()) if vals.size else 0.0


def _entropy_matrix(mat: np.ndarray) -> float:
    return _entropy_of_eigenvalues(np.linalg.eigvalsh(mat))


def _marginal(state: State, keep: Iterable[int]) -> np.ndarray:
    """Reduced matrix on `keep`; contracts amplitudes directly for pure input."""
    if isinstance(state, PureState):
        return pure_marginal(state.amplitudes, state.shape.dims, keep)
    return partial_trace_matrix(state.matrix, state.shape.dims, keep)


def _check_density_input(rho: DensityMatrix, tol: float = 1e-8) -> None:
    mat = rho.matrix
    if np.max(np.abs(mat - mat.conj().T)) > tol:
        raise ValueError("input is not Hermitian")
    if abs(np.trace(mat) - 1.0) > tol:
        raise ValueError("input trace differs from 1")


def von_neumann_entropy(rho: State) -> float:
    """S(rho) = -Tr rho log2 rho; eigenvalues below the clamp contribute 0."""
    if isinstance(rho, PureState):
        return 0.0
    _check_density_input(rho)
    return _entropy_matrix(rho.matrix)


def linear_entropy(rho: State) -> float:
    """1 - Tr rho^2, in [0, 1 - 1/D]."""
    if isinstance(rho, PureState):
        return 0.0
    _check_density_input(rho)
    return float(1.0 - np.real(np.trace(rho.matrix @ rho.matrix)))


def mutual_information(state: State, a: Iterable[int], b: Iterable[int]) -> float:
    """I(A:B) = S(A) + S(B) - S(AB), evaluated on the reduced state."""
    a = tuple(sorted({int(i) for i in a}))
    b = tuple(sorted({int(i) for i in b}))
    if not a or not b:
        raise ValueError("index sets must be non-empty")
    if set(a) & set(b):
        raise ValueError(f"index sets overlap: {a} and {b}")
    s_a = _entropy_matrix(_marginal(state, a))
    s_b = _entropy_matrix(_marginal(state, b))
    s_ab = _entropy_matrix(_marginal(state, a + b))
    return s_a + s_b - s_ab


def pairwise_probe(state: State, i: int, j: int) -> float:
    """P(i, j) = I(i:j)/2, the two-site total-correlation probe."""
    return 0.5 * mutual_information(state, (i,), (j,))


def _single_entropies(state: State) -> list[float]:
    n = state.shape.nsites
    return [_entropy_matrix(_marginal(state, (i,))) for i in range(n)]


def measure_M(state: State) -> float:
    """Sum of the pairwise probe over all unordered subsystem pairs."""
    n = state.shape.nsites
    if n < 2:
        raise ValueError("pairwise measure requires at least 2 subsystems")
    singles = _single_entropies(state)
    total = 0.0
    for i, j in combinations(range(n), 2):
        s_ij = _entropy_matrix(_marginal(state, (i, j)))
        total += 0.5 * (singles[i] + singles[j] - s_ij)
    return total


def measure_O(state: State) -> float:
    """Global correlations: (sum_i S(rho_i) - S(rho)) / 2."""
    return 0.5 * (sum(_single_entropies(state)) - von_neumann_entropy(state))


def measure_S(state: State) -> float:
    """Combined total-correlation measure (O + M)/2."""
    return 0.5 * (measure_O(state) + measure_M(state))


def measure_MW(state: State) -> float:
    """Sum of single-site linear entropies."""
    total = 0.0
    for i in range(state.shape.nsites):
        red = _marginal(state, (i,))
        total += 1.0 - float(np.real(np.trace(red @ red)))
    return total


def bipartite_correlation(state: State, part: Iterable[int]) -> float:
    """S(rho_part) + S(rho_complement) - S(rho) across one bipartition."""
    n = state.shape.nsites
    part = tuple(sorted({int(i) for i in part}))
    rest = tuple(i for i in range(n) if i not in set(part))
    if not part or not rest:
        raise ValueError("bipartition must be proper and non-empty")
    s_p = _entropy_matrix(_marginal(state, part))
    s_r = _entropy_matrix(_marginal(state, rest))
    return s_p + s_r - von_neumann_entropy(state)


def subset_correlation_sum(state: State) -> float:
    """Sum of bipartite_correlation over all bipartitions, each counted once.

    A subset and its complement describe the same bipartition; the sum runs
    over the 2^(N-1) - 1 subsets containing subsystem 0 (full set excluded).
    """
    n = state.shape.nsites
    if n < 2:
        raise ValueError("subset sum requires at least 2 subsystems")
    if n > SUBSET_SUM_MAX_SITES:
        raise ResourceLimitError(
            f"subset sum over {2 ** (n - 1) - 1} bipartitions exceeds the "
            f"{SUBSET_SUM_MAX_SITES}-subsystem cap"
        )
    total = 0.0
    for mask in range(2 ** (n - 1) - 1):
        part = (0,) + tuple(i for i in range(1, n) if mask >> (i - 1) & 1)
        total += bipartite_correlation(state, part)
    return total


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Tr rho (log2 rho - log2 sigma); requires supp(rho) within supp(sigma)."""
    if rho.shape != sigma.shape:
        raise ValueError("states must share one register shape")
    svals, svecs = np.linalg.eigh(sigma.matrix)
    on_support = svals > SUPPORT_TOL
    overlaps = np.real(np.einsum("ik,ij,jk->k", svecs.conj(), rho.matrix, svecs))
    leak = float(overlaps[~on_support].sum())
    if leak > SUPPORT_TOL:
        raise SupportError(f"support violation: weight {leak:.3e} outside supp(sigma)")
    tr_rho_log_rho = -_entropy_matrix(rho.matrix)
    tr_rho_log_sigma = float((overlaps[on_support] * np.log2(svals[on_support])).sum())
    return tr_rho_log_rho - tr_rho_log_sigma


def measure_S_form2(state: State) -> float:
    """Relative-entropy form of measure_S.

    [sum_{i<j} S(rho_ij || rho_i x rho_j) + S(rho || rho_1 x ... x rho_N)] / 4;
    agrees with measure_S to high precision.
    """
    n = state.shape.nsites
    if n < 2:
        raise ValueError("requires at least 2 subsystems")
    shape = state.shape
    singles = [_marginal(state, (i,)) for i in range(n)]
    total = 0.0
    for i, j in combinations(range(n), 2):
        pair_shape = shape.restrict((i, j))
        total += relative_entropy(
            DensityMatrix(pair_shape, _marginal(state, (i, j))),
            DensityMatrix(pair_shape, np.kron(singles[i], singles[j])),
        )
    full_product = reduce(np.kron, singles)
    total += relative_entropy(as_density(state), DensityMatrix(shape, full_product))
    return total / 4.0


def bound_M(n: int, d: int = 2) -> float:
    """Normalization bound C(n,2) log2 d / (2 - delta_{n,2}) for the pairwise sum."""
    if n < 2 or d < 2:
        raise ValueError("requires n >= 2 and d >= 2")
    return math.comb(n, 2) * math.log2(d) / (2 - (n == 2))


def bound_S(n: int, d: int = 2) -> float:
    """Normalization bound (C(n,2)/(2 - delta_{n,2}) + n/2)/2 * log2 d."""
    if n < 2 or d < 2:
        raise ValueError("requires n >= 2 and d >= 2")
    return (math.comb(n, 2) / (2 - (n == 2)) + n / 2) / 2 * math.log2(d)


def ssa_check(rho: State) -> float:
    """Strong-subadditivity residual S(XY) + S(YZ) - S(Y) - S(XYZ) >= 0.

    Requires exactly three subsystems; group indices beforehand if needed.
    """
    if rho.shape.nsites != 3:
        raise ValueError("ssa_check requires exactly 3 subsystems")
    s_xy = _entropy_matrix(_marginal(rho, (0, 1)))
    s_yz = _entropy_matrix(_marginal(rho, (1, 2)))
    s_y = _entropy_matrix(_marginal(rho, (1,)))
    return s_xy + s_yz - s_y - von_neumann_entropy(rho)


DIRECT_MEASURES = {
    "M": measure_M,
    "O": measure_O,
    "S": measure_S,
    "MW": measure_MW,
}


def direct_measure(state: State, name: str) -> float:
    """Direct value of a named measure (M, O, S or MW) on a state."""
    try:
        fn = DIRECT_MEASURES[name]
    except KeyError:
        raise ValueError(f"unknown measure {name!r}; choose from {sorted(DIRECT_MEASURES)}")
    return fn(state)


@dataclass(frozen=True)
class MeasureReport:
    """All correlation quantities for one state, in bits."""

    shape: RegisterShape
    pair_values: dict[tuple[int, int], float]
    O: float
    M: float
    S: float
    MW: float
    bound_M: float
    bound_S: float


def measure_report(state: State) -> MeasureReport:
    """Evaluate every measure once and collect them in a report.

    Bounds use the largest local dimension, which stays an upper bound
    for mixed-dimension registers.
    """
    n = state.shape.nsites
    if n < 2:
        raise ValueError("report requires at least 2 subsystems")
    singles = _single_entropies(state)
    pair_values = {}
    for i, j in combinations(range(n), 2):
        s_ij = _entropy_matrix(_marginal(state, (i, j)))
        pair_values[(i, j)] = 0.5 * (singles[i] + singles[j] - s_ij)
    m_val = sum(pair_values.values())
    o_val = 0.5 * (sum(singles) - von_neumann_entropy(state))
    d = max(state.shape.dims)
    return MeasureReport(
        shape=state.shape,
        pair_values=pair_values,
        O=o_val,
        M=m_val,
        S=0.5 * (o_val + m_val),
        MW=measure_MW(state),
        bound_M=bound_M(n, d),
        bound_S=bound_S(n, d),
    )
