"""Constructors for named multi-qubit states, parametric families,
ensembles and random states, plus the state file format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .core import DensityMatrix, RegisterShape, _frozen_complex, partial_trace_matrix

NORM_TOL = 1e-10


@dataclass(frozen=True)
class PureState:
    """Normalized complex amplitude vector over a register."""

    shape: RegisterShape
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = _frozen_complex(self.amplitudes, (self.shape.dim,))
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized: |psi| = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)


State = Union[PureState, DensityMatrix]


@dataclass(frozen=True)
class Ensemble:
    """Probability-weighted list of states sharing one register shape."""

    weights: tuple[float, ...]
    members: tuple[State, ...]

    def __post_init__(self) -> None:
        weights = tuple(float(w) for w in self.weights)
        members = tuple(self.members)
        if not members:
            raise ValueError("ensemble must have at least one member")
        if len(weights) != len(members):
            raise ValueError("weights and members differ in length")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be non-negative")
        if abs(sum(weights) - 1.0) > NORM_TOL:
            raise ValueError(f"weights must sum to 1, got {sum(weights)!r}")
        shape = members[0].shape
        if any(m.shape != shape for m in members):
            raise ValueError("ensemble members must share one register shape")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "members", members)

    @property
    def shape(self) -> RegisterShape:
        return self.members[0].shape


def _qubits(n: int) -> RegisterShape:
    return RegisterShape((2,) * n)


def ghz(n: int) -> PureState:
    """(|0...0> + |1...1>)/sqrt(2) on n qubits."""
    if n < 2:
        raise ValueError("ghz requires n >= 2")
    amps = np.zeros(2 ** n, dtype=complex)
    amps[0] = amps[-1] = 1 / math.sqrt(2)
    return PureState(_qubits(n), amps)


def epr() -> PureState:
    """Two-qubit maximally entangled state; identical to ghz(2)."""
    return ghz(2)


def w(n: int) -> PureState:
    """Equal superposition of the n Hamming-weight-1 basis states."""
    if n < 2:
        raise ValueError("w requires n >= 2")
    amps = np.zeros(2 ** n, dtype=complex)
    for j in range(n):
        amps[1 << j] = 1 / math.sqrt(n)
    return PureState(_qubits(n), amps)


def wbar(n: int) -> PureState:
    """Equal superposition of the n Hamming-weight-(n-1) basis states."""
    if n < 2:
        raise ValueError("wbar requires n >= 2")
    amps = np.zeros(2 ** n, dtype=complex)
    full = 2 ** n - 1
    for j in range(n):
        amps[full ^ (1 << j)] = 1 / math.sqrt(n)
    return PureState(_qubits(n), amps)


def cluster(n: int) -> PureState:
    """Four-term cluster-type state on an even number n >= 4 of qubits.

    (|0>^n + |0>^{n/2}|1>^{n/2} + |1>^{n/2}|0>^{n/2} - |1>^n)/2; the 1/2
    prefactor is forced by normalization of the four orthogonal terms.
    """
    if n < 4 or n % 2:
        raise ValueError("cluster requires an even n >= 4")
    h = n // 2
    amps = np.zeros(2 ** n, dtype=complex)
    low = (1 << h) - 1
    amps[0] = 0.5
    amps[low] = 0.5
    amps[low << h] = 0.5
    amps[(1 << n) - 1] = -0.5
    return PureState(_qubits(n), amps)


def family1(x: float, n: int) -> PureState:
    """sqrt(x)*GHZ_n + sqrt(1-x)*W_n (orthogonal branches, n >= 3)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if n < 3:
        raise ValueError("family1 requires n >= 3")
    amps = math.sqrt(x) * ghz(n).amplitudes + math.sqrt(1 - x) * w(n).amplitudes
    return PureState(_qubits(n), amps)


def family2(x: float, n: int) -> PureState:
    """sqrt(x)*W_n + sqrt(1-x)*Wbar_n (n >= 3; at n = 2 the branches coincide)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if n < 3:
        raise ValueError("family2 requires n >= 3 (W and Wbar coincide at n = 2)")
    amps = math.sqrt(x) * w(n).amplitudes + math.sqrt(1 - x) * wbar(n).amplitudes
    return PureState(_qubits(n), amps)


def product(states: Sequence[PureState]) -> PureState:
    """Tensor product of pure states, left to right."""
    if not states:
        raise ValueError("product requires at least one state")
    amps = states[0].amplitudes
    dims = list(states[0].shape.dims)
    for s in states[1:]:
        amps = np.kron(amps, s.amplitudes)
        dims.extend(s.shape.dims)
    return PureState(RegisterShape(tuple(dims)), amps)


def dm(psi: PureState) -> DensityMatrix:
    """Rank-1 density matrix |psi><psi|."""
    return DensityMatrix(psi.shape, np.outer(psi.amplitudes, psi.amplitudes.conj()))


def as_density(state: State) -> DensityMatrix:
    return dm(state) if isinstance(state, PureState) else state


def mix(e: Ensemble) -> DensityMatrix:
    """Weighted mixture sum_i p_i rho_i of the ensemble members."""
    out = np.zeros((e.shape.dim,) * 2, dtype=complex)
    for p, member in zip(e.weights, e.members):
        out += p * as_density(member).matrix
    return DensityMatrix(e.shape, out)


def flagged_mixture(e: Ensemble) -> DensityMatrix:
    """sum_i p_i rho_i (x) |i><i| with one appended flag subsystem.

    The flag dimension is max(k, 2) so the result remains a valid
    register even for a single member.
    """
    k = len(e.members)
    fdim = max(k, 2)
    d = e.shape.dim
    out = np.zeros((d * fdim, d * fdim), dtype=complex)
    for i, (p, member) in enumerate(zip(e.weights, e.members)):
        flag = np.zeros((fdim, fdim), dtype=complex)
        flag[i, i] = 1.0
        out += p * np.kron(as_density(member).matrix, flag)
    return DensityMatrix(RegisterShape(e.shape.dims + (fdim,)), out)


def random_pure(shape: RegisterShape, seed: int) -> PureState:
    """Haar-distributed pure state, deterministic per seed."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(shape.dim) + 1j * rng.standard_normal(shape.dim)
    return PureState(shape, v / np.linalg.norm(v))


def random_density(shape: RegisterShape, rank: int, seed: int) -> DensityMatrix:
    """Random rank-limited mixture of Haar pure states, deterministic per seed."""
    d = shape.dim
    if not 1 <= rank <= d:
        raise ValueError(f"rank must lie in 1..{d}, got {rank}")
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(rank))
    out = np.zeros((d, d), dtype=complex)
    for p in weights:
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        v /= np.linalg.norm(v)
        out += p * np.outer(v, v.conj())
    return DensityMatrix(shape, out)


# --- state file format -------------------------------------------------

def _pairs(arr: np.ndarray):
    return [[float(z.real), float(z.imag)] for z in arr]


def save_state(state: State, path) -> None:
    """Write a state as JSON with dims plus amplitudes or matrix."""
    doc: dict = {"dims": list(state.shape.dims)}
    if isinstance(state, PureState):
        doc["amplitudes"] = _pairs(state.amplitudes)
    else:
        doc["matrix"] = [_pairs(row) for row in state.matrix]
    Path(path).write_text(json.dumps(doc))


def load_state(path) -> State:
    """Read a state file written by :func:`save_state`."""
    doc = json.loads(Path(path).read_text())
    shape = RegisterShape(tuple(int(d) for d in doc["dims"]))
    if "amplitudes" in doc:
        amps = np.array([complex(re, im) for re, im in doc["amplitudes"]])
        return PureState(shape, amps)
    if "matrix" in doc:
        mat = np.array([[complex(re, im) for re, im in row] for row in doc["matrix"]])
        return DensityMatrix(shape, mat)
    raise ValueError("state file must contain 'amplitudes' or 'matrix'")
