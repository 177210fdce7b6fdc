"""Extended observability matrix, block operators and least-squares reconstruction.

Ranks of E and of the block stack are decided against a machine-precision
threshold ``max(rows, cols) * eps`` unless a relative tolerance is passed.
The grid operators produce E with condition numbers around 1e12, which a
fixed 1e-10 threshold would misread as rank deficiency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import SystemModel
from .subspace import DimensionError, as_matrix, check_tol, machine_tol


def _resolve_tol(tol, shape) -> float:
    return machine_tol(shape) if tol is None else check_tol(tol)


def _spectrum(M: np.ndarray, tol: float):
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return s, 0, np.inf
    rank = int(np.count_nonzero(s > tol * s[0]))
    return s, rank, float(s[0] / s[rank - 1])


@dataclass(frozen=True, eq=False)
class ExtendedMatrix:
    """E with rows ``(P b_i, P L_1 b_i, ..., P L_{T-1} ... L_1 b_i)``.

    `condition` is taken over the nonzero singular values only; check
    `deficient` before reading it as the condition of a full-rank problem.
    """

    E: np.ndarray
    T: int
    rank: int
    condition: float
    singular_values: np.ndarray
    tol: float

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @property
    def deficient(self) -> bool:
        return self.rank < self.n


def _check_horizon(system: SystemModel, T: int):
    if T < 1:
        raise ValueError("T must be at least 1")
    available = system.steps_available
    if available is not None and available < T - 1:
        raise ValueError(
            f"time-varying system provides {available} operators, T={T} needs {T - 1}"
        )


def build_extended(system: SystemModel, T: int, tol: float | None = None) -> ExtendedMatrix:
    _check_horizon(system, T)
    P = system.projection
    blocks = []
    M = np.eye(system.n)
    for t in range(1, T + 1):
        blocks.append((P @ M).T)
        if t < T:
            M = system.operator(t) @ M
    E = np.hstack(blocks)
    tol = _resolve_tol(tol, E.shape)
    s, rank, cond = _spectrum(E, tol)
    E.setflags(write=False)
    return ExtendedMatrix(E, T, rank, cond, s, tol)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States x_1..x_T stored as the rows of a T x n array."""

    states: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", as_matrix(self.states, "states"))

    @property
    def T(self) -> int:
        return self.states.shape[0]

    def vec(self) -> np.ndarray:
        return self.states.reshape(-1)

    def dynamics_residual(self, system: SystemModel) -> float:
        """max_t |x_{t+1} - L_t x_t| relative to the largest state norm."""
        X = self.states
        scale = max(float(np.max(np.linalg.norm(X, axis=1))), 1e-300)
        worst = 0.0
        for t in range(1, self.T):
            worst = max(worst, float(np.linalg.norm(X[t] - system.operator(t) @ X[t - 1])))
        return worst / scale


@dataclass(frozen=True, eq=False)
class MeasurementSequence:
    """Measurements d_1..d_T stored as the rows of a T x m array."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", as_matrix(self.data, "measurements"))

    @property
    def T(self) -> int:
        return self.data.shape[0]

    def vec(self) -> np.ndarray:
        """The super-measurement (d_1, ..., d_T) as one flat vector."""
        return self.data.reshape(-1)


def simulate(system: SystemModel, x0, T: int):
    """Run ``x_{t+1} = L_t x_t`` from x0 and record ``d_t = P x_t``."""
    _check_horizon(system, T)
    x = np.asarray(x0, dtype=float)
    if x.shape != (system.n,):
        raise DimensionError(f"initial state has shape {x.shape}, expected ({system.n},)")
    states = [x]
    for t in range(1, T):
        states.append(system.operator(t) @ states[-1])
    X = np.array(states)
    return Trajectory(X), MeasurementSequence(X @ system.projection.T)


def build_block_A(system: SystemModel, T: int) -> np.ndarray:
    """(T-1)n x Tn operator whose null space is the set of trajectories."""
    if T < 2:
        raise ValueError("the dynamics operator needs T >= 2")
    _check_horizon(system, T)
    n = system.n
    A = np.zeros(((T - 1) * n, T * n))
    for t in range(1, T):
        r = (t - 1) * n
        A[r:r + n, r:r + n] = system.operator(t)
        A[r:r + n, r + n:r + 2 * n] = -np.eye(n)
    return A


def build_block_P(system: SystemModel, T: int) -> np.ndarray:
    """Block-diagonal projection acting on a whole trajectory."""
    if T < 1:
        raise ValueError("T must be at least 1")
    return np.kron(np.eye(T), system.projection)


def oracle_unique(system: SystemModel, T: int, tol: float | None = None) -> bool:
    """True when no nonzero trajectory is invisible to every measurement.

    Decided from the null space of A stacked over the block projection, which
    stays valid for non-invertible dynamics.
    """
    stack = np.vstack([build_block_A(system, T), build_block_P(system, T)])
    _, rank, _ = _spectrum(stack, _resolve_tol(tol, stack.shape))
    return rank == stack.shape[1]


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    x0: np.ndarray
    trajectory: Trajectory
    residual: float
    rank: int
    condition: float
    invertible_dynamics: bool
    oracle: bool | None = None

    @property
    def unique(self) -> bool:
        """Rank test for invertible dynamics, block-stack oracle otherwise."""
        if self.invertible_dynamics or self.oracle is None:
            return self.rank == self.x0.shape[0]
        return self.oracle

    @property
    def rank_unique(self) -> bool:
        return self.rank == self.x0.shape[0]


def reconstruct(system: SystemModel, data: MeasurementSequence, tol: float | None = None,
                check_oracle: bool | None = None) -> ReconstructionResult:
    """Minimum-norm least-squares solution of ``x0 E = d``.

    The block-stack oracle runs when the dynamics are not invertible, or
    whenever `check_oracle` is true.
    """
    if not isinstance(data, MeasurementSequence):
        data = MeasurementSequence(data)
    if data.data.shape[1] != system.m:
        raise DimensionError(
            f"measurements have {data.data.shape[1]} components, projection gives {system.m}"
        )
    T = data.T
    ext = build_extended(system, T, tol)
    d = data.vec()
    x0, *_ = np.linalg.lstsq(ext.E.T, d, rcond=ext.tol)
    residual = float(np.linalg.norm(x0 @ ext.E - d))
    trajectory, _ = simulate(system, x0, T)
    invertible = system.is_invertible()
    oracle = None
    if T >= 2 and (check_oracle or (check_oracle is None and not invertible)):
        oracle = oracle_unique(system, T, tol)
    return ReconstructionResult(x0, trajectory, residual, ext.rank, ext.condition,
                                invertible, oracle)
