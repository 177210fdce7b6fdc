"""The null-space chain N_1 = null(P), N_{k+1} = N_1 ∩ L_k(N_k) and its diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import SystemModel
from .subspace import (
    DEFAULT_TOL,
    Subspace,
    _orth,
    check_tol,
    image,
    intersect,
    machine_tol,
    null_space,
    numerical_rank,
    orth_complement,
    subspace_distance,
    transverse_dim,
)

CONDITION_WARNING = 1e12
INVARIANCE_TOL = 1e-6


class NumericalFailure(ArithmeticError):
    """A computed quantity violates an identity it must satisfy."""


class NonInvertibleDynamicsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class NullChain:
    system: SystemModel
    subspaces: tuple
    transverse_profile: tuple
    warnings: tuple = ()

    @property
    def dims(self) -> tuple:
        return tuple(S.dim for S in self.subspaces)

    @property
    def k_star(self) -> int | None:
        """Smallest 1-based k with N_k = {0}; None when not reached."""
        for k, d in enumerate(self.dims, start=1):
            if d == 0:
                return k
        return None

    @property
    def stalled_at(self) -> int | None:
        """First i with dim N_{i+1} = dim N_i != 0."""
        dims = self.dims
        for i in range(1, len(dims)):
            if dims[i] == dims[i - 1] != 0:
                return i
        return None

    def __len__(self):
        return len(self.subspaces)


def compute_chain(system: SystemModel, max_steps: int, tol: float = DEFAULT_TOL) -> NullChain:
    """Compute N_1, ..., N_K with K <= max_steps, stopping once N_K = {0}.

    ``transverse_profile[i-1]`` records whether N_1 and L_i(N_i) meet
    transversely.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    tol = check_tol(tol)
    available = system.steps_available
    if available is not None and available < max_steps - 1:
        raise ValueError(
            f"time-varying system provides {available} operators, "
            f"max_steps={max_steps} needs {max_steps - 1}"
        )
    N = null_space(system.projection, tol)
    chain = [N]
    profile = []
    warnings = []
    checked = set()
    for k in range(1, max_steps):
        current = chain[-1]
        if current.dim == 0:
            break
        L = system.operator(k)
        if id(L) not in checked:
            checked.add(id(L))
            cond = np.linalg.cond(L)
            if not cond <= CONDITION_WARNING:
                warnings.append(f"L_{k} has condition number {cond:.3g} > {CONDITION_WARNING:.0e}")
        moved = image(L, current, tol)
        nxt = intersect(N, moved, tol)
        profile.append(nxt.dim == transverse_dim(N.dim, moved.dim, system.n))
        if not system.time_varying and nxt.dim == current.dim:
            # a stationary chain is constant from its first stall on; iterating
            # further only amplifies rounding error through L
            remaining = max_steps - len(chain)
            chain += [current] * remaining
            profile += [profile[-1]] * (remaining - 1)
            break
        chain.append(nxt)
    return NullChain(system, tuple(chain), tuple(profile), tuple(warnings))


@dataclass(frozen=True)
class ReductionReport:
    lower_bound: int
    k_star: int | None
    optimal: bool | None
    transverse_profile: tuple
    bound_satisfied: bool
    warnings: tuple = ()

    @property
    def status(self) -> str:
        if self.optimal is None:
            return "undecided"
        return "optimal" if self.optimal else "not optimal"

    @property
    def all_transverse(self) -> bool:
        return all(self.transverse_profile)


def lower_bound(n: int, m: int) -> int:
    """Fewest measurements that can pin down R^n through m-dimensional views."""
    return math.ceil(n / m)


def reduction_report(chain: NullChain) -> ReductionReport:
    system = chain.system
    bound = lower_bound(system.n, system.m)
    dims = chain.dims
    k_star = chain.k_star
    if k_star is not None:
        optimal = k_star == bound
    elif len(dims) >= bound:
        optimal = False
    else:
        optimal = None
    p = dims[0]
    bound_ok = all(dims[i - 1] <= p - i + 1 for i in range(1, min(len(dims), p + 1) + 1))
    return ReductionReport(bound, k_star, optimal, chain.transverse_profile, bound_ok,
                           chain.warnings)


def invariance_residual(L, S: Subspace, tol: float = DEFAULT_TOL) -> float:
    """How far L(S) is from S, symmetrically; zero for an invariant subspace."""
    moved = image(L, S, tol)
    if moved.dim != S.dim:
        return 1.0
    return max(subspace_distance(moved, S), subspace_distance(S, moved))


def stall_witness(chain: NullChain, tol: float = DEFAULT_TOL) -> Subspace | None:
    """The subspace N_i at the first stall, checked to be L_i-invariant.

    Returns None when the chain never stalls.
    """
    i = chain.stalled_at
    if i is None:
        return None
    witness = chain.subspaces[i - 1]
    residual = invariance_residual(chain.system.operator(i), witness, tol)
    if residual > INVARIANCE_TOL:
        raise NumericalFailure(
            f"stalled subspace N_{i} is not invariant (residual {residual:.3g})"
        )
    return witness


def _require_invertible(system: SystemModel, count: int, tol: float):
    for t, L in enumerate(system.operators(count), start=1):
        if numerical_rank(L, tol) != system.n:
            raise NonInvertibleDynamicsError(
                f"dynamics operator L_{t} is not invertible; the stacked-complement "
                "characterization requires invertible dynamics"
            )


def _stack_rank(M: np.ndarray, tol: float | None) -> int:
    # the stacks below are power sequences and get ill-conditioned like E does,
    # so by default rank is decided at rounding level
    return numerical_rank(M, machine_tol(M.shape) if tol is None else tol)


def stacked_complement_dims(system: SystemModel, T: int, tol: float | None = None) -> list:
    """Ranks of the stacked complement matrices for k = 2..T.

    Block rows for step k span N^perp and (L_{k-1} ... L_{k-j} N)^perp for
    j = 1..k-1, so ``n - rank`` equals dim N_k. With `tol` None the blocks
    are built at the default tolerance and the rank is decided at
    ``max(shape) * eps``.
    """
    if T < 2:
        raise ValueError("T must be at least 2")
    build_tol = DEFAULT_TOL if tol is None else check_tol(tol)
    _require_invertible(system, T - 1, build_tol)
    comp = orth_complement(null_space(system.projection, build_tol)).basis
    ranks = []
    for k in range(2, T + 1):
        blocks = [comp]
        M = np.eye(system.n)
        for t in range(k - 1, 0, -1):
            M = M @ system.operator(t)
            # rows of rN^perp M^{-1} span the complement of M(N)
            blocks.append(_orth(np.linalg.solve(M.T, comp), build_tol))
        ranks.append(_stack_rank(np.hstack(blocks), tol))
    return ranks


def krylov_span_dims(system: SystemModel, k_max: int, tol: float | None = None) -> list:
    """dim span(C, L C, ..., L^{k-1} C) for k = 1..k_max, C spanning null(P)^perp.

    The rank tolerance defaults to rounding level, as for
    :func:`stacked_complement_dims`.
    """
    if system.time_varying:
        raise ValueError("Krylov span dimensions need stationary dynamics")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    build_tol = DEFAULT_TOL if tol is None else check_tol(tol)
    L = system.dynamics
    scale = float(np.linalg.norm(L, 2))
    V = orth_complement(null_space(system.projection, build_tol)).basis
    blocks = [V]
    dims = [V.shape[1]]
    for _ in range(1, k_max):
        V = _orth(L @ V, build_tol, scale)
        blocks.append(V)
        stacked = np.hstack(blocks)
        dims.append(_stack_rank(stacked, tol) if stacked.shape[1] else 0)
    return dims
