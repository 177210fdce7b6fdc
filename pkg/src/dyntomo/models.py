"""Concrete dynamics and projection operators, and the system container.

Pixel grids are indexed 1-based: row ``i`` runs down, column ``j`` runs right,
and the state vector is laid out column-major, so pixel ``(i, j)`` sits at
linear position ``(j - 1) * g + (i - 1)`` (0-based).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .subspace import DEFAULT_TOL, DimensionError, as_matrix, numerical_rank

STABILITY_LIMIT = 0.25

Dynamics = Union[np.ndarray, tuple]


@dataclass(frozen=True)
class GridSpec:
    side: int

    def __post_init__(self):
        if int(self.side) != self.side or self.side < 1:
            raise ValueError(f"grid side must be a positive integer, got {self.side!r}")

    @property
    def n(self) -> int:
        return self.side * self.side

    def index(self, i: int, j: int) -> int:
        """0-based linear position of the 1-based pixel (i, j)."""
        g = self.side
        if not (1 <= i <= g and 1 <= j <= g):
            raise IndexError(f"pixel ({i}, {j}) outside a {g}x{g} grid")
        return (j - 1) * g + (i - 1)

    def pixel(self, k: int) -> tuple:
        """Inverse of :meth:`index`."""
        j, i = divmod(k, self.side)
        return i + 1, j + 1

    def to_image(self, x) -> np.ndarray:
        """Reshape a state vector into a g x g array, ``img[i-1, j-1]``."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionError(f"state of length {x.shape} does not fit a {self.side}x{self.side} grid")
        return x.reshape((self.side, self.side), order="F")

    def from_image(self, img) -> np.ndarray:
        return np.asarray(img, dtype=float).reshape(self.n, order="F")


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Linear dynamics paired with a full-row-rank projection.

    `dynamics` is either one n x n matrix (stationary) or a tuple
    ``(L_1, ..., L_{T-1})`` of n x n matrices, where ``x_{t+1} = L_t x_t``.
    """

    dynamics: Dynamics
    projection: np.ndarray
    label: str = ""
    grid: GridSpec | None = None

    def __post_init__(self):
        P = as_matrix(self.projection, "projection")
        n = P.shape[1]
        if isinstance(self.dynamics, (tuple, list)):
            if not self.dynamics:
                raise ValueError("time-varying dynamics need at least one operator")
            blocks = tuple(as_matrix(L, f"L_{k + 1}") for k, L in enumerate(self.dynamics))
        else:
            blocks = as_matrix(self.dynamics, "L")
        for L in blocks if isinstance(blocks, tuple) else (blocks,):
            if L.shape != (n, n):
                raise DimensionError(
                    f"dynamics block of shape {L.shape} does not match projection width {n}"
                )
            L.setflags(write=False)
        if numerical_rank(P, DEFAULT_TOL) != P.shape[0]:
            raise ValueError("projection must have full row rank")
        if self.grid is not None and self.grid.n != n:
            raise DimensionError(f"grid with {self.grid.n} pixels does not match n = {n}")
        P.setflags(write=False)
        object.__setattr__(self, "projection", P)
        object.__setattr__(self, "dynamics", blocks)

    @property
    def n(self) -> int:
        return self.projection.shape[1]

    @property
    def m(self) -> int:
        return self.projection.shape[0]

    @property
    def time_varying(self) -> bool:
        return isinstance(self.dynamics, tuple)

    @property
    def steps_available(self) -> int | None:
        """Number of transitions the dynamics can drive; None when unbounded."""
        return len(self.dynamics) if self.time_varying else None

    def operator(self, t: int) -> np.ndarray:
        """The map taking x_t to x_{t+1} (t is 1-based)."""
        if not self.time_varying:
            return self.dynamics
        if not 1 <= t <= len(self.dynamics):
            raise ValueError(
                f"time-varying system provides {len(self.dynamics)} operators, step {t} requested"
            )
        return self.dynamics[t - 1]

    def operators(self, count: int) -> list:
        return [self.operator(t) for t in range(1, count + 1)]

    def is_invertible(self, tol: float = DEFAULT_TOL) -> bool:
        """True when every dynamics block has numerical rank n."""
        blocks = self.dynamics if self.time_varying else (self.dynamics,)
        return all(numerical_rank(L, tol) == self.n for L in blocks)


def column_sum_projection(grid: GridSpec) -> np.ndarray:
    """g x g^2 matrix whose row j sums the pixels of column j."""
    g = grid.side
    P = np.zeros((g, grid.n))
    for j in range(g):
        P[j, j * g:(j + 1) * g] = 1.0
    return P


def identity_rows(m: int, n: int) -> np.ndarray:
    """The first m rows of the n x n identity."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    return np.eye(n)[:m].copy()


def cyclic_example() -> SystemModel:
    """Six-dimensional cyclic shift observed through its first two coordinates."""
    L = np.roll(np.eye(6), 1, axis=0)
    return SystemModel(L, identity_rows(2, 6), label="cyclic")


def diffusion_coefficients(grid: GridSpec) -> np.ndarray:
    """Per-pixel coefficients (1/5)(i^3 j^2 10^-5)^(1/4), as a g x g array."""
    i = np.arange(1, grid.side + 1, dtype=float)[:, None]
    j = np.arange(1, grid.side + 1, dtype=float)[None, :]
    return 0.2 * (i ** 3 * j ** 2 * 1e-5) ** 0.25


def explicit_diffusion(grid: GridSpec, kappa, boundary: str = "periodic") -> np.ndarray:
    """One explicit-Euler step of the 5-point diffusion stencil.

    The coefficient is sampled at the updated cell,
    ``x'_p = x_p + kappa_p * sum_q (x_q - x_p)`` over the four stencil
    neighbours q, so constant states are preserved (rows sum to one).
    `boundary` is ``"periodic"`` (neighbours wrap around) or ``"reflect"``
    (zero flux: neighbours outside the grid are dropped).
    """
    g = grid.side
    K = np.broadcast_to(np.asarray(kappa, dtype=float), (g, g))
    if not np.all(np.isfinite(K)):
        raise ValueError("diffusion coefficients must be finite")
    if K.min() < 0.0 or K.max() > STABILITY_LIMIT:
        raise ValueError(
            f"diffusion coefficients must lie in [0, {STABILITY_LIMIT}], "
            f"got range [{K.min():.6g}, {K.max():.6g}]"
        )
    if boundary not in ("periodic", "reflect"):
        raise ValueError(f"unknown boundary {boundary!r}")
    D = np.eye(grid.n)
    for i in range(1, g + 1):
        for j in range(1, g + 1):
            p = grid.index(i, j)
            k = K[i - 1, j - 1]
            for a, b in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
                if boundary == "periodic":
                    a, b = (a - 1) % g + 1, (b - 1) % g + 1
                elif not (1 <= a <= g and 1 <= b <= g):
                    continue
                D[p, grid.index(a, b)] += k
                D[p, p] -= k
    return D


def column_shift(grid: GridSpec, shift: int) -> np.ndarray:
    """Permutation moving every pixel `shift` columns to the right, cyclically."""
    g = grid.side
    if abs(shift) >= g and g > 1:
        raise ValueError(f"|shift| must be below the grid side {g}")
    S = np.zeros((grid.n, grid.n))
    for i in range(1, g + 1):
        for j in range(1, g + 1):
            S[grid.index(i, (j - 1 + shift) % g + 1), grid.index(i, j)] = 1.0
    return S


def shift_diffusion(grid: GridSpec, kappa=0.1, shift: int = 1,
                    boundary: str = "periodic") -> np.ndarray:
    """Diffusion step followed by a cyclic column shift, ``S @ D``.

    `kappa` is a scalar or a g x g array of per-pixel coefficients. A uniform
    coefficient leaves the column sums evolving on their own, so the system is
    then unobservable through :func:`column_sum_projection`; the ``l1grid``
    demo therefore passes :func:`diffusion_coefficients`.
    """
    return column_shift(grid, shift) @ explicit_diffusion(grid, kappa, boundary)


def variable_diffusion(grid: GridSpec, boundary: str = "periodic") -> np.ndarray:
    return explicit_diffusion(grid, diffusion_coefficients(grid), boundary)


def standard_normals(count: int, seed: int) -> np.ndarray:
    """`count` standard normals from a Philox-4x64 stream keyed by `seed`.

    Raw 64-bit outputs become uniforms on (0, 1] through their top 53 bits;
    consecutive uniform pairs are turned into normals by Box-Muller.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    pairs = (count + 1) // 2
    raw = np.random.Philox(key=int(seed)).random_raw(2 * pairs)
    u = ((raw >> np.uint64(11)).astype(float) + 1.0) * 2.0 ** -53
    r = np.sqrt(-2.0 * np.log(u[0::2]))
    theta = 2.0 * math.pi * u[1::2]
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:count]


def random_dynamics(n: int, seed: int, count: int | None = None):
    """Gaussian n x n matrix (or a tuple of `count` of them) drawn from `seed`.

    The first matrix of a tuple equals ``random_dynamics(n, seed)``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    k = 1 if count is None else count
    z = standard_normals(k * n * n, seed).reshape(k, n, n)
    if count is None:
        return z[0]
    return tuple(z)


def gaussian_blob(grid: GridSpec, center_i: float, center_j: float, sigma: float) -> np.ndarray:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    i = np.arange(1, grid.side + 1, dtype=float)[:, None]
    j = np.arange(1, grid.side + 1, dtype=float)[None, :]
    img = np.exp(-((i - center_i) ** 2 + (j - center_j) ** 2) / (2.0 * sigma ** 2))
    return grid.from_image(img)


def grid_system(name: str, side: int = 10) -> SystemModel:
    """The two pixel-grid demos: ``l1grid`` (diffusion + shift) and ``l2grid``."""
    grid = GridSpec(side)
    P = column_sum_projection(grid)
    if name == "l1grid":
        L = shift_diffusion(grid, diffusion_coefficients(grid), shift=1)
    elif name == "l2grid":
        L = variable_diffusion(grid)
    else:
        raise ValueError(f"unknown grid demo {name!r}")
    return SystemModel(L, P, label=name, grid=grid)


def random_system(n: int, m: int, seed: int, steps: int | None = None) -> SystemModel:
    """Gaussian dynamics seen through the first m coordinates.

    With `steps` given, the dynamics are a time-varying tuple of that length.
    """
    L = random_dynamics(n, seed, count=steps)
    return SystemModel(L, identity_rows(m, n), label=f"random(n={n}, m={m}, seed={seed})")


DEMOS = ("cyclic", "random6", "l1grid", "l2grid")


def demo_system(name: str, seed: int = 0, time_varying: bool = False,
                steps: int = 6) -> SystemModel:
    if name == "cyclic":
        return cyclic_example()
    if name == "random6":
        return random_system(6, 2, seed, steps if time_varying else None)
    if name in ("l1grid", "l2grid"):
        return grid_system(name)
    raise ValueError(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")

