"""Seeded Monte-Carlo genericity trials and conditioning-versus-horizon studies."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chain import compute_chain, lower_bound, reduction_report
from .models import SystemModel, identity_rows, random_dynamics, standard_normals
from .observability import build_extended


@dataclass(frozen=True)
class TrialOutcome:
    trial: int
    seed: int
    dims: tuple
    k_star: int | None
    optimal: bool
    all_transverse: bool


@dataclass(frozen=True)
class GenericityReport:
    n: int
    m: int
    trials: int
    seed: int
    time_varying: bool
    outcomes: tuple

    @property
    def count_optimal(self) -> int:
        return sum(o.optimal for o in self.outcomes)

    @property
    def count_all_transverse(self) -> int:
        return sum(o.all_transverse for o in self.outcomes)

    @property
    def fraction_optimal(self) -> float:
        return self.count_optimal / self.trials

    @property
    def fraction_all_transverse(self) -> float:
        return self.count_all_transverse / self.trials

    @property
    def failing_seeds(self) -> tuple:
        return tuple(o.seed for o in self.outcomes if not o.optimal)


def trial_system(n: int, m: int, seed: int, time_varying: bool = False,
                 random_projection: bool = False) -> SystemModel:
    """The system drawn for one trial; replaying a seed reproduces it exactly."""
    bound = lower_bound(n, m)
    dynamics = random_dynamics(n, seed, count=bound if time_varying else None)
    if random_projection:
        # offset the stream so P is independent of the dynamics draw
        P = standard_normals(m * n, seed + 2 ** 32).reshape(m, n)
    else:
        P = identity_rows(m, n)
    return SystemModel(dynamics, P, label=f"trial seed {seed}")


def run_trial(n: int, m: int, trial: int, seed: int, time_varying: bool = False,
              random_projection: bool = False) -> TrialOutcome:
    s = seed + trial
    system = trial_system(n, m, s, time_varying, random_projection)
    steps = lower_bound(n, m) + 1 if time_varying else n + 1
    chain = compute_chain(system, steps)
    report = reduction_report(chain)
    return TrialOutcome(trial, s, chain.dims, chain.k_star, bool(report.optimal),
                        report.all_transverse)


def _run_trial_args(args):
    return run_trial(*args)


def genericity_experiment(n: int, m: int, trials: int, seed: int, time_varying: bool = False,
                          random_projection: bool = False,
                          workers: int | None = None) -> GenericityReport:
    """Draw `trials` systems and count how many reach {0} at the lower bound.

    Trial t uses seed ``seed + t``. With `workers` > 1 trials run in worker
    processes; results are merged in trial order, so the report is the same.
    """
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    jobs = [(n, m, t, seed, time_varying, random_projection) for t in range(trials)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_trial_args, jobs, chunksize=max(1, trials // (4 * workers))))
    else:
        outcomes = [_run_trial_args(job) for job in jobs]
    return GenericityReport(n, m, trials, seed, time_varying, tuple(outcomes))


@dataclass(frozen=True)
class ConditionRow:
    T: int
    rank: int
    condition: float


@dataclass(frozen=True)
class ConditionStudy:
    rows: tuple

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]


def condition_study(system: SystemModel, T_min: int, T_max: int,
                    tol: float | None = None) -> ConditionStudy:
    if T_min < 1 or T_max < T_min:
        raise ValueError(f"need 1 <= T_min <= T_max, got {T_min}, {T_max}")
    rows = []
    for T in range(T_min, T_max + 1):
        ext = build_extended(system, T, tol)
        rows.append(ConditionRow(T, ext.rank, ext.condition))
    return ConditionStudy(tuple(rows))


def orthogonal_dynamics(n: int, seed: int) -> np.ndarray:
    """Random orthogonal matrix (QR of a seeded Gaussian, signs fixed)."""
    Q, R = np.linalg.qr(random_dynamics(n, seed))
    return Q * np.sign(np.diag(R))
