import numpy as np
import pytest

from dyntomo.chain import lower_bound
from dyntomo.experiments import (
    condition_study,
    genericity_experiment,
    orthogonal_dynamics,
    run_trial,
    trial_system,
)
from dyntomo.models import SystemModel, identity_rows, random_dynamics
from dyntomo.observability import build_extended


def test_small_genericity_run():
    rep = genericity_experiment(6, 2, 50, 42)
    assert rep.trials == 50 and len(rep.outcomes) == 50
    assert rep.fraction_optimal == 1.0 and rep.failing_seeds == ()
    assert [o.seed for o in rep.outcomes] == list(range(42, 92))


def test_genericity_time_varying_and_random_projection():
    for kw in ({"time_varying": True}, {"random_projection": True}):
        assert genericity_experiment(5, 2, 30, 3, **kw).fraction_optimal == 1.0


def test_square_projection_trials():
    rep = genericity_experiment(4, 4, 5, 0)
    assert all(o.k_star == 1 for o in rep.outcomes)


def test_genericity_is_deterministic_and_worker_independent():
    a = genericity_experiment(6, 2, 40, 9)
    b = genericity_experiment(6, 2, 40, 9, workers=2)
    assert a.outcomes == b.outcomes


def test_trial_replay():
    rep = genericity_experiment(5, 1, 10, 100)
    o = rep.outcomes[4]
    again = run_trial(5, 1, 0, o.seed)
    assert (again.seed, again.dims, again.k_star, again.optimal) == (o.seed, o.dims, o.k_star, o.optimal)
    assert np.array_equal(trial_system(5, 1, o.seed).dynamics, random_dynamics(5, o.seed))


def test_transverse_implies_optimal_and_bound_holds():
    rep = genericity_experiment(6, 2, 100, 1, time_varying=True)
    for o in rep.outcomes:
        if o.all_transverse:
            assert o.optimal
        assert o.k_star is None or o.k_star >= lower_bound(6, 2)


def test_genericity_argument_checks():
    with pytest.raises(ValueError):
        genericity_experiment(3, 4, 10, 0)
    with pytest.raises(ValueError):
        genericity_experiment(3, 1, 0, 0)


def test_condition_study_single_row():
    s = SystemModel(random_dynamics(4, 0), identity_rows(1, 4))
    study = condition_study(s, 3, 3)
    assert study.column("T") == [3] and study.column("rank") == [3]
    with pytest.raises(ValueError):
        condition_study(s, 4, 3)


def test_orthogonal_dynamics_condition_stays_bounded():
    # with orthonormal P rows and orthogonal L, sigma_max(E_T) <= sqrt(T) and
    # sigma_min never drops once E is full rank
    L = orthogonal_dynamics(6, 5)
    assert np.allclose(L @ L.T, np.eye(6))
    s = SystemModel(L, identity_rows(2, 6))
    study = condition_study(s, 3, 12)
    base = study.rows[0]
    assert base.rank == 6
    for row in study.rows:
        assert row.rank == 6
        assert row.condition <= np.sqrt(row.T) * base.condition * (1 + 1e-12)


def test_condition_study_ranks_nondecreasing():
    s = SystemModel(random_dynamics(6, 2), identity_rows(1, 6))
    ranks = condition_study(s, 1, 8).column("rank")
    assert ranks == sorted(ranks) and ranks[-1] == 6
    assert ranks == [build_extended(s, T).rank for T in range(1, 9)]
