import math

import numpy as np
import pytest

from derlpso.errors import ConfigError
from derlpso.estimator import run_derlpso, run_rllpso, swarm_config_for
from derlpso.problems import evaluate_loss, make_problem


@pytest.fixture(scope="module")
def heat():
    return make_problem("heat", 10, np.random.default_rng(0), seed=0)


@pytest.fixture(scope="module")
def lorenz():
    return make_problem("lorenz", 10, np.random.default_rng(1), seed=1)


@pytest.mark.parametrize("run", [run_derlpso, run_rllpso])
def test_same_seed_same_result(heat, run):
    cfg = swarm_config_for(heat, max_iterations=15)
    assert run(heat, cfg, seed=4).same_as(run(heat, cfg, seed=4))


def test_different_seeds_differ(heat):
    cfg = swarm_config_for(heat, max_iterations=5)
    assert not run_derlpso(heat, cfg, seed=1).same_as(run_derlpso(heat, cfg, seed=2))


@pytest.mark.parametrize("run", [run_derlpso, run_rllpso])
def test_zero_budget_returns_best_initial_particle(heat, run):
    res = run(heat, swarm_config_for(heat, max_iterations=0), seed=3)
    assert res.loss_curve == [] and res.iterations_used == 0
    assert res.best_loss == evaluate_loss(heat, res.best_params)
    # the same seed draws the same initial swarm, so nothing initial beats it
    longer = run(heat, swarm_config_for(heat, max_iterations=1), seed=3)
    assert longer.loss_curve[0] <= res.best_loss


@pytest.mark.parametrize("run", [run_derlpso, run_rllpso])
@pytest.mark.parametrize("seed", range(4))
def test_loss_curve_is_monotone(lorenz, run, seed):
    res = run(lorenz, swarm_config_for(lorenz, max_iterations=30), seed=seed)
    curve = np.array(res.loss_curve)
    assert len(curve) == res.iterations_used == 30
    assert np.all(np.diff(curve) <= 0)
    assert res.best_loss == curve[-1]
    assert evaluate_loss(lorenz, res.best_params) == res.best_loss


def test_level_choices_are_candidates(lorenz):
    res = run_derlpso(lorenz, swarm_config_for(lorenz, max_iterations=20), seed=0)
    assert set(res.level_choices) <= {4, 6, 8, 10}
    assert len(res.level_choices) == 20


def test_heat_converges(heat):
    res = run_derlpso(heat, seed=0)
    assert (res.best_params[0] - heat.true_params[0]) ** 2 < 1e-10


def test_early_stop(heat):
    res = run_derlpso(heat, swarm_config_for(heat, early_stop_loss=1e-3), seed=0)
    assert res.iterations_used < 50
    assert res.best_loss <= 1e-3


def test_reinit_fires_only_above_threshold(heat):
    # a far-away start keeps the loss high at the midpoint
    far = np.full((100, 1), 10.0)
    res = run_derlpso(heat, swarm_config_for(heat, max_iterations=2), seed=0, initial_positions=far)
    assert res.reinit_triggered and res.reinit_iteration == 1
    # a huge threshold can never be exceeded
    res = run_derlpso(heat, swarm_config_for(heat, reinit_threshold=1e300), seed=0)
    assert not res.reinit_triggered
    assert not run_rllpso(heat, swarm_config_for(heat, max_iterations=2), seed=0).reinit_triggered


def test_result_serializes(heat):
    doc = run_derlpso(heat, swarm_config_for(heat, max_iterations=3), seed=0).to_dict()
    assert doc["algorithm"] == "derlpso" and len(doc["loss_curve"]) == 3
    assert doc["config_echo"]["swarm"]["population"] == 100
    assert doc["q_table"]["candidate_levels"] == [4, 6, 8, 10]


def test_all_failing_run_reports_none_loss(heat):
    # every uniform candidate lies outside the admissible domain
    res = run_rllpso(heat, swarm_config_for(heat, max_iterations=0, lower=-10.0, upper=-1.0), seed=0)
    assert math.isinf(res.best_loss)
    assert res.to_dict()["best_loss"] is None


def test_dimension_mismatch_rejected(heat, lorenz):
    with pytest.raises(ConfigError):
        run_derlpso(heat, swarm_config_for(lorenz))


def test_population_too_small_for_levels(heat):
    with pytest.raises(ConfigError):
        run_derlpso(heat, swarm_config_for(heat, population=12))
