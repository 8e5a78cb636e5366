import pytest

from coopnet.demand import generate
from coopnet.netfile import format_network
from coopnet.network import NetworkState, apply_action
from coopnet.report import results_csv
from coopnet.scenario import (HETERO_ROWS, ScenarioConfig, Setting, hetero_config, highest_return,
                              most_efficient, play_year, roc_summary, run_scenario, schedules, sweep)


def _run(cfg, graph, **kw):
    return run_scenario(cfg.with_(**kw), Setting(cfg.with_(**kw), graph))


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(horizon=0)
    with pytest.raises(ValueError):
        ScenarioConfig(budget=-1)
    with pytest.raises(ValueError):
        ScenarioConfig(budget_ratio=(0, 1))
    with pytest.raises(ValueError):
        ScenarioConfig(demand_ratio=(1, -1))
    with pytest.raises(ValueError):
        ScenarioConfig(betas=((0.1, 0.1),) * 2)
    with pytest.raises(ValueError):
        ScenarioConfig(betas=((0.1, 1.2),) * 3)
    with pytest.raises(ValueError):
        ScenarioConfig(mu=0)


def test_budget_split_keeps_total():
    cfg = ScenarioConfig(budget=100.0, budget_ratio=(2, 3))
    assert cfg.budgets() == {1: 80.0, 2: 120.0}


def test_all_zero_schedule_is_the_baseline(toy_config, toy_network):
    r = _run(toy_config, toy_network)
    assert r.delta_f_co == 0.0 and r.cir == 0.0 and r.roc is None
    assert not r.accepted_any
    assert (r.d_emissions, r.d_travel_cost, r.d_profit) == (0.0, 0.0, 0.0)
    for y, b in zip(r.years, r.baseline):
        assert y.stage1 == y.no_mech == b.stage1
        assert y.network == b.network


def test_half_coinvestment_cir(toy_config, toy_network):
    r = _run(toy_config, toy_network, betas=((0.5, 0.5),) * 3)
    assert r.cir == 0.5
    assert r.roc == pytest.approx(r.delta_f_co / (0.5 * 2 * 3000.0 * 3))


def test_schedules_order():
    s = schedules((0.0, 0.5), 3)
    assert len(s) == 8
    assert s[0] == ((0.0, 0.0),) * 3 and s[-1] == ((0.5, 0.5),) * 3
    assert s[1] == ((0.0, 0.0), (0.0, 0.0), (0.5, 0.5))


def test_sweep_matches_individual_runs(toy_config, toy_network):
    grid = (0.0, 0.5)
    setting = Setting(toy_config, toy_network)
    recs = sweep(toy_config, grid=grid, setting=setting)
    assert len(recs) == 8
    assert recs[0].delta_f_co == 0.0
    for sched, rec in zip(schedules(grid, 3), recs):
        solo = _run(toy_config, toy_network, betas=sched)
        assert rec.betas == sched
        assert rec.delta_f_co == solo.delta_f_co
        assert rec.final_state == solo.final_state
        assert rec.years == solo.years


def test_year_accounting(toy_config, toy_network):
    recs = sweep(toy_config, setting=Setting(toy_config, toy_network))
    assert sum(r.accepted_any for r in recs) > len(recs) // 2
    s_max = toy_config.params.s_max
    for r in recs:
        state = NetworkState.empty(toy_network)
        for y, b in zip(r.years, r.baseline):
            assert y.no_mech == b.stage1
            if y.accepted:
                assert y.surplus > 0
                assert all(v > f for v, f in zip(y.payoffs, y.no_mech))
                assert sum(y.shares) == pytest.approx(y.surplus, rel=1e-9)
            else:
                assert y.payoffs == y.stage1 and y.shares == (0.0, 0.0)
            # rebuild the year's network from the recorded actions
            realized = y.stage1_actions[0] + y.stage1_actions[1]
            if y.accepted:
                realized = realized + y.joint_action
            state = apply_action(state, realized, s_max)
            assert y.network == state
        assert r.final_state == state
        realized = sum(y.realized for y in r.years)
        assert r.delta_f_co == pytest.approx(realized - sum(sum(y.no_mech) for y in r.years))


def test_sweep_is_deterministic(toy_config, toy_network):
    a = sweep(toy_config, setting=Setting(toy_config, toy_network))
    b = sweep(toy_config, setting=Setting(toy_config, toy_network))
    assert results_csv(a) == results_csv(b)


def test_parallel_sweep_matches_serial(toy_config, toy_network, tmp_path):
    path = tmp_path / "toy.net"
    path.write_text(format_network(toy_network))
    cfg = toy_config.with_(network=str(path), horizon=2)
    serial = sweep(cfg)
    parallel = sweep(cfg, jobs=2)
    assert results_csv(serial) == results_csv(parallel)


def test_best_points(toy_config, toy_network):
    recs = sweep(toy_config, setting=Setting(toy_config, toy_network))
    hr, me = highest_return(recs), most_efficient(recs)
    accepted = [r for r in recs if r.accepted_any]
    assert hr.delta_f_co == max(r.delta_f_co for r in accepted)
    assert me.roc == max(r.roc for r in accepted if r.roc is not None)
    assert highest_return(recs[:1]) is None


def test_hetero_rows_hold_totals(toy_network):
    base = ScenarioConfig(budget=1000.0, params=toy_network.params)
    reference = generate(toy_network, base.bounds, base.seed).requests
    n = len(reference)
    for name, fund, demand in HETERO_ROWS:
        cfg = hetero_config(base, name, fund, demand)
        assert sum(cfg.budgets().values()) == pytest.approx(2000.0)
        # ratios are stated as region 2 : region 1
        assert cfg.budgets()[2] / cfg.budgets()[1] == pytest.approx(fund[0] / fund[1])
        reqs = Setting(cfg, toy_network).demand.requests
        assert abs(sum(r.trips for r in reqs) - sum(r.trips for r in reference)) <= n
        intra = {t: sum(r.trips for r in reqs if r.trip_type == t) for t in ("intra1", "intra2")}
        assert intra["intra2"] / intra["intra1"] == pytest.approx(demand[0] / demand[1], rel=0.02)


def test_roc_summary(toy_config, toy_network):
    recs = sweep(toy_config, grid=(0.0, 0.5), setting=Setting(toy_config, toy_network))
    s = roc_summary("toy", toy_config, recs)
    rocs = sorted(r.roc for r in recs if r.roc is not None)
    assert s.n == len(rocs) == 7
    assert (s.minimum, s.maximum) == (rocs[0], rocs[-1])
    assert s.minimum <= s.q1 <= s.median <= s.q3 <= s.maximum


def test_play_year_declined_keeps_stage_one(toy_config, toy_network):
    setting = Setting(toy_config, toy_network)
    state = NetworkState.empty(toy_network)
    # an impossible disagreement point forces a decline
    rec, after = play_year(setting, 1, state, (0.5, 0.5), (1e12, 1e12))
    assert not rec.accepted
    expect = apply_action(state, rec.stage1_actions[0] + rec.stage1_actions[1],
                          toy_config.params.s_max)
    assert after == expect == rec.network
