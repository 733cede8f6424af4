import pytest

from conftest import block, diesel, ev, make_instance
from mixedfleet.benchmark import demotion_fixture, generate_instance
from mixedfleet.hierarchy import hierarchical_solve, split_fleet
from mixedfleet.milp.problem import SolveConfig
from mixedfleet.validator import simulate

CFG = SolveConfig(time_limit_seconds=60)


class TestSplitFleet:
    def test_paper_style_fleet_splits_on_fuel(self):
        inst = generate_instance("small", seed=0)
        v1, v2 = split_fleet(inst)
        assert all(v.is_electric for v in v1)
        assert all(not v.is_electric for v in v2)
        assert len(v1) + len(v2) == len(inst.vehicles)

    def test_all_diesel_fleet_is_all_stage_two(self):
        inst = make_instance([diesel("d1"), diesel("d2")],
                             [block("b1", 8 * 60, 9 * 60, 5.0)])
        v1, v2 = split_fleet(inst)
        assert v1 == ()
        assert len(v2) == 2

    def test_zero_threshold_takes_everything(self):
        inst = make_instance([diesel("d1"), ev("ev1")],
                             [block("b1", 8 * 60, 9 * 60, 5.0)])
        import dataclasses

        inst = dataclasses.replace(inst, op_eff_threshold=0.0)
        v1, v2 = split_fleet(inst)
        assert len(v1) == 2 and v2 == ()


class TestRepairLoop:
    def test_fixture_needs_exactly_one_demotion(self):
        inst = demotion_fixture()
        res = hierarchical_solve(inst, CFG)
        assert res.feasible
        assert len(res.demotions) >= 1
        assert res.demotions == ["ev01"]  # least efficient ties break by id
        assert res.trace[0].stage2_status == "Infeasible"
        assert res.trace[-1].stage2_status in ("Optimal", "FeasibleTimeLimit")
        sim = simulate(inst, res.schedule)
        assert sim.clean
        assert sim.total_cost == pytest.approx(res.total_cost)

    def test_no_demotions_when_evs_cover_everything(self):
        inst = make_instance(
            [ev(soc_min=10.0, soc_max=200.0, op_eff=1.0), diesel("d1")],
            [block("b1", 8 * 60, 9 * 60, 10.0),
             block("b2", 10 * 60, 11 * 60, 10.0)])
        res = hierarchical_solve(inst, CFG)
        assert res.feasible
        assert res.demotions == []
        owners = {i.block_id: i.vehicle_id
                  for i in res.schedule.block_assignments}
        assert set(owners.values()) == {"ev1"}
        # the idle diesel bus costs nothing
        assert res.total_cost == pytest.approx(20 * 0.12795)

    def test_fleet_too_small_reports_infeasible(self):
        inst = make_instance(
            [diesel("d1")],
            [block("b1", 8 * 60, 10 * 60, 10.0),
             block("b2", 9 * 60, 11 * 60, 10.0)])
        res = hierarchical_solve(inst, CFG)
        assert not res.feasible
        assert res.schedule is None
        assert res.diagnostics

    def test_trace_rows_are_emittable(self):
        res = hierarchical_solve(demotion_fixture(), CFG)
        rows = [t.to_row() for t in res.trace]
        assert rows[0]["iteration"] == 1
        assert {"iteration", "v1Count", "v2Count", "stage1Status",
                "stage2Status", "demoted"} <= set(rows[0])

    def test_rejects_dirty_instance(self):
        inst = make_instance([ev(seats=10)],
                             [block("b1", 8 * 60, 9 * 60, 5.0, seats=50)])
        with pytest.raises(ValueError, match="validation"):
            hierarchical_solve(inst, CFG)

    @pytest.mark.parametrize("seed", [0, 1, 4])
    def test_merged_schedule_always_clean_and_complete(self, seed):
        inst = generate_instance("tiny", seed=seed)
        res = hierarchical_solve(inst, CFG)
        assert res.feasible
        sim = simulate(inst, res.schedule)
        assert sim.clean
        covered = {i.block_id for i in res.schedule.block_assignments}
        assert covered == {b.id for b in inst.blocks}

    def test_warm_start_toggle_still_solves(self):
        inst = generate_instance("tiny", seed=2)
        warm = hierarchical_solve(inst, CFG, use_warm_start=True)
        cold = hierarchical_solve(inst, CFG, use_warm_start=False)
        assert warm.feasible and cold.feasible
        assert warm.total_cost == pytest.approx(cold.total_cost, rel=1e-6)
