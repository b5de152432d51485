"""Tests for the experiment harness at reduced desk scale."""

import json
import math

import pytest

from wshift.errors import ParameterError
from wshift.experiments import (
    Cell,
    ComparisonConfig,
    PhaseConfig,
    PowerMapConfig,
    WeightComparisonConfig,
    run_ks_comparison,
    run_phase_transition,
    run_power_map,
    run_weight_comparison,
)


SMALL_PHASE = PhaseConfig(n=20_000, betas=(0.2, 0.5, 0.8), trials=60, seed=202)


class TestResultTable:
    def test_cell_lookup(self):
        table = run_phase_transition(SMALL_PHASE)
        c = table.cell("type1", 0.2)
        assert c.trials == 60
        with pytest.raises(KeyError):
            table.cell("nope", 0.2)

    def test_se_definition(self):
        table = run_phase_transition(SMALL_PHASE)
        for c in table.cells:
            if c.metric in ("type1", "type2"):
                assert abs(c.se - math.sqrt(c.value * (1 - c.value) / c.trials)) < 1e-15

    def test_csv_format(self, tmp_path):
        table = run_phase_transition(SMALL_PHASE)
        path = tmp_path / "phase.csv"
        table.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "beta,metric,value,se,trials"
        assert len(lines) == 1 + len(table.cells)

    def test_json_round_trip(self, tmp_path):
        table = run_phase_transition(SMALL_PHASE)
        path = tmp_path / "phase.json"
        table.write_json(path)
        payload = json.loads(path.read_text())
        assert payload["schema"] == "wshift-result-table/1"
        assert payload["config"]["seed"] == 202
        assert len(payload["cells"]) == len(table.cells)
        first = payload["cells"][0]
        assert first["value"] == table.cells[0].value  # binary-faithful floats

    def test_bit_reproducible(self):
        a = run_phase_transition(SMALL_PHASE)
        b = run_phase_transition(SMALL_PHASE)
        assert a == b


class TestPhaseTransition:
    def test_error_sum_shape(self):
        table = run_phase_transition(SMALL_PHASE)
        low = table.cell("error_sum", 0.2).value
        high = table.cell("error_sum", 0.8).value
        assert low <= 0.15
        assert high >= 0.85

    def test_calibration_band(self):
        table = run_phase_transition(SMALL_PHASE)
        for beta in SMALL_PHASE.betas:
            c = table.cell("type1", beta)
            band = 3.0 * math.sqrt(0.05 * 0.95 / c.trials)
            assert abs(c.value - 0.05) <= band + 1e-12

    def test_error_sum_se_combines(self):
        table = run_phase_transition(SMALL_PHASE)
        c1 = table.cell("type1", 0.5)
        c2 = table.cell("type2", 0.5)
        cs = table.cell("error_sum", 0.5)
        assert abs(cs.se - math.hypot(c1.se, c2.se)) < 1e-15

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            PhaseConfig(betas=(0.0, 0.5))
        with pytest.raises(ParameterError):
            PhaseConfig(trials=10)

    def test_boundary_exponent_matches_limit_law(self):
        # at beta = 1/2 the boundary constant is exactly 1 for every n, so the
        # error sum should approach alpha + (boundary Type II at gamma = 1)
        from wshift.distributions import gaussian, uniform01
        from wshift.limitlaw import BridgeGrid, LimitLawSampler, theoretical_type2
        from wshift.transport import lebesgue

        cfg = PhaseConfig(n=20_000, betas=(0.5,), trials=200, seed=88)
        table = run_phase_transition(cfg)
        sampler = LimitLawSampler.from_distributions(
            uniform01(), gaussian(0.0, 1.0, -8.0, 8.0), lebesgue(),
            BridgeGrid(2048), seed=5)
        predicted = cfg.alpha + theoretical_type2(sampler, 1.0, cfg.alpha, 30_000,
                                                  critical=cfg.critical)
        assert abs(table.cell("error_sum", 0.5).value - predicted) <= 0.1


POWERMAP_CFG = PowerMapConfig(deltas=(0.05, 0.09), gammas=(5.0, 9.0), n=20_000,
                              trials=80, law_reps=20_000, grid_k=1024, seed=7)


@pytest.fixture(scope="module")
def powermap_table():
    return run_power_map(POWERMAP_CFG)


class TestPowerMap:
    CFG = POWERMAP_CFG

    @pytest.fixture()
    def table(self, powermap_table):
        return powermap_table

    def test_empirical_matches_theoretical(self, table):
        for delta in self.CFG.deltas:
            for gamma in self.CFG.gammas:
                emp = table.cell("type2_empirical", delta, gamma)
                theo = table.cell("type2_theoretical", delta, gamma)
                tol = max(0.05, 3.0 * math.hypot(emp.se, theo.se))
                assert abs(emp.value - theo.value) <= tol

    def test_monotone_along_gamma(self, table):
        # level-set structure: stronger boundary constant, smaller Type II
        slack = 2.0 * math.sqrt(0.25 / self.CFG.trials)
        for delta in self.CFG.deltas:
            t2 = [table.cell("type2_empirical", delta, g).value for g in self.CFG.gammas]
            assert all(t2[i + 1] <= t2[i] + slack for i in range(len(t2) - 1))

    def test_monotone_along_delta(self, table):
        # rows of the map: larger signal strength at fixed gamma, smaller Type II
        slack = 2.0 * math.sqrt(0.25 / self.CFG.trials)
        for gamma in self.CFG.gammas:
            t2 = [table.cell("type2_empirical", d, gamma).value for d in self.CFG.deltas]
            assert all(t2[i + 1] <= t2[i] + slack for i in range(len(t2) - 1))

    def test_calibration_cell(self, table):
        c = table.cell("type1", 0.0, 0.0)
        assert abs(c.value - 0.05) <= 3.0 * math.sqrt(0.05 * 0.95 / c.trials) + 1e-12

    def test_unrealizable_delta_rejected(self):
        with pytest.raises(ParameterError, match="realizable"):
            PowerMapConfig(deltas=(0.2,))


KSCOMP_CFG = ComparisonConfig(family="sine", p_grid=(1.0,), gammas=(4.0, 10.0),
                              n=20_000, trials=60, seed=13)


@pytest.fixture(scope="module")
def kscomp_table():
    return run_ks_comparison(KSCOMP_CFG)


class TestKsComparison:
    CFG = KSCOMP_CFG

    @pytest.fixture()
    def table(self, kscomp_table):
        return kscomp_table

    def test_strong_regime(self, table):
        assert table.cell("power_w2", 1.0, 10.0).value >= 0.9
        assert table.cell("power_ks", 1.0, 10.0).value >= 0.9

    def test_weak_regime(self, table):
        assert table.cell("power_w2", 1.0, 4.0).value <= 0.5
        assert table.cell("power_ks", 1.0, 4.0).value <= 0.5

    def test_null_calibration_cells(self, table):
        for metric in ("type1_w2", "type1_ks"):
            c = table.cell(metric, 0.0, 0.0)
            assert abs(c.value - 0.05) <= 3.0 * math.sqrt(0.05 * 0.95 / c.trials) + 1e-12

    def test_family_validated(self):
        with pytest.raises(ParameterError, match="family"):
            ComparisonConfig(family="cosine")


class TestWeightComparison:
    def test_unit_weight_column_matches_ks_comparison(self):
        # identical sample streams: the a = 0 powers must coincide exactly
        shared = dict(p_grid=(0.3,), gammas=(10.0,), n=5000, trials=40, seed=99)
        ks_table = run_ks_comparison(ComparisonConfig(family="tail", **shared))
        w_table = run_weight_comparison(WeightComparisonConfig(
            a_values=(0.0,), family="tail", law_reps=11, grid_k=64, **shared))
        assert (w_table.cell("power", 0.0, 0.3, 10.0).value
                == ks_table.cell("power_w2", 0.3, 10.0).value)

    def test_per_weight_calibration_and_ordering(self):
        cfg = WeightComparisonConfig(a_values=(0.0, 2.0), p_grid=(0.3,), gammas=(10.0,),
                                     n=20_000, trials=80, law_reps=20_000,
                                     grid_k=1024, seed=55)
        table = run_weight_comparison(cfg)
        band = 3.0 * math.sqrt(0.05 * 0.95 / cfg.trials)
        for a in cfg.a_values:
            assert abs(table.cell("type1", a, 0.0, 0.0).value - 0.05) <= band + 1e-12
        p0 = table.cell("power", 0.0, 0.3, 10.0)
        p2 = table.cell("power", 2.0, 0.3, 10.0)
        assert p2.value >= p0.value - 2.0 * p0.se

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            WeightComparisonConfig(a_values=(13.0,))


class TestCellValidation:
    def test_probability_cells_in_range(self):
        table = run_phase_transition(SMALL_PHASE)
        for c in table.cells:
            if c.metric != "error_sum":
                assert 0.0 <= c.value <= 1.0
            else:
                assert 0.0 <= c.value <= 2.0

    def test_cell_is_frozen(self):
        c = Cell((0.1,), "power", 0.5, 0.05, 100)
        with pytest.raises(AttributeError):
            c.value = 0.9
