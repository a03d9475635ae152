import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasi_ch import diagnostics as dg
from quasi_ch.constitutive import MaterialParams
from quasi_ch.diagnostics import DiagnosticsRecord, ThresholdPolicy, check_thresholds
from quasi_ch.fields import Grid
from quasi_ch.solver import SolverConfig, State, step

PARAMS = MaterialParams()


def later(state, dt, **changes):
    new = state.copy(**changes)
    new.t = state.t + dt
    return new


def make_record(**overrides):
    base = dict(
        t=0.0, total_mass=0.0, c_min=-0.5, c_max=0.5, kinetic_energy=0.0, internal_energy=1.0, free_energy=1.0,
        lyapunov=1.0, constraint_residual=0.0, assumption_violation_fraction=0.0, mass_scale=1.0,
    )
    base.update(overrides)
    return DiagnosticsRecord(**base)


class TestRecord:
    @pytest.mark.parametrize("c", [-1.0, 1.0])
    def test_equilibrium_has_no_production(self, c):
        g = Grid.uniform(16, 1.0)
        s0 = State.uniform(g, c=c, theta=1.4)
        rec = dg.record(later(s0, 1e-3), PARAMS, s0)
        assert abs(rec.entropy_production) <= 1e-12
        assert rec.constraint_residual == 0.0
        assert rec.mass_change == 0.0

    def test_uniform_heating_budget(self):
        g = Grid.uniform((8, 10), (1.0, 2.0))
        r, dt = 3.0, 1e-3
        s0 = State(g, 0.0, g.vector(), g.scalar(0.2), g.scalar(1.0), g.vector(), r=g.scalar(r))
        s1 = later(s0, dt, theta=s0.theta + dt * r / PARAMS.C)
        rec = dg.record(s1, PARAMS, s0)
        rec0 = dg.record(s0, PARAMS)
        assert rec.total_mass == rec0.total_mass
        supplied = g.integrate(dg.cst.density(s0.c, PARAMS) * r * dt)
        assert rec.internal_energy - rec0.internal_energy == pytest.approx(supplied, rel=1e-10)
        assert abs(rec.energy_residual) <= 1e-10 * supplied / dt

    def test_rate_entries_absent_without_previous(self):
        s = State.uniform(Grid.uniform(8, 1.0), c=0.1)
        rec = dg.record(s, PARAMS)
        assert rec.mass_change is None and rec.entropy_production is None and rec.energy_residual is None
        assert len(rec.values()) == len(DiagnosticsRecord.columns())

    def test_grid_mismatch(self):
        a = State.uniform(Grid.uniform(8, 1.0))
        b = State.uniform(Grid.uniform(9, 1.0))
        with pytest.raises(ValueError, match="grid"):
            dg.record(a, PARAMS, b)

    def test_assumption_fraction_zero_at_rest(self):
        g = Grid.uniform(32, 1.0)
        x = g.centers()[0]
        s = State(g, 0.0, g.vector(), np.tanh((x - 0.5) / 0.05), g.scalar(1.0), g.vector())
        assert dg.record(s, PARAMS).assumption_violation_fraction == 0.0

    def test_lyapunov_of_pure_phase(self):
        s = State.uniform(Grid.uniform(8, 1.0), c=1.0)
        assert dg.lyapunov_functional(s, PARAMS) == 0.0
        s = State.uniform(Grid.uniform(8, 2.0), c=0.0)
        assert dg.lyapunov_functional(s, PARAMS) == pytest.approx(2.0 * dg.cst.density(0.0, PARAMS) * PARAMS.theta0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_record_invariants(self, seed):
        rng = np.random.default_rng(seed)
        g = Grid.uniform((8, 9), (1.0, 1.0))
        s = State(
            g, 0.0, rng.normal(size=(2, 8, 9)), rng.uniform(-1.2, 1.2, (8, 9)), rng.uniform(0.5, 2, (8, 9)),
            rng.normal(size=(2, 8, 9)),
        )
        rec = dg.record(s, PARAMS)
        assert rec.kinetic_energy >= 0 and rec.lyapunov >= 0
        assert rec.c_min <= rec.c_max
        assert 0.0 <= rec.assumption_violation_fraction <= 1.0

    def test_entropy_production_nonnegative_over_steps(self):
        g = Grid.uniform(48, 1.0)
        x = g.centers()[0]
        q = g.vector()
        q[0] = 0.5 * np.sin(np.pi * x)
        s = State(g, 0.0, 0.1 * np.sin(np.pi * x)[None], 0.6 * np.cos(3 * x), 1.0 + 0.3 * x, q)
        cfg = SolverConfig(dt=1e-5)
        for _ in range(5):
            new, _ = step(s, PARAMS, cfg)
            ext, classical = dg.entropy_production(new, s, PARAMS)
            assert ext >= -1e-9
            assert np.isfinite(classical)
            s = new
        with pytest.raises(ValueError):
            dg.entropy_production(s, s, PARAMS)


class TestThresholds:
    def test_overshoot_within_tolerance(self):
        assert check_thresholds(make_record(c_max=1.0005), ThresholdPolicy(c_overshoot=1e-3)) == []

    def test_overshoot_beyond_tolerance(self):
        found = check_thresholds(make_record(c_min=-1.01))
        assert [v.name for v in found] == ["c-range"]

    def test_second_law(self):
        found = check_thresholds(make_record(entropy_production=-1e-3), ThresholdPolicy(entropy_floor=-1e-9))
        assert [v.name for v in found] == ["second-law"]
        assert "second-law" in str(found[0])

    def test_tiny_mass_drift(self):
        assert check_thresholds(make_record(mass_change=1e-15)) == []
        assert [v.name for v in check_thresholds(make_record(mass_change=1e-9))] == ["mass"]

    def test_lyapunov_is_opt_in(self):
        rec = make_record(lyapunov_change=1e-6)
        assert check_thresholds(rec) == []
        assert [v.name for v in check_thresholds(rec, ThresholdPolicy(check_lyapunov=True))] == ["lyapunov"]
