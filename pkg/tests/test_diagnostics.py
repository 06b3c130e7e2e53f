import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from difffree.annulus2d import AnnulusGrid, AnnulusState
from difffree.bc import BoundaryCondition as BC
from difffree.channel2d import ChannelConfig, ChannelGrid, ChannelState, run
from difffree.diagnostics import (
    CSV_COLUMNS,
    DiagnosticsRecord,
    balance_residuals,
    decay_rate,
    energy_growth_check,
    fit_power_law,
    lp_increases,
    record,
    shear_profile,
    shear_profile_d2,
    trapezoid_weights,
)


def _rec(t, e=1.0, pal=0.0, E=1.0, lp=(1.0, 1.0, 1.0), work=0.0, diss=0.0):
    return DiagnosticsRecord(t, e, pal, E, 0.0, *lp, boundary_stress_work=work, bulk_dissipation=diss)


class TestRecord:
    def test_cosine_channel(self):
        g = ChannelGrid(8, 257)
        s = ChannelState.from_physical(g, np.tile(np.cos(np.pi * g.y), (g.nx, 1)))
        r = record(s, 1e-2)
        assert r.enstrophy == pytest.approx(0.25, abs=1e-14)
        assert r.l2 == pytest.approx(math.sqrt(0.5), abs=1e-14)
        assert abs(r.mean_vorticity) < 1e-15
        assert r.l1 == pytest.approx(2 / np.pi, rel=1e-4)
        assert r.circulations == (None, None)

    def test_zero_state(self):
        r = record(ChannelState.from_physical(ChannelGrid(8, 17), np.zeros((8, 17))), 1.0)
        assert r.lp_norms == (0.0, 0.0, 0.0)
        assert r.energy == 0.0 and r.enstrophy == 0.0

    def test_annulus_has_circulations(self):
        g = AnnulusGrid(16, 33)
        r = record(AnnulusState.from_physical(g, np.zeros(g.shape), 1.0), 1e-3)
        assert r.circ_inner == pytest.approx(1.0, abs=1e-14)
        assert r.circ_outer == pytest.approx(1.0, abs=1e-14)

    def test_rejects_unknown_state(self):
        with pytest.raises(TypeError):
            record(object(), 1.0)

    def test_row_layout(self):
        r = _rec(0.5)
        row = r.as_row()
        assert len(row) == len(CSV_COLUMNS) and row[0] == 0.5
        assert row[CSV_COLUMNS.index("circ_inner")] is None
        assert r.is_finite()
        assert not _rec(0.5, e=float("nan")).is_finite()

    def test_wall_work_vanishes_stress_free(self):
        g = ChannelGrid(16, 65)
        X, Y = g.mesh()
        w0 = np.sin(np.pi * Y) * np.cos(2 * np.pi * X)
        _, rec = run(ChannelConfig(1e-2, 1e-2, g, BC.STRESS_FREE, t_end=0.1), w0)
        assert max(abs(r.boundary_stress_work) for r in rec[1:]) < 1e-15

    def test_wall_work_vanishes_no_slip(self):
        g = ChannelGrid(16, 65)
        X, Y = g.mesh()
        _, rec = run(ChannelConfig(1e-2, 1e-2, g, BC.NO_SLIP, t_end=0.1), np.cos(np.pi * Y) * np.cos(2 * np.pi * X))
        assert max(abs(r.boundary_stress_work) for r in rec[1:]) < 1e-10


class TestEnergyGrowth:
    def test_closed_form(self):
        eg = energy_growth_check(1.0, 1.0)
        assert eg.analytic == pytest.approx(20 / 63)
        assert eg.rel_error < 1e-8
        assert eg.wall_curvature == (0.0, 0.0)
        # int U = 0 exactly; Simpson leaves its O(h^4) error on the quintic
        assert abs(eg.flux) < 1e-9

    @given(Lx=st.floats(0.1, 10.0), nu=st.floats(1e-6, 1.0))
    @settings(max_examples=20, deadline=None)
    def test_scales_linearly(self, Lx, nu):
        assert energy_growth_check(Lx, nu).rel_error < 1e-8

    def test_inviscid(self):
        assert energy_growth_check(1.0, 0.0).rel_error == 0.0

    def test_too_coarse(self):
        with pytest.raises(ValueError):
            energy_growth_check(1.0, 1.0, nr=8)

    def test_profile_is_diffusion_free_compatible(self):
        assert shear_profile(0.0) == 1.0
        assert shear_profile(1.0) == pytest.approx(-4.0 / 3.0)
        assert shear_profile_d2(0.0) == shear_profile_d2(1.0) == 0.0

    def test_trapezoid_weights(self):
        w = trapezoid_weights(11, 0.1)
        assert w.sum() == pytest.approx(1.0)
        assert w[0] == w[-1] == 0.05


class TestBalance:
    def test_exact_series(self):
        # E(t) = 1 - 2t with work - dissipation = -2; enstrophy decays into pal
        recs = [_rec(t, e=1 - t, pal=t, E=1 - 2 * t, diss=2.0) for t in np.linspace(0, 1, 11)]
        rep = balance_residuals(recs)
        assert rep.enstrophy_residual < 1e-15
        assert rep.energy_residual < 1e-12

    def test_detects_violation(self):
        recs = [_rec(t, e=1 - t, pal=0.0) for t in np.linspace(0, 1, 5)]
        assert balance_residuals(recs).enstrophy_residual == pytest.approx(1.0)

    def test_needs_three_records(self):
        with pytest.raises(ValueError):
            balance_residuals([_rec(0.0), _rec(1.0)])

    def test_time_must_increase(self):
        with pytest.raises(ValueError):
            balance_residuals([_rec(0.0), _rec(1.0), _rec(1.0)])


class TestLp:
    def test_decreasing(self):
        recs = [_rec(t, lp=(1 - t, 1 - t, 1 - t)) for t in np.linspace(0, 0.5, 6)]
        assert lp_increases(recs) == {1: 0.0, 2: 0.0, 4: 0.0}

    def test_relative_increase(self):
        recs = [_rec(0.0, lp=(2.0, 1.0, 1.0)), _rec(1.0, lp=(2.2, 1.0, 0.9))]
        inc = lp_increases(recs)
        assert inc[1] == pytest.approx(0.1) and inc[2] == 0.0 and inc[4] == 0.0

    def test_single_record(self):
        assert lp_increases([_rec(0.0)]) == {1: 0.0, 2: 0.0, 4: 0.0}


class TestFits:
    def test_power_law_errors(self):
        with pytest.raises(ValueError):
            fit_power_law([1e-3, 1e-4], [1.0, 1.0])
        with pytest.raises(ValueError):
            fit_power_law([1e-3, 1e-4, 1e-5], [1.0, -1.0, 1.0])
        with pytest.raises(ValueError):
            fit_power_law([1e-3, 1e-4, 1e-5], [1.0, 1.0])

    def test_power_law_predict(self):
        fit = fit_power_law([1e-2, 1e-3, 1e-4], [3e-1, 3e-1 * 10**-0.5, 3e-2])
        assert fit.slope == pytest.approx(0.5)
        assert fit.predict(1e-6) == pytest.approx(3e-3)

    def test_decay_rate(self):
        t = np.linspace(0, 2, 9)
        assert decay_rate(t, 5 * np.exp(-2 * t)) == pytest.approx(2.0)
        with pytest.raises(ValueError):
            decay_rate([0.0, 1.0], [1.0, 0.0])
