"""Initial-value and forced solvers: conservation, moments, growth guards.

The moment identities used as oracles follow from the generator
L = (1/2) d²/dx² + (1+2a)/(2x) d/dx: constants are preserved and
L[y²] = 2(1+a), so the second moment grows linearly at rate 2(1+a).
"""

import numpy as np
import pytest

from vbessel.cauchy import (
    GrowthReport,
    InitialData,
    SourceTerm,
    check_growth,
    solve_homogeneous,
    solve_inhomogeneous,
)
from vbessel.coeff import const_field, get_field
from vbessel.errors import GrowthError, ParameterError
from vbessel.parametrix import assemble_fs


class TestConservation:
    def test_constant_field_exact(self, fast_ctrl):
        fs = assemble_fs(const_field(-0.5), ctrl=fast_ctrl)
        ones = InitialData(lambda y: np.ones_like(np.asarray(y, dtype=float)))
        u = solve_homogeneous(fs, ones, 0.0, [(0.5, 0.8), (1.2, 1.5)])
        assert np.all(np.abs(u - 1.0) < 1e-8)

    def test_variable_field(self, fs_sin):
        ones = InitialData(lambda y: np.ones_like(np.asarray(y, dtype=float)))
        u = solve_homogeneous(fs_sin, ones, 0.0, [(0.6, 0.9), (1.0, 1.4)])
        assert np.all(np.abs(u - 1.0) < 5e-3)


class TestMoments:
    @pytest.mark.parametrize("a", (-0.8, -0.5, -0.2))
    def test_second_moment_rate(self, a, fast_ctrl):
        # E[X_t^2] = x^2 + 2(1+a) t for the constant-index process.
        # The data are halved to sit under the admissibility envelope
        # exp(x^2/4) with constant one; linearity restores the moment.
        fs = assemble_fs(const_field(a), ctrl=fast_ctrl)
        sq = InitialData(lambda y: 0.5 * np.asarray(y, dtype=float) ** 2)
        grid = [(0.5, 0.7), (1.0, 1.3)]
        u = solve_homogeneous(fs, sq, 0.0, grid)
        for (t, x), got in zip(grid, u):
            expect = 0.5 * (x * x + 2.0 * (1.0 + a) * t)
            assert got == pytest.approx(expect, rel=1e-6)

    def test_linearity(self, fast_ctrl):
        fs = assemble_fs(const_field(-0.5), ctrl=fast_ctrl)
        f1 = InitialData(lambda y: 0.5 * np.asarray(y, dtype=float) ** 2)
        f2 = InitialData(lambda y: np.ones_like(np.asarray(y, dtype=float)))
        combo = InitialData(
            lambda y: 0.5 * np.asarray(y, dtype=float) ** 2 + 0.5
        )
        grid = [(0.8, 1.1)]
        lhs = solve_homogeneous(fs, combo, 0.0, grid)
        rhs = solve_homogeneous(fs, f1, 0.0, grid) + 0.5 * solve_homogeneous(
            fs, f2, 0.0, grid
        )
        assert lhs[0] == pytest.approx(rhs[0], rel=1e-9)

    def test_initial_trace(self, fast_ctrl):
        # u(t, x) approaches f(x) as the horizon shrinks.
        fs = assemble_fs(const_field(-0.4), ctrl=fast_ctrl)
        f = InitialData(lambda y: np.cos(np.asarray(y, dtype=float)))
        x = 1.2
        errs = []
        for t in (0.4, 0.1, 0.025):
            u = solve_homogeneous(fs, f, 0.0, [(t, x)])
            errs.append(abs(u[0] - np.cos(x)))
        assert errs[2] < errs[1] < errs[0]
        assert errs[2] < 0.02


class TestForcing:
    def test_unit_forcing_gives_elapsed_time(self, fs_sin):
        g = SourceTerm(lambda t, y: np.ones_like(np.asarray(y, dtype=float)))
        grid = [(0.7, 0.9), (1.1, 1.3)]
        u = solve_inhomogeneous(fs_sin, g, 0.0, grid)
        for (t, _), got in zip(grid, u):
            assert got == pytest.approx(t, abs=5e-3)

    def test_time_ramp_forcing(self, fast_ctrl):
        # g(θ, y) = θ/6 with a mass-conserving kernel gives (t² - s²)/12;
        # the 1/6 keeps the term under the admissibility envelope at the
        # largest probed time.
        fs = assemble_fs(const_field(-0.5), ctrl=fast_ctrl)
        g = SourceTerm(
            lambda t, y: (t / 6.0) * np.ones_like(np.asarray(y, dtype=float))
        )
        s = 0.2
        grid = [(0.9, 1.1)]
        u = solve_inhomogeneous(fs, g, s, grid)
        assert u[0] == pytest.approx((0.9**2 - s**2) / 12.0, abs=1e-3)


class TestGrowthGuards:
    def test_check_growth_accepts_scaled_polynomial(self):
        # Polynomials are admissible once normalized under the envelope
        # with constant one (y^4/25 peaks at ~0.35 of it).
        rep = check_growth(
            InitialData(lambda y: np.asarray(y, dtype=float) ** 4 / 25.0)
        )
        assert isinstance(rep, GrowthReport)
        assert rep.ok
        assert rep.max_ratio <= 1.0

    def test_check_growth_flags_unscaled_polynomial(self):
        # The same quartic without normalization pokes above the
        # constant-one envelope at moderate x.
        rep = check_growth(InitialData(lambda y: np.asarray(y, dtype=float) ** 4))
        assert not rep.ok

    def test_check_growth_flags_super_envelope(self):
        bad = InitialData(lambda y: np.exp(0.45 * np.asarray(y, dtype=float) ** 2))
        rep = check_growth(bad)
        assert not rep.ok
        assert rep.max_ratio > 1.0

    def test_solver_rejects_bad_data(self, fast_ctrl):
        fs = assemble_fs(const_field(-0.5), ctrl=fast_ctrl)
        bad = InitialData(lambda y: np.exp(0.45 * np.asarray(y, dtype=float) ** 2))
        with pytest.raises(GrowthError):
            solve_homogeneous(fs, bad, 0.0, [(0.5, 1.0)])

    def test_solver_rejects_long_horizon(self, fast_ctrl):
        fs = assemble_fs(const_field(-0.5), ctrl=fast_ctrl)
        ones = InitialData(lambda y: np.ones_like(np.asarray(y, dtype=float)))
        # (1 - Delta) * (t - s) >= 1 is inadmissible: the envelope's own
        # integral against the kernel diverges there.
        with pytest.raises(GrowthError):
            solve_homogeneous(fs, ones, 0.0, [(2.5, 1.0)])

    def test_argument_validation(self, fast_ctrl):
        fs = assemble_fs(const_field(-0.5), ctrl=fast_ctrl)
        ones = InitialData(lambda y: np.ones_like(np.asarray(y, dtype=float)))
        with pytest.raises(ParameterError):
            solve_homogeneous("nope", ones, 0.0, [(0.5, 1.0)])
        with pytest.raises(ParameterError):
            solve_homogeneous(fs, "nope", 0.0, [(0.5, 1.0)])
        with pytest.raises(ParameterError):
            solve_homogeneous(fs, ones, 0.0, [])

    def test_delta_window(self):
        with pytest.raises(ParameterError):
            InitialData(lambda y: y, Delta=0.0)
        with pytest.raises(ParameterError):
            SourceTerm(lambda t, y: y, Delta=1.5)
