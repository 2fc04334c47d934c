import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import windward as ww

PI4 = math.pi / 4


def parabolic(frozen=None):
    return ww.PolarModel(kind="parabolic", coefficient=0.05, peak=PI4,
                         control_interval=(0.0, math.pi / 2),
                         frozen_angle=frozen)


def make_scenario(**kw):
    grid = ww.GridSpec(bounds=((-1.4, 1.4), (0.0, 2.0), (-1.0, 1.0)),
                       steps=(0.1, 0.1, 0.1), dt=0.1)
    base = dict(
        modes=ww.ModeSet(2, ("port", "starboard")),
        wind=ww.WindModel(mean_speed=1.0, drift=0.0, diffusion=0.02,
                          theta_box=(-1.0, 1.0)),
        polar=parabolic(),
        grid=grid,
        costs=ww.CostSpec(discount=1e-6, boundary=100.0,
                          switch=ww.SwitchCostTable.symmetric(2, 2.0)),
        target=ww.TargetSpec(center=(0.0, 1.8), radius=0.04),
    )
    base.update(kw)
    return ww.Scenario(**base)


class TestPolarSpeed:
    def test_parabolic_zero_upwind(self):
        assert ww.polar_speed(parabolic(), 1.0, 1, 0.0) == 0.0

    def test_parabolic_zero_at_half_pi(self):
        assert ww.polar_speed(parabolic(), 1.0, 1, math.pi / 2) == pytest.approx(0.0, abs=1e-15)

    def test_parabolic_peak(self):
        # 0.05 * (pi/4)^2
        assert ww.polar_speed(parabolic(), 1.0, 1, PI4) == pytest.approx(0.0308425, abs=1e-6)

    def test_outside_interval_raises(self):
        with pytest.raises(ValueError):
            ww.polar_speed(parabolic(), 1.0, 1, 2.0)

    def test_constant(self):
        p = ww.PolarModel(kind="constant", speed=0.05, frozen_angle=PI4)
        assert ww.polar_speed(p, 1.0, 2, 0.3) == 0.05

    def test_tabulated_interpolates(self):
        p = ww.PolarModel(kind="tabulated",
                          angles=np.array([0.0, 0.5, 1.0]),
                          speeds=np.array([0.0, 0.04, 0.02]),
                          control_interval=(0.0, 1.0))
        assert ww.polar_speed(p, 1.0, 1, 0.25) == pytest.approx(0.02)

    @given(st.floats(0.0, math.pi / 2))
    def test_parabolic_nonnegative(self, u):
        assert ww.polar_speed(parabolic(), 1.0, 1, u) >= 0.0


class TestDrift:
    def constant_scenario(self, drift=0.0):
        polar = ww.PolarModel(kind="constant", speed=0.05, frozen_angle=PI4)
        wind = ww.WindModel(mean_speed=1.0, drift=drift, diffusion=0.0,
                            theta_box=(-1.0, 1.0))
        return make_scenario(polar=polar, wind=wind)

    def test_starboard_quadrant(self):
        f = ww.drift(self.constant_scenario(), (0.0, 0.0, 0.0), 2, PI4)
        assert f == pytest.approx([0.0353553, 0.0353553, 0.0], abs=1e-6)

    def test_port_mirrors_x1(self):
        f = ww.drift(self.constant_scenario(), (0.0, 0.0, 0.0), 1, PI4)
        assert f == pytest.approx([-0.0353553, 0.0353553, 0.0], abs=1e-6)

    def test_upwind_parabolic_is_wind_only(self):
        s = make_scenario(wind=ww.WindModel(1.0, 0.15, 0.0, (-1.0, 1.0)))
        f = ww.drift(s, (0.0, 0.0, 0.3), 1, 0.0)
        assert f == pytest.approx([0.0, 0.0, 0.15], abs=1e-15)

    def test_invalid_mode(self):
        with pytest.raises(ValueError):
            ww.drift(self.constant_scenario(), (0.0, 0.0, 0.0), 3, PI4)

    @given(st.floats(-1.0, 1.0), st.floats(0.0, math.pi / 2))
    def test_tack_mirror_symmetry(self, x3, u):
        s = make_scenario()
        f1 = ww.drift(s, (0.2, 0.5, x3), 1, u)
        f2 = ww.drift(s, (0.2, 0.5, -x3), 2, u)
        assert f2[0] == pytest.approx(-f1[0], abs=1e-12)
        assert f2[1] == pytest.approx(f1[1], abs=1e-12)

    @given(st.floats(0.0, math.pi / 2), st.sampled_from([1, 2]))
    def test_planar_speed_magnitude(self, u, q):
        # the two planar components share the angle only at x3 = 0
        s = make_scenario()
        f = ww.drift(s, (0.2, 0.5, 0.0), q, u)
        r = ww.polar_speed(s.polar, 1.0, q, u)
        assert math.hypot(f[0], f[1]) == pytest.approx(r, abs=1e-12)


class TestMaskedSpeed:
    def masked_scenario(self):
        s = make_scenario()
        m = np.zeros(s.grid.shape[:2], dtype=bool)
        m[: s.grid.shape[0] // 2, : s.grid.shape[1] // 4] = True  # SW corner
        return s.with_(obstacles=ww.ObstacleMask(m))

    def test_zero_inside(self):
        s = self.masked_scenario()
        v = ww.masked_speed(s.polar, s.obstacles, s.grid, np.array([-1.0, 0.1]),
                            1.0, 1, PI4)
        assert v == 0.0

    def test_passthrough_outside(self):
        s = self.masked_scenario()
        v = ww.masked_speed(s.polar, s.obstacles, s.grid, np.array([1.0, 1.5]),
                            1.0, 1, PI4)
        assert v == ww.polar_speed(s.polar, 1.0, 1, PI4)

    def test_absent_mask(self):
        s = make_scenario()
        v = ww.masked_speed(s.polar, None, s.grid, np.array([-1.0, 0.1]),
                            1.0, 1, PI4)
        assert v == ww.polar_speed(s.polar, 1.0, 1, PI4)

    @given(st.floats(-1.3, 1.3), st.floats(0.1, 1.9), st.floats(0.0, math.pi / 2))
    def test_never_exceeds_polar(self, x1, x2, u):
        s = self.masked_scenario()
        v = ww.masked_speed(s.polar, s.obstacles, s.grid, np.array([x1, x2]),
                            1.0, 1, u)
        assert v <= ww.polar_speed(s.polar, 1.0, 1, u)


class TestDiffusion:
    def test_vector(self):
        assert ww.diffusion(make_scenario()) == pytest.approx([0.0, 0.0, 0.02])

    def test_zero(self):
        s = make_scenario(wind=ww.WindModel(1.0, 0.0, 0.0, (-1.0, 1.0)))
        assert not ww.diffusion(s).any()

    def test_tenth(self):
        s = make_scenario(wind=ww.WindModel(1.0, 0.0, 0.1, (-1.0, 1.0)))
        assert ww.diffusion(s)[2] == 0.1


class TestValidate:
    def test_test1_preset_valid(self):
        assert ww.validate_scenario(ww.load_preset("test1")) == []

    def test_zero_switch_cost(self):
        t = ww.SwitchCostTable(np.array([[0.0, 0.0], [2.0, 0.0]]))
        s = make_scenario(costs=ww.CostSpec(1e-6, 100.0, t))
        assert any("infimum" in v for v in ww.validate_scenario(s))

    def test_triangle_equality_flagged(self):
        c = np.array([[0.0, 1.0, 3.0],
                      [1.0, 0.0, 2.0],
                      [3.0, 2.0, 0.0]])  # cost(1,3) = cost(1,2)+cost(2,3)
        s = make_scenario(modes=ww.ModeSet(3),
                          costs=ww.CostSpec(1e-6, 100.0, ww.SwitchCostTable(c)))
        assert any("triangle" in v for v in ww.validate_scenario(s))

    def test_constant_polar_needs_frozen_angle(self):
        p = ww.PolarModel(kind="constant", speed=0.05)
        assert any("frozen" in v for v in ww.validate_scenario(make_scenario(polar=p)))

    def test_negative_diffusion(self):
        s = make_scenario(wind=ww.WindModel(1.0, 0.0, -0.1, (-1.0, 1.0)))
        assert any("diffusion" in v for v in ww.validate_scenario(s))

    def test_target_on_obstacle(self):
        s = make_scenario()
        m = np.ones(s.grid.shape[:2], dtype=bool)
        s = s.with_(obstacles=ww.ObstacleMask(m))
        assert any("target" in v for v in ww.validate_scenario(s))
