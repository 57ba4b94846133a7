import math

import numpy as np
import pytest

from rrclab import (PlantParams, PlantState, characteristic_freqs,
                    frequency_response, plant_derivative, table1, table2)

TABLE1 = table1()
TABLE2 = table2()


class TestPlantParams:
    def test_rejects_nonpositive_mass(self):
        with pytest.raises(ValueError):
            PlantParams(motor_mass=0.0, load_mass=1.0, spring_coeff=100.0)

    def test_rejects_negative_damping(self):
        with pytest.raises(ValueError):
            PlantParams(1.0, 1.0, 100.0, viscous_damping_motor=-1.0)

    def test_state_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            PlantState(x_m=math.nan)

    def test_relative_position_is_derived(self):
        s = PlantState(x_m=2e-3, x_l=0.5e-3)
        assert s.x_r == pytest.approx(1.5e-3, abs=0)


class TestDerivative:
    def test_equilibrium_is_zero(self):
        d = plant_derivative(PlantState(), 0.0, 0.0, 0.0, TABLE1)
        assert d.as_tuple() == (0.0, 0.0, 0.0, 0.0)

    def test_force_accelerates_motor_only(self):
        d = plant_derivative(PlantState(), 10.0, 0.0, 0.0, TABLE1)
        assert d.v_m == pytest.approx(10.0 / 1.20)
        assert d.v_l == 0.0

    def test_spring_deflection_hand_value(self):
        # 1 mm deflection: a_m = -4662*0.001/1.20, a_l = +4662*0.001/1.09
        d = plant_derivative(PlantState(x_m=1e-3), 0.0, 0.0, 0.0, TABLE1)
        assert d.v_m == pytest.approx(-4662 * 1e-3 / 1.20, rel=1e-12)
        assert d.v_l == pytest.approx(4662 * 1e-3 / 1.09, rel=1e-12)

    def test_damping_terms(self):
        params = PlantParams(1.20, 1.09, 4662.0,
                             viscous_damping_motor=2.0,
                             viscous_damping_load=3.0)
        d = plant_derivative(PlantState(v_m=0.5, v_l=-0.25), 0.0, 0.0, 0.0,
                             params)
        assert d.v_m == pytest.approx(-2.0 * 0.5 / 1.20)
        assert d.v_l == pytest.approx(3.0 * 0.25 / 1.09)

    def test_rejects_nonfinite_force(self):
        with pytest.raises(ValueError, match="force_in"):
            plant_derivative(PlantState(), math.inf, 0.0, 0.0, TABLE1)


class TestCharacteristicFreqs:
    def test_table1_frequencies(self):
        f = characteristic_freqs(TABLE1)
        assert f.f_p == pytest.approx(14.4, rel=5e-3)
        assert f.f_z == pytest.approx(10.4, rel=5e-3)

    def test_table2_frequencies(self):
        f = characteristic_freqs(TABLE2)
        assert f.f_p == pytest.approx(13.3, rel=5e-3)
        assert f.f_z == pytest.approx(8.85, rel=5e-3)

    def test_huge_motor_mass_limit(self):
        params = PlantParams(1e12, 1.09, 4662.0)
        f = characteristic_freqs(params)
        assert f.omega_p == pytest.approx(f.omega_z, rel=1e-9)

    def test_frequency_relation_exact(self):
        # omega_p^2 = omega_z^2 * (1 + Ml/Mm), pure algebra
        rng = np.random.default_rng(7)
        for _ in range(1000):
            mm, ml = rng.uniform(0.1, 50.0, 2)
            ks = rng.uniform(10.0, 1e6)
            f = characteristic_freqs(PlantParams(mm, ml, ks))
            assert f.omega_p ** 2 == pytest.approx(
                f.omega_z ** 2 * (1 + ml / mm), rel=1e-12)


class TestFrequencyResponse:
    def test_channel_identity(self):
        f = characteristic_freqs(TABLE1)
        for omega in np.geomspace(0.1, 1000.0, 100):
            if abs(omega - f.omega_p) / f.omega_p < 1e-6:
                continue
            gm = frequency_response(TABLE1, "motor", omega)
            gl = frequency_response(TABLE1, "load", omega)
            gr = frequency_response(TABLE1, "relative", omega)
            assert gm - gl == pytest.approx(gr, rel=1e-12)

    def test_relative_gain_at_antiresonance(self):
        f = characteristic_freqs(TABLE1)
        gr = frequency_response(TABLE1, "relative", f.omega_z)
        expected = 1.0 / (TABLE1.motor_mass * (f.omega_p ** 2 - f.omega_z ** 2))
        assert abs(gr) == pytest.approx(expected, rel=1e-12)
        # load channel has the same magnitude there (motor channel has a zero)
        gl = frequency_response(TABLE1, "load", f.omega_z)
        assert abs(gl) == pytest.approx(expected, rel=1e-12)
        gm = frequency_response(TABLE1, "motor", f.omega_z)
        assert abs(gm) < 1e-15

    def test_rigid_body_asymptote(self):
        # |x_l/F| * omega^2 -> 1/(Mm+Ml) as omega -> 0
        for omega in (1e-3, 1e-4):
            gl = frequency_response(TABLE1, "load", omega)
            assert abs(gl) * omega ** 2 == pytest.approx(1.0 / 2.29, rel=1e-4)

    def test_pole_guard_band(self):
        f = characteristic_freqs(TABLE1)
        with pytest.raises(ValueError, match="guard band"):
            frequency_response(TABLE1, "load", f.omega_p * (1 + 1e-12))

    def test_rejects_unknown_channel(self):
        with pytest.raises(ValueError, match="channel"):
            frequency_response(TABLE1, "torque", 1.0)
