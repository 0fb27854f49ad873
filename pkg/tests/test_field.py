import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monofd.errors import ConfigError, FieldValidationError
from monofd.field import (
    ProbeTable,
    SplittingConstants,
    built_in_field,
    compute_constants,
    eigen_pair,
    field_from_expressions,
    ratio_functions,
    validate_spd,
)

SQRT2 = math.sqrt(2.0)


def constant_field(a, b, c, name="const"):
    return field_from_expressions(name, a, b, c)


class TestTensorEvaluation:
    def test_exam1_point_value(self):
        field = built_in_field("exam1")
        a, b, c = field.tensor(0.25, 0.5)
        assert (a, c) == (9.0, 3.0)
        assert b == pytest.approx(4.0 * math.sin(math.pi / 4))
        assert b == pytest.approx(2.828427, abs=1e-6)

    def test_identity_everywhere(self):
        field = built_in_field("identity")
        assert field.tensor(0.3, 0.7) == (1.0, 0.0, 1.0)

    def test_exam4_origin(self):
        # theta = pi*sin(0)*cos(0) = 0, so the tensor is diag(k, 1)
        field = built_in_field("exam4", k=10)
        a, b, c = field.tensor(0.0, 0.0)
        assert a == pytest.approx(10.0)
        assert b == pytest.approx(0.0, abs=1e-15)
        assert c == pytest.approx(1.0)

    def test_domain_error(self):
        field = built_in_field("exam1")
        with pytest.raises(ConfigError):
            field.tensor(1.2, 0.5)

    def test_unknown_name(self):
        with pytest.raises(ConfigError):
            built_in_field("exam2")


class TestEigen:
    def test_isotropic(self):
        pair = eigen_pair(built_in_field("identity"), 0.5, 0.5)
        assert pair.lambda1 == pytest.approx(1.0)
        assert pair.lambda2 == pytest.approx(1.0)

    def test_exam4_diagonal_point(self):
        pair = eigen_pair(built_in_field("exam4", k=10), 0.0, 0.0)
        assert pair.lambda1 == pytest.approx(10.0)
        assert pair.lambda2 == pytest.approx(1.0)
        assert pair.psi == pytest.approx(0.0)

    def test_hand_characteristic_polynomial(self):
        # (9,2,3): lambda = 6 +- sqrt(13) from the characteristic polynomial
        pair = eigen_pair(constant_field(9, 2, 3), 0.1, 0.1)
        assert pair.lambda1 == pytest.approx(6 + math.sqrt(13), rel=1e-12)
        assert pair.lambda2 == pytest.approx(6 - math.sqrt(13), rel=1e-12)

    @given(
        st.floats(0.2, 9.0),
        st.floats(-2.0, 2.0),
        st.floats(0.2, 9.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_identities_random(self, a, b, c):
        if a * c - b * b <= 1e-6:
            return
        field = constant_field(a, b, c)
        pair = eigen_pair(field, 0.5, 0.5)
        assert pair.lambda1 * pair.lambda2 == pytest.approx(a * c - b * b, rel=1e-12, abs=1e-12)
        assert pair.lambda1 + pair.lambda2 == pytest.approx(a + c, rel=1e-12)
        assert -math.pi / 2 <= pair.psi <= math.pi / 2
        cp, sp = math.cos(pair.psi), math.sin(pair.psi)
        assert pair.lambda1 * cp * cp + pair.lambda2 * sp * sp == pytest.approx(a, rel=1e-12, abs=1e-12)
        assert (pair.lambda1 - pair.lambda2) * cp * sp == pytest.approx(b, rel=1e-12, abs=1e-12)
        assert pair.lambda1 * sp * sp + pair.lambda2 * cp * cp == pytest.approx(c, rel=1e-12, abs=1e-12)


class TestValidateSpd:
    def test_exam1_minimum_determinant(self):
        report = validate_spd(built_in_field("exam1"), 1e-2)
        assert report.passed
        # 27 - 16 sin^2 attains its minimum 11 exactly on the probe lattice
        assert report.min_det == pytest.approx(11.0, abs=1e-12)

    def test_indefinite_rejected(self):
        report = validate_spd(constant_field(1, 2, 1), 0.25)
        assert not report.passed
        assert report.min_det == pytest.approx(-3.0)

    def test_exam4_determinant_is_k(self):
        report = validate_spd(built_in_field("exam4", k=100), 1e-2)
        assert report.passed
        assert report.min_det == pytest.approx(100.0, rel=1e-12)


class TestRatioFunctions:
    def cap5(self):
        return SplittingConstants(1, 1, 5.0, 0, 0, 0, 1.0, 1e-2)

    def test_zero_b_point(self):
        field = built_in_field("exam1")  # b = 0 on the x-axis
        values = ratio_functions(field, 0.5, 0.0, self.cap5())
        assert values.ratio_f is None
        assert values.ratio_g == 0.0
        assert values.f_plus == 5.0
        assert values.f_minus == -5.0

    def test_positive_b_branch(self):
        values = ratio_functions(constant_field(9, 2, 3), 0.5, 0.5, self.cap5())
        assert values.ratio_f == pytest.approx(1.5)
        assert values.f_plus == pytest.approx(1.5)
        assert values.f_minus == -5.0
        assert values.ratio_g == pytest.approx(2.0 / 9.0)

    def test_negative_b_branch(self):
        values = ratio_functions(constant_field(9, -2, 3), 0.5, 0.5, self.cap5())
        assert values.f_minus == pytest.approx(-1.5)
        assert values.f_plus == 5.0


class TestComputeConstants:
    def test_exam1_reference_values(self, prep_exam1):
        constants = prep_exam1.constants
        assert constants.alpha_bar == pytest.approx(11.0, abs=1e-12)
        assert constants.alpha == pytest.approx(45.0, abs=1e-12)
        assert constants.lip_fplus == 0.0  # cut-off saturates; see cap level
        assert constants.lip_fminus == 0.0
        assert constants.radius > 0.0

    def test_identity_constant_field(self, identity_setup):
        _, constants, _ = identity_setup
        assert constants.alpha_bar == pytest.approx(1.0)
        assert constants.alpha == pytest.approx(1.0)
        assert constants.lip_g == 0.0
        assert constants.radius == pytest.approx(SQRT2)

    def test_exam3_extremes(self, prep_exam3):
        constants = prep_exam3.constants
        # a*c - b^2 = 1.21 - sin^2 and a(|b|+1) = 1.1(1+|sin|), extremized
        # where sin(2*pi*x*y) hits +-1; confirmed against the dense lattice.
        assert constants.alpha_bar == pytest.approx(0.21, abs=1e-9)
        assert constants.alpha == pytest.approx(2.2, abs=1e-9)

    def test_rejects_indefinite_field(self):
        with pytest.raises(FieldValidationError):
            compute_constants(constant_field(1, 2, 1), 0.05)

    def test_refinement_monotonicity(self):
        field = built_in_field("exam3")
        coarse = compute_constants(field, 1 / 100)
        fine = compute_constants(field, 1 / 200)
        assert fine.alpha_bar <= coarse.alpha_bar + 1e-15
        assert fine.alpha >= coarse.alpha - 1e-15

    def test_cutoff_inequalities_on_probes(self, prep_exam4):
        # F+ >= G + alpha_bar/alpha and F- <= G - alpha_bar/alpha everywhere.
        constants = prep_exam4.constants
        field = prep_exam4.problem.field
        gap = constants.alpha_bar / constants.alpha
        rng = np.random.default_rng(3)
        for x, y in rng.uniform(0, 1, size=(500, 2)):
            values = ratio_functions(field, float(x), float(y), constants)
            assert values.f_plus >= values.ratio_g + gap - 1e-9
            assert values.f_minus <= values.ratio_g - gap + 1e-9
            if values.ratio_f is not None:
                a, b, c = field.tensor(float(x), float(y))
                if b > 0:
                    assert values.f_plus <= values.ratio_f + 1e-12
                if b < 0:
                    assert values.f_minus >= values.ratio_f - 1e-12


class TestProbeTable:
    def test_window_matches_bruteforce(self, prep_exam3):
        table = prep_exam3.table
        field = prep_exam3.problem.field
        x0, y0, r = 0.62, 0.81, 0.05
        got = table.window_intervals(x0, y0, r)
        xs = table.xs
        X, Y = np.meshgrid(xs, xs)
        inside = (X - x0) ** 2 + (Y - y0) ** 2 < r * r
        a, b, c = field.tensor_arrays(X[inside], Y[inside])
        plus = b > 0
        minus = b < 0
        assert got[0] == pytest.approx((b[plus] / a[plus]).max())
        assert got[1] == pytest.approx((c[plus] / b[plus]).min())
        assert got[2] == pytest.approx((c[minus] / b[minus]).max())
        assert got[3] == pytest.approx((b[minus] / a[minus]).min())

    def test_empty_window(self, prep_exam1):
        out = prep_exam1.table.window_intervals(0.5, 0.5, 1e-9)
        # ball smaller than the lattice pitch may catch no probe at off-lattice centers
        table = ProbeTable(built_in_field("exam1"), 0.25)
        a_sup, b_inf, c_sup, d_inf = table.window_intervals(0.13, 0.13, 0.01)
        assert a_sup == -np.inf and d_inf == np.inf
