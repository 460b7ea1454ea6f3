import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plasmahom import materials as mt
from plasmahom.errors import InvalidParameterError


def eta_formula(ef, d, w):
    # independent re-evaluation of the rescaled admittance
    return 82.9 * ef / (d * w * (w + 0.02j))


class TestRescaledEta:
    def test_zero_doping(self):
        assert mt.rescaled_eta(0.0, 20.72, 2.0) == 0.0

    def test_reference_point(self):
        # frozen from direct complex arithmetic on the formula
        eta = mt.rescaled_eta(1.0, 20.72, 2.0)
        assert eta == pytest.approx(1.0001412986114517 - 0.010001412986114518j,
                                    rel=1e-14)

    def test_quarter_scaling_in_omega(self):
        e2 = mt.rescaled_eta(1.0, 20.72, 2.0)
        e4 = mt.rescaled_eta(1.0, 20.72, 4.0)
        expected_ratio = (2.0 * (2.0 + 0.02j)) / (4.0 * (4.0 + 0.02j))
        assert e4 / e2 == pytest.approx(expected_ratio, rel=1e-13)
        assert abs(e4 / e2 - 0.25) < 5e-3   # up to the damping correction

    def test_division_domain_errors(self):
        with pytest.raises(InvalidParameterError):
            mt.rescaled_eta(1.0, 0.0, 2.0)
        with pytest.raises(InvalidParameterError):
            mt.rescaled_eta(1.0, 20.72, 0.0)

    @given(ef=st.floats(0.01, 1.6), d=st.floats(0.1, 40.0), w=st.floats(0.5, 4.0))
    def test_sign_structure(self, ef, d, w):
        eta = mt.rescaled_eta(ef, d, w)
        assert eta.real > 0.0
        assert eta.imag < 0.0

    @given(ef=st.floats(0.01, 1.6), d=st.floats(0.1, 40.0), w=st.floats(0.5, 4.0))
    def test_homogeneous_degree_minus_one_in_spacing(self, ef, d, w):
        assert mt.rescaled_eta(ef, 2.0 * d, w) == mt.rescaled_eta(ef, d, w) / 2.0


class TestDrudeConductivity:
    def test_zero_doping(self):
        p = mt.DrudeParams(0.0, 2.0, 20.72)
        assert mt.drude_surface_conductivity(p) == 0.0

    def test_dissipative_inductive(self):
        sd = mt.drude_surface_conductivity(mt.DrudeParams(1.0, 2.0, 20.72))
        assert sd.real > 0.0 and sd.imag > 0.0

    def test_lossless_limit_purely_imaginary(self):
        sd = mt.drude_surface_conductivity(
            mt.DrudeParams(1.0, 2.0, 20.72, relax_time=1e6))
        assert abs(sd.real) < 1e-15 * abs(sd)

    def test_matches_rescaled_eta_to_12_digits(self):
        p = mt.DrudeParams(1.0, 2.0, 20.72)
        sd = mt.drude_surface_conductivity(p)
        omega = p.omega_tilde * mt.OMEGA_UNIT
        d = p.spacing_tilde * mt.SPACING_UNIT
        eta = sd / (1j * omega * d)
        ref = mt.rescaled_eta(1.0, 20.72, 2.0)
        assert abs(eta - ref) <= 1e-12 * abs(ref)

    def test_reference_against_physical_constants_to_3_digits(self):
        # the canonical prefactor is the rounded 82.9; the value recomputed
        # from physical constants differs in the fourth digit
        exact = mt.drude_prefactor_from_constants()
        assert exact != mt.DRUDE_PREFACTOR
        assert abs(exact - mt.DRUDE_PREFACTOR) / exact < 2e-3
        eta = mt.rescaled_eta(1.0, 1.0, 1.0)
        assert eta * (1.0 + 0.02j) == pytest.approx(82.9, rel=1e-14)

    def test_invalid_relax_time(self):
        with pytest.raises(InvalidParameterError):
            mt.DrudeParams(1.0, 2.0, 20.72, relax_time=0.0)
        with pytest.raises(InvalidParameterError):
            mt.DrudeParams(1.0, 2.0, 20.72, relax_time=-1e-12)

    def test_study_range_flag(self):
        assert mt.DrudeParams(1.0, 2.0, 20.72).in_study_range
        assert not mt.DrudeParams(1.7, 2.0, 20.72).in_study_range
        assert not mt.DrudeParams(1.0, 4.5, 20.72).in_study_range


class TestScaling:
    def test_identity_at_unit_spacing(self):
        assert mt.scale_conductivities(1.0, 2 + 1j, 3.0) == (2 + 1j, 3.0)

    def test_forced_arithmetic(self):
        assert mt.scale_conductivities(0.5, 2.0, 4.0) == (1.0, 1.0)

    @settings(max_examples=100)
    @given(d=st.floats(1e-3, 1e3),
           sr=st.floats(-5, 5), si=st.floats(-5, 5),
           lr=st.floats(-5, 5), li=st.floats(-5, 5))
    def test_roundtrip(self, d, sr, si, lr, li):
        sigma, lam = complex(sr, si), complex(lr, li)
        sd, ld = mt.scale_conductivities(d, sigma, lam)
        s2, l2 = mt.unscale_conductivities(d, sd, ld)
        assert s2 == pytest.approx(sigma, rel=1e-12, abs=1e-12)
        assert l2 == pytest.approx(lam, rel=1e-12, abs=1e-12)

    def test_nonpositive_spacing_rejected(self):
        for d in (0.0, -1.0):
            with pytest.raises(InvalidParameterError):
                mt.scale_conductivities(d, 1.0, 1.0)
            with pytest.raises(InvalidParameterError):
                mt.unscale_conductivities(d, 1.0, 1.0)


class TestMaterialSpec:
    def test_invariants_enforced(self):
        with pytest.raises(InvalidParameterError):
            mt.MaterialSpec(eps_bulk=-1.0)
        with pytest.raises(InvalidParameterError):
            mt.MaterialSpec(eps_bulk=1.0 - 0.1j)

    def test_eta_accessors(self):
        m = mt.MaterialSpec(eps_bulk=1.0, sigma_surface=2j, lambda_line=4j)
        assert m.eta_surface(2.0) == pytest.approx(1.0)
        assert m.eta_line(2.0) == pytest.approx(2.0)
        with pytest.raises(InvalidParameterError):
            m.eta_surface(0.0)

    def test_from_drude_eta_consistency(self):
        m = mt.material_from_drude(1.0, 20.72, 2.0)
        assert m.eta_surface(2.0) == pytest.approx(mt.rescaled_eta(1.0, 20.72, 2.0),
                                                   rel=1e-13)

    def test_builder_from_config_drude(self):
        build = mt.material_builder_from_config(
            {"drude": {"E_F_tilde": 1.0, "d_tilde": 20.72}})
        m = build(2.0)
        assert m.eta_surface(2.0) == pytest.approx(mt.rescaled_eta(1.0, 20.72, 2.0),
                                                   rel=1e-13)

    def test_builder_from_config_pairs(self):
        build = mt.material_builder_from_config(
            {"eps_bulk": [2.0, 0.5], "sigma_surface": [0.0, 1.0],
             "lambda_line": 0.25})
        m = build(1.7)
        assert m.eps_bulk == 2.0 + 0.5j
        assert m.sigma_surface == 1j
        assert m.lambda_line == 0.25
