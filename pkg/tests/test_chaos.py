from math import log

import pytest
from hypothesis import given
from hypothesis import strategies as st

from topodyn.chaos import (
    HorseshoeCertificate,
    NoSensitivePointError,
    ShadowSearchError,
    appendix_verify,
    equicontinuity_modulus,
    horseshoe_certificate,
    orbit_separation,
    sensitive_points,
    sensitive_points_refined,
    refinements,
    verify_certificate,
    verify_witness,
)
from topodyn.generators import cantor_fan, circle_accumulation, fixed_points, periodic_orbits
from topodyn.symbolic import SymbolicPoint, full_shift, golden_mean, parse_point, truncation

from conftest import systems


def test_identity_has_no_sensitive_points():
    for a in (0.1, 0.5, 2.0):
        assert sensitive_points(fixed_points(6), None, a).sensitive == frozenset()


def test_discrete_union_of_orbits_has_no_sensitive_points():
    rep = sensitive_points(periodic_orbits([1, 5, 2]), None, 0.5)
    assert rep.sensitive == frozenset() and rep.mode == "discrete"


def test_every_truncation_state_is_sensitive():
    T = truncation(full_shift(2), 6)
    rep = sensitive_points(T, None, 0.5)
    assert rep.sensitive == frozenset(T.states)
    assert all(verify_witness(T, x, w, 0.5) for x, w in rep.witnesses.items())


def test_origin_of_the_fan_is_not_sensitive():
    fan, lam = cantor_fan(4, 3)
    for a in (0.1, 0.5):
        assert sensitive_points(fan, lam, a).sensitive == frozenset()


def test_sensitivity_rejects_nonpositive_a(square):
    with pytest.raises(ValueError):
        sensitive_points(square, None, 0)


def test_orbit_separation_of_square(square):
    assert orbit_separation(square, 0, 1) == (1.0, 0)
    assert orbit_separation(square, 0, 0) == (0.0, 0)


def test_equicontinuity_of_identity():
    assert equicontinuity_modulus(fixed_points(4), 0.3) == ("delta", 0.3)


def test_equicontinuity_fails_on_the_circle_model():
    kind, (z, w, i) = equicontinuity_modulus(circle_accumulation(5), 0.5)
    sys_ = circle_accumulation(5)
    assert kind == "witness"
    assert sys_.distance(sys_.iterate(z, i), sys_.iterate(w, i)) > 0.5


def test_equicontinuity_fails_on_the_full_shift_model():
    kind, _ = equicontinuity_modulus(truncation(full_shift(2), 6), 0.25)
    assert kind == "witness"


# -- horseshoes ------------------------------------------------------------------


@pytest.fixture(scope="module")
def full_shift_cert():
    return horseshoe_certificate(full_shift(2), None, 0.25, 1.0, p=SymbolicPoint.constant(0))


def test_full_shift_certificate(full_shift_cert):
    cert = full_shift_cert
    assert cert.base_point == "(0).(0)"
    assert cert.z[0] == cert.w[0] == cert.z[-1] == cert.w[-1] == cert.base_point
    assert cert.margin > 0 and cert.m >= cert.k + 1
    assert cert.entropy_bound == log(2) / cert.m
    assert len(cert.realizations) == 8 and cert.separated
    assert verify_certificate(cert) == []


def test_realizations_carry_entropy(full_shift_cert):
    cert = full_shift_cert
    assert cert.greedy_entropy >= cert.entropy_bound - 0.05
    pts = sorted({parse_point(t) for t in cert.realizations.values()}, key=str)
    assert len(pts) == 8


def test_certificate_json_round_trip(full_shift_cert):
    again = HorseshoeCertificate.from_json(full_shift_cert.to_json())
    assert again == full_shift_cert
    assert verify_certificate(again) == []


def test_tampered_certificate_is_rejected(full_shift_cert):
    bad = HorseshoeCertificate.from_json(full_shift_cert.to_json())
    bad.w = list(bad.w)
    bad.w[bad.k] = bad.z[bad.k]
    assert verify_certificate(bad)
    worse = HorseshoeCertificate.from_json(full_shift_cert.to_json())
    worse.entropy_bound = 1.0
    assert "entropy bound differs from log 2 / m" in verify_certificate(worse)


def test_golden_mean_certificate():
    cert = horseshoe_certificate(golden_mean(), None, 0.25, 1.0, p="(0).(0)")
    assert cert.m >= 2
    assert verify_certificate(cert) == []


def test_certificate_on_a_finite_model():
    T = truncation(full_shift(2), 6)
    cert = horseshoe_certificate(T, None, 0.25, 1.0, word_length=1)
    assert cert.subshift is None and cert.m == 5
    assert cert.realizations == {"z": "(0).(0)", "w": "(00010).(00010)"}
    assert verify_certificate(cert, T) == []
    assert verify_certificate(cert) == ["finite-system certificate needs its system"]


def test_finite_model_too_coarse_for_long_words():
    # words of length 3 need period-15 shadows, beyond a period-6 truncation
    with pytest.raises(ShadowSearchError, match="zzw"):
        horseshoe_certificate(truncation(full_shift(2), 6), None, 0.25, 1.0)


def test_no_horseshoe_without_sensitivity():
    with pytest.raises(NoSensitivePointError):
        horseshoe_certificate(fixed_points(5), None, 0.25, 1.0)


def test_horseshoe_rejects_large_eps():
    with pytest.raises(ValueError):
        horseshoe_certificate(full_shift(2), None, 0.5, 1.0)


# -- appendix ---------------------------------------------------------------------------


def test_circle_appendix():
    rep = appendix_verify(circle_accumulation(6), 0.5, 0.1)
    assert rep.all_periodic and rep.accumulation_contains_sen
    assert rep.sensitive and set(rep.layers) == {"circle"}
    assert rep.expansive_check.startswith("not applicable")
    assert "X = Per(f): True" in rep.text()


def test_appendix_on_a_discrete_permutation():
    rep = appendix_verify(periodic_orbits([3, 1, 2], gap=2.0), 0.5, 0.25)
    assert rep.all_periodic and rep.sensitive == () and rep.accumulation_contains_sen


def test_appendix_on_an_expansive_truncation():
    rep = appendix_verify(truncation(full_shift(2), 6), 0.5, 0.125)
    assert rep.sensitive and rep.accumulation_contains_sen
    assert "finite truncation" in rep.expansive_check


def test_refined_sensitivity_scales_shrink():
    fam = refinements(circle_accumulation(4), 2)
    rep = sensitive_points_refined(fam, 0.5)
    base = fam[0]
    assert rep.sensitive
    assert all(base.labels[x].startswith("circle") for x in rep.sensitive)


# -- properties -------------------------------------------------------------------


@given(systems(20), st.floats(0.05, 1.5), st.floats(0.05, 1.5))
def test_sensitivity_is_antitone_in_a(sys_, a1, a2):
    lo, hi = sorted((a1, a2))
    assert sensitive_points(sys_, None, hi).sensitive <= sensitive_points(sys_, None, lo).sensitive


@given(systems(20), st.floats(0.05, 1.0))
def test_witnesses_reverify(sys_, a):
    rep = sensitive_points(sys_, None, a)
    assert set(rep.witnesses) == set(rep.sensitive)
    assert all(verify_witness(sys_, x, w, a) for x, w in rep.witnesses.items())
