"""Pair enumeration and certification: the expected-count formula, the
companion solver f -> g, the three solver routes, and pair certificates."""

from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bethelab.diffop import ModelParams, bae_residual
from bethelab.exactmath import ExactPoly, wronskian
from bethelab.qsystem import (
    NoCompanion,
    OutOfDomain,
    SolverBudgetExceeded,
    WronskiPair,
    affine_h12,
    enumerate_pairs,
    expected_count,
    pair_from_f,
    pair_from_h,
    verify_pair,
)

P2 = ModelParams(n=2, l=1)
P4 = ModelParams(n=4, l=2)
H2 = (Fraction(2), Fraction(-1))
HV1 = (Fraction(4), Fraction(0), Fraction(-2), Fraction(1))
HV2 = (Fraction(4), Fraction(0), Fraction(-2), Fraction(-1))

F_V1 = ExactPoly((Fraction(7, 3), 3, 1))
G_V1 = ExactPoly((Fraction(13, 2), 11, 6, 1))
F_V2 = ExactPoly.from_roots([-1, -2])
G_V2 = ExactPoly((Fraction(9, 2), 10, 6, 1))


def test_expected_count_pinned_values():
    assert expected_count(P4) == 2
    assert expected_count(P2) == 1
    assert expected_count(ModelParams(n=10, l=5)) == 42


def test_expected_count_rejects_higher_weights():
    with pytest.raises(OutOfDomain):
        expected_count(ModelParams(n=2, l=1, m=(2, 1)))
    with pytest.raises(OutOfDomain):
        expected_count(ModelParams(n=3, l=2))


@given(st.integers(min_value=1, max_value=12))
def test_expected_count_telescopes_to_central_binomial(n):
    total = sum(expected_count(ModelParams(n=n, l=l)) for l in range(n // 2 + 1))
    assert total == math.comb(n, n // 2)


def test_affine_h12_pinned_values():
    assert affine_h12(P4) == (Fraction(4), Fraction(0))
    assert affine_h12(P2) == H2


def test_pair_from_f_first_subspace():
    pair = pair_from_f(F_V1, P4)
    assert pair.g == G_V1
    assert pair.h == HV1
    assert verify_pair(pair, P4).status == "exact"


def test_pair_from_f_two_sites_both_gauges():
    f = ExactPoly((Fraction(3, 2), 1))
    monomial = pair_from_f(f, P2, gauge="monomial")
    assert monomial.g == ExactPoly((Fraction(-5, 2), 0, 1))
    assert monomial.h == H2
    factorial = pair_from_f(f, P2)
    assert factorial.g == ExactPoly.from_roots([-1, -2])
    assert factorial.h == H2


def test_pair_from_f_rejects_non_member():
    with pytest.raises(NoCompanion):
        pair_from_f(ExactPoly((1, 0, 1)), P4)


def test_verify_pair_second_subspace_exact():
    pair = WronskiPair(f=F_V2, g=G_V2, h=HV2, roots=None)
    cert = verify_pair(pair, P4)
    assert cert.status == "exact"
    assert all(r == 0 for r in cert.residuals.values())


def test_verify_pair_detects_perturbed_constant():
    g_bad = G_V2 + ExactPoly((1,))
    cert = verify_pair(WronskiPair(f=F_V2, g=g_bad, h=HV2, roots=None), P4)
    assert cert.status == "failed"
    assert cert.residuals["wronskian"] > 0
    # the perturbation shifts Wr by -wronskian(f, 1), degree <= 2
    assert wronskian(F_V2, ExactPoly((1,))).degree <= 2


def test_verify_pair_detects_non_monic():
    f_bad = F_V2 * ExactPoly((2,))
    cert = verify_pair(WronskiPair(f=f_bad, g=G_V2, h=HV2, roots=None), P4)
    assert cert.status == "failed"
    assert cert.residuals["normalization"] >= 1


def test_enumerate_two_sites_single_pair():
    report = enumerate_pairs(P2, method="exact_elimination", gauge="monomial")
    assert report.found == report.expected == 1
    (pair,) = report.pairs
    assert pair.f == ExactPoly((Fraction(3, 2), 1))
    assert pair.g == ExactPoly((Fraction(-5, 2), 0, 1))
    assert pair.h == H2
    assert report.certificates[0].status == "exact"


def test_enumerate_exact_elimination_reproduces_both_subspaces():
    report = enumerate_pairs(P4, method="exact_elimination")
    assert report.found == report.expected == 2
    assert {p.h for p in report.pairs} == {HV1, HV2}
    assert all(c.status == "exact" for c in report.certificates)


def test_enumerate_multistart_three_pairs():
    report = enumerate_pairs(ModelParams(n=4, l=1), method="newton_multistart")
    assert report.found == report.expected == 3
    assert all(c.status != "failed" for c in report.certificates)


def test_enumerate_multistart_recovers_exact_subspaces():
    report = enumerate_pairs(P4, method="newton_multistart", seed=17)
    assert report.found == 2
    assert {p.h for p in report.pairs} == {HV1, HV2}
    assert all(c.status == "exact" for c in report.certificates)


def test_enumerate_eigen_seeded_recovers_exact_subspaces():
    report = enumerate_pairs(P4, method="eigen_seeded")
    assert report.found == 2
    assert {p.h for p in report.pairs} == {HV1, HV2}
    assert report.all_exact


def test_enumerate_eigen_seeded_complete_at_larger_sizes():
    for n, l in ((6, 3), (8, 4)):
        report = enumerate_pairs(ModelParams(n=n, l=l), method="eigen_seeded")
        assert report.found == report.expected
        assert all(c.status != "failed" for c in report.certificates)


def test_enumerate_routes_agree_on_h_sets():
    exact = enumerate_pairs(ModelParams(n=3, l=1), method="exact_elimination")
    numeric = enumerate_pairs(ModelParams(n=3, l=1), method="newton_multistart")
    assert exact.found == numeric.found == 2

    def key(pairs):
        return sorted(tuple(round(complex(v).real, 6) for v in p.h) +
                      tuple(round(complex(v).imag, 6) for v in p.h)
                      for p in pairs)

    assert key(exact.pairs) == key(numeric.pairs)


def test_enumerate_caps():
    with pytest.raises(SolverBudgetExceeded):
        enumerate_pairs(ModelParams(n=13, l=1), method="newton_multistart")
    with pytest.raises(SolverBudgetExceeded):
        enumerate_pairs(ModelParams(n=5, l=1), method="exact_elimination")


def test_enumerate_unknown_method_rejected():
    with pytest.raises(ValueError):
        enumerate_pairs(P2, method="bisection")


def test_report_statistics_present():
    report = enumerate_pairs(P4, method="exact_elimination")
    for field in ("starts", "newton_iterations", "dedup_merges"):
        assert field in report.stats


def test_certified_pairs_roundtrip_through_pair_from_f():
    for params in (P2, P4):
        report = enumerate_pairs(params, method="exact_elimination")
        for pair, cert in zip(report.pairs, report.certificates):
            if cert.status != "exact":
                continue
            redone = pair_from_f(pair.f, params, gauge=pair.gauge)
            assert redone.g == pair.g
            assert redone.h == pair.h


def test_cross_certification_both_equation_families():
    # Wronskian equations and kernel equations vanish on the same points
    for params in (P2, ModelParams(n=3, l=1), P4):
        report = enumerate_pairs(params, method="exact_elimination")
        assert report.found == report.expected
        for cert in report.certificates:
            assert cert.residuals["wronskian"] <= 1e-10
            assert cert.residuals["kernel_f"] <= 1e-10
            assert cert.residuals["kernel_g"] <= 1e-10


def test_admissible_roots_satisfy_bethe_equations():
    report = enumerate_pairs(P4, method="exact_elimination")
    seen_admissible = False
    for pair in report.pairs:
        if pair.roots.classification != "admissible":
            continue
        seen_admissible = True
        residuals, label = bae_residual(pair.roots.t, P4)
        assert label == "admissible"
        assert max(abs(complex(r)) for r in residuals) < 1e-9
    assert seen_admissible


def test_pair_from_h_matches_enumeration():
    pair = pair_from_h(HV2, P4)
    assert pair.f == F_V2
    assert pair.g == G_V2
