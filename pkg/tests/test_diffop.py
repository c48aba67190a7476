"""The second-order difference operator, its kernel solver, B-from-roots,
the defining residuals, and Bethe-equation admissibility."""

from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bethelab.diffop import (
    ADMISSIBLE,
    NON_ADMISSIBLE,
    OFF_SHELL,
    DifferenceOperator,
    ModelParams,
    NoKernelElement,
    NotSeparating,
    PreconditionViolated,
    apply,
    b_from_roots,
    bae_residual,
    b_poly_from_h,
    classify_roots,
    gauge_residual,
    h_from_b,
    kernel_poly,
    q12,
    residual_system,
    wronskian_target,
)
from bethelab.exactmath import ExactPoly, NonzeroRemainder, wronskian

P2 = ModelParams(n=2, l=1)
P4 = ModelParams(n=4, l=2)
H2 = (Fraction(2), Fraction(-1))
HV1 = (Fraction(4), Fraction(0), Fraction(-2), Fraction(1))
HV2 = (Fraction(4), Fraction(0), Fraction(-2), Fraction(-1))

F_V1 = ExactPoly((Fraction(7, 3), 3, 1))
G_V1 = ExactPoly((Fraction(13, 2), 11, 6, 1))
F_V2 = ExactPoly.from_roots([-1, -2])
G_V2 = ExactPoly((Fraction(9, 2), 10, 6, 1))


def _h_on_affine_subspace(params: ModelParams, tail) -> tuple:
    """Fill h_1, h_2 so q1 = q2 = 0, keeping the given (h_3..h_n)."""
    n = params.n
    probe = [Fraction(0)] * n
    q1, q2 = q12(probe, params)
    h = [-q1, -q2] + [Fraction(v) for v in tail]
    return tuple(h[:n])


def test_apply_vacuum_annihilates_constants():
    for params in (P2, P4, ModelParams(n=3, l=0, z=(1, 2, 3))):
        B = params.a_poly + params.d_poly
        D = DifferenceOperator(d=params.d_poly, B=B, a=params.a_poly)
        assert apply(D, ExactPoly((1,))).is_zero


def test_apply_pinned_kernel_element():
    D = DifferenceOperator.from_h(H2, P2)
    assert apply(D, ExactPoly((Fraction(3, 2), 1))).is_zero


def test_apply_pinned_non_kernel_value():
    D = DifferenceOperator.from_h(H2, P2)
    assert apply(D, ExactPoly((0, 1))) == ExactPoly((-3,))


def test_q12_pinned_values():
    assert q12(HV1, P4) == (0, 0)
    assert q12(H2, P2) == (0, 0)
    q1, q2 = q12((0, 0, 0, 0), P4)
    # the q2 offset vanishes for (n, l) = (4, 2): l(l-1-n) + n(n-1)/2 = 0
    assert q1 == -4 and q2 == 0
    q1, q2 = q12((0, 0, 0, 0), ModelParams(n=4, l=1))
    assert q1 == -4 and q2 == -2


def test_residual_system_pinned_zeroes():
    assert residual_system((Fraction(3, 2),), H2, P2) == (0,)
    assert residual_system((3, 2), HV2, P4) == (0, 0, 0, 0)


def test_residual_system_detects_non_kernel():
    assert any(r != 0 for r in residual_system((0, 0), HV2, P4))


def test_residual_system_rejects_off_subspace_h():
    with pytest.raises(PreconditionViolated):
        residual_system((0, 0), (0, 0, 0, 0), P4)


def test_kernel_poly_triangular_route():
    assert kernel_poly(H2, 1, P2) == ExactPoly((Fraction(3, 2), 1))
    assert kernel_poly(HV1, 2, P4) == F_V1
    assert kernel_poly(HV2, 2, P4) == F_V2


def test_kernel_poly_second_element_default_gauge():
    assert kernel_poly(HV1, 3, P4) == G_V1
    assert kernel_poly(HV2, 3, P4) == G_V2


def test_kernel_poly_second_element_monomial_gauge():
    assert kernel_poly(H2, 2, P2, gauge="monomial") == ExactPoly((Fraction(-5, 2), 0, 1))
    assert kernel_poly(HV1, 3, P4, gauge="monomial") == G_V1 - ExactPoly((6,)) * F_V1
    assert kernel_poly(HV2, 3, P4, gauge="monomial") == G_V2 - ExactPoly((6,)) * F_V2


def test_kernel_poly_gauges_differ_by_f_multiple():
    g_fac = kernel_poly(H2, 2, P2)
    g_mono = kernel_poly(H2, 2, P2, gauge="monomial")
    f = kernel_poly(H2, 1, P2)
    diff = g_fac - g_mono
    assert diff == f * diff.coeff(f.degree)
    assert gauge_residual(g_fac, P2.l) == 0
    assert gauge_residual(g_mono, P2.l, gauge="monomial") == 0


def test_kernel_poly_off_variety_fails():
    h = _h_on_affine_subspace(P4, (99, 0))
    with pytest.raises(NoKernelElement):
        kernel_poly(h, 2, P4)
    with pytest.raises(NoKernelElement):
        kernel_poly(h, 3, P4)


def test_kernel_poly_requires_separating_data():
    bad = ModelParams(n=2, l=2)  # sum(m) - 2l + 1 + s hits 0 at s = 1
    assert not bad.is_separating
    h = _h_on_affine_subspace(bad, ())
    with pytest.raises(NotSeparating):
        kernel_poly(h, 2, bad)


def test_kernel_poly_vacuum():
    params = ModelParams(n=3, l=0, z=(0, 1, 2))
    B = params.a_poly + params.d_poly
    assert kernel_poly(h_from_b(B), 0, params) == ExactPoly((1,))


def test_b_from_roots_vacuum():
    for params in (P2, P4):
        B = b_from_roots(ExactPoly((1,)), params)
        assert B == params.a_poly + params.d_poly


def test_b_from_roots_pinned_values():
    assert b_from_roots(ExactPoly((Fraction(3, 2), 1)), P2) == ExactPoly((-1, 2, 2))
    B1 = b_from_roots(F_V1, P4)
    assert B1 == ExactPoly((1, -2, 0, 4, 2))
    assert B1.coeff(0) == 1
    assert b_from_roots(F_V2, P4) == ExactPoly((-1, -2, 0, 4, 2))


def test_b_from_roots_h_round_trip():
    assert h_from_b(b_from_roots(F_V1, P4)) == HV1
    assert h_from_b(b_from_roots(F_V2, P4)) == HV2
    assert b_poly_from_h(HV1, 4) == b_from_roots(F_V1, P4)


def test_b_from_roots_rejects_non_bethe_roots():
    with pytest.raises(NonzeroRemainder):
        b_from_roots(ExactPoly((1, 1)), P2)


def test_wronskian_target_pinned():
    assert wronskian_target(P2) == ExactPoly((-1, -2, -1))
    assert wronskian_target(P4) == ExactPoly((-1,)) * ExactPoly.from_roots([-1] * 4)


def test_kernel_pair_wronskian_identity():
    for h in (HV1, HV2):
        f = kernel_poly(h, 2, P4)
        g = kernel_poly(h, 3, P4)
        assert wronskian(f, g) == wronskian_target(P4)
        D = DifferenceOperator.from_h(h, P4)
        assert apply(D, f).is_zero and apply(D, g).is_zero


def test_bae_residual_admissible_complex_roots():
    r = 0.5 * math.sqrt(1.0 / 3.0)
    t = (-1.5 + 1j * r, -1.5 - 1j * r)
    residuals, cls = bae_residual(t, P4)
    assert cls == ADMISSIBLE
    assert max(abs(x) for x in residuals) < 1e-12


def test_bae_residual_vanishing_factor_case():
    residuals, cls = bae_residual((Fraction(-1), Fraction(-2)), P4)
    assert residuals == (0, 0)
    assert cls == NON_ADMISSIBLE


def test_bae_residual_coincident_roots():
    _, cls = bae_residual((0, 0), P4)
    assert cls == NON_ADMISSIBLE


def test_bae_residual_off_shell():
    residuals, cls = bae_residual((Fraction(1, 3),), P2)
    assert cls == OFF_SHELL
    assert residuals[0] != 0


def test_classify_roots_wraps_classification():
    roots = classify_roots((Fraction(-3, 2),), P2)
    assert roots.classification == ADMISSIBLE
    assert roots.t == (Fraction(-3, 2),)


def test_model_params_derived_data():
    assert P4.l_tilde == 3 and P2.l_tilde == 2
    assert P4.a_poly == ExactPoly.from_roots([-1] * 4)
    assert P4.d_poly == ExactPoly((0, 0, 0, 0, 1))
    inhom = ModelParams(n=2, l=1, z=(Fraction(1, 2), -3), m=(2, 1))
    assert inhom.weight_sum == 3 and inhom.l_tilde == 3
    assert inhom.a_poly == ExactPoly((Fraction(3, 2), 1)) * ExactPoly((4, 1))
    assert not inhom.is_spin_chain and inhom.is_separating


_small_rationals = st.fractions(min_value=-5, max_value=5, max_denominator=4)


@st.composite
def _separating_setups(draw):
    n = draw(st.integers(2, 5))
    m = tuple(draw(st.integers(1, 2)) for _ in range(n))
    l = draw(st.integers(0, min(4, sum(m))))
    params = ModelParams(
        n=n,
        l=l,
        z=tuple(draw(_small_rationals) for _ in range(n)),
        m=m,
    )
    if not params.is_separating:
        params = ModelParams(n=n, l=l, z=params.z, m=None)
    tail = tuple(draw(_small_rationals) for _ in range(n - 2))
    return params, _h_on_affine_subspace(params, tail)


@given(_separating_setups(), st.data())
@settings(max_examples=40, deadline=None)
def test_degree_drop_on_affine_subspace(setup, data):
    params, h = setup
    a = tuple(data.draw(_small_rationals) for _ in range(params.l))
    D = DifferenceOperator.from_h(h, params)
    p = ExactPoly(tuple(reversed(a)) + (1,)) if params.l else ExactPoly((1,))
    image = apply(D, p)
    assert image.degree <= params.l + params.n - 3
    bumped = (h[0] + 1,) + h[1:]
    Db = DifferenceOperator.from_h(bumped, params)
    q1, _ = q12(bumped, params)
    assert apply(Db, p).coeff(p.degree + params.n - 1) == -q1


@given(_separating_setups())
@settings(max_examples=40, deadline=None)
def test_triangular_structure_of_residual_map(setup):
    params, h = setup
    l, base = params.l, params.weight_sum - 2 * params.l
    if l == 0:
        return
    D = DifferenceOperator.from_h(h, params)
    zero_res = residual_system((0,) * l, h, params)
    for j in range(1, l + 1):
        a = tuple(1 if i == j else 0 for i in range(1, l + 1))
        col = [x - y for x, y in zip(residual_system(a, h, params), zero_res)]
        for i in range(1, l + 1):
            expected = i * (base + i + 1) if i == j else (0 if i < j else col[i - 1])
            assert col[i - 1] == expected


@given(_separating_setups())
@settings(max_examples=25, deadline=None)
def test_kernel_poly_round_trip_where_solvable(setup):
    params, h = setup
    try:
        f = kernel_poly(h, params.l, params)
    except (NoKernelElement, NotSeparating):
        return
    D = DifferenceOperator.from_h(h, params)
    assert apply(D, f).is_zero
    assert f.degree == params.l and f.leading == 1
