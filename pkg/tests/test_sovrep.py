"""Separated variables on W_y[l]: box-partition coordinates, the x<->y
change of variables, the ladder form of the transfer-matrix entries, the
singular subspace, weight vectors, the spanning-vector projection onto
the tensor module, and eigenvector extraction."""

from __future__ import annotations

import dataclasses
import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bethelab.diffop import ModelParams
from bethelab.exactmath import ExactPoly, solve_exact
from bethelab.qsystem import pair_from_h
from bethelab.sovrep import (
    BoxPartition,
    EmptyImage,
    SoVVector,
    apply_sov,
    e21e12_op,
    extract_eigenvector,
    from_dense,
    sh_map,
    singular_sov_basis,
    sklyanin_ops,
    transfer_B_sov,
    weight_fn,
    weight_fn_eigencheck,
    xy_inverse,
    xy_transform,
)
from bethelab.spinchain import (
    ChainTooLarge,
    bethe_vector,
    monodromy_at,
    transfer_B,
    weight_singular_basis,
)

P2 = ModelParams(n=2, l=1)
P4 = ModelParams(n=4, l=2)
PZ = ModelParams(n=3, l=1, z=(0, 1, Fraction(1, 2)))
HV1 = (Fraction(4), Fraction(0), Fraction(-2), Fraction(1))
HV2 = (Fraction(4), Fraction(0), Fraction(-2), Fraction(-1))

rationals = st.fractions(min_value=-9, max_value=9, max_denominator=9)


def _weights(n: int, l: int) -> list:
    return [i for i in range(1 << n) if bin(i).count("1") == l]


def test_box_order_pinned():
    order = BoxPartition.box(3, 2)
    assert [lam.parts for lam in order] == [
        (), (1,), (1, 1), (2,), (1, 1, 1), (2, 1),
        (2, 1, 1), (2, 2), (2, 2, 1), (2, 2, 2)]


def test_box_counts():
    for rows in range(5):
        for height in range(4):
            assert len(BoxPartition.box(rows, height)) == \
                math.comb(rows + height, height)


def test_box_partition_validation():
    with pytest.raises(AssertionError):
        BoxPartition((1, 2))
    assert BoxPartition((2, 1, 0, 0)).parts == (2, 1)
    assert BoxPartition((2, 1)).padded(4) == (2, 1, 0, 0)
    assert BoxPartition((2, 1)).fits(2, 2)
    assert not BoxPartition((2, 1)).fits(2, 1)
    assert not BoxPartition((2, 1, 1)).fits(2, 2)


def test_sov_vector_round_trip_and_arithmetic():
    order = BoxPartition.box(2, 2)
    col = np.array([Fraction(k - 2) for k in range(len(order))], dtype=object)
    vec = from_dense(col, 3, 2)
    assert (vec.dense() == col).all()
    assert vec + vec == 2 * vec
    assert (vec - vec).is_zero
    assert vec.max_abs() == max(abs(v) for v in col)


def test_sov_vector_value():
    vec = SoVVector(n=3, level=1, coords={
        BoxPartition(()): Fraction(2), BoxPartition((1,)): Fraction(3)})
    assert vec.value((Fraction(1, 2), Fraction(5))) == 2 + 3 * Fraction(11, 2)


def test_vector_validation():
    with pytest.raises(AssertionError):
        from_dense([Fraction(1)], 3, 1)
    with pytest.raises(AssertionError):
        SoVVector(n=3, level=1, coords={BoxPartition((2,)): Fraction(1)})


def test_xy_transform_monomials():
    assert xy_transform({(1, 0): 1}).coords == {BoxPartition(()): Fraction(1)}
    assert xy_transform({(0, 1): 1}).coords == {BoxPartition((1,)): Fraction(-1)}
    # x1 x2 = -y0^2 sigma_1 and x3 = y0 sigma_2 at n = 3
    assert xy_transform({(1, 1, 0): 1}).coords == \
        {BoxPartition((1,)): Fraction(-1)}
    assert xy_transform({(0, 0, 1): 1}).coords == \
        {BoxPartition((1, 1)): Fraction(1)}


@given(st.integers(2, 4), st.integers(0, 2), st.data())
@settings(max_examples=25, deadline=None)
def test_xy_round_trip(n, l, data):
    mons = [e for e in product(range(l + 1), repeat=n) if sum(e) == l]
    coeffs = data.draw(st.lists(rationals, min_size=len(mons),
                                max_size=len(mons)))
    p = {m: c for m, c in zip(mons, coeffs) if c != 0}
    if not p:
        p = {mons[0]: Fraction(1)}
    assert xy_inverse(xy_transform(p)) == p


def test_ladder_vacuum_rows():
    for params in (P2, ModelParams(n=4, l=0), PZ):
        t11, t22, _, _ = sklyanin_ops(params, 0)
        assert tuple(c[0, 0] for c in t11.coeffs) == params.a_poly.coeffs
        assert tuple(c[0, 0] for c in t22.coeffs) == params.d_poly.coeffs


def test_ladder_scalars_and_leading_identity():
    t11, t22, e11, e22 = sklyanin_ops(PZ, 1)
    dim = t11.dim
    assert (e11 == 2 * np.eye(dim, dtype=object)).all()
    assert (e22 == 1 * np.eye(dim, dtype=object)).all()
    assert (t11.coeff(PZ.n) == np.eye(dim, dtype=object)).all()
    assert (t22.coeff(PZ.n) == np.eye(dim, dtype=object)).all()


def _ladder_poly(lead, scalar, step, params, vec, ys):
    """The ladder form applied to vec and evaluated at the point ys, as a
    polynomial in the spectral parameter; the apparent poles at equal
    coordinates are avoided because ys is collision-free."""
    zsum = sum(params.z, Fraction(0))
    front = ExactPoly((scalar - zsum + sum(ys), Fraction(1))) \
        * ExactPoly.from_roots(ys)
    total = front * ExactPoly((vec.value(ys),))
    for j in range(len(ys)):
        others = ys[:j] + ys[j + 1:]
        den = Fraction(1)
        for v in others:
            den *= ys[j] - v
        shifted = ys[:j] + (ys[j] + step,) + ys[j + 1:]
        wt = lead(ys[j]) / den * vec.value(shifted)
        total = total + ExactPoly((wt,)) * ExactPoly.from_roots(others)
    return total


def test_ladder_formula_at_holdout_point():
    # fresh evaluation points never used by the interpolation grid
    cases = ((P4, 2, (Fraction(5), Fraction(17), Fraction(31))),
             (PZ, 1, (Fraction(5), Fraction(17))))
    for params, l, ys in cases:
        order = BoxPartition.box(params.n - 1, l)
        col = np.array([Fraction(k + 1) for k in range(len(order))],
                       dtype=object)
        vec = from_dense(col, params.n, l)
        t11, t22, _, _ = sklyanin_ops(params, l)
        for t, lead, scalar, step in (
            (t11, params.a_poly, Fraction(params.weight_sum - l), -1),
            (t22, params.d_poly, Fraction(l), 1),
        ):
            want = _ladder_poly(lead, scalar, step, params, vec, ys)
            got = ExactPoly(tuple(
                from_dense(t.coeff(k) @ col, params.n, l).value(ys)
                for k in range(t.degree + 1)))
            assert got == want


def test_transfer_sov_scalar_hamiltonians():
    _, H = transfer_B_sov(P4, 2)
    dim = H[0].shape[0]
    assert (H[0] == 2 * np.eye(dim, dtype=object)).all()
    assert (H[1] == 4 * np.eye(dim, dtype=object)).all()
    _, Hz = transfer_B_sov(PZ, 1)
    s = sum(1 - 2 * z for z in PZ.z)
    assert (Hz[1] == s * np.eye(3, dtype=object)).all()


def test_transfer_sov_hamiltonians_commute():
    for params, l in ((P4, 2), (PZ, 1)):
        _, H = transfer_B_sov(params, l)
        for j in range(2, params.n + 1):
            for k in range(j + 1, params.n + 1):
                assert (H[j] @ H[k] == H[k] @ H[j]).all()


def test_singular_transfer_tuple_n2():
    Sb = singular_sov_basis(P2, 1)
    assert Sb.shape == (2, 1)
    _, H = transfer_B_sov(P2, 1)
    col = Sb[:, 0]
    assert (H[1] @ col == 2 * col).all()
    assert (H[2] @ col == -col).all()


def test_e21e12_level_zero_vanishes():
    for params in (P2, P4, PZ):
        op = e21e12_op(params, 0)
        assert op.shape == (1, 1) and op[0, 0] == 0


def test_singular_dimensions():
    for n, l in ((2, 1), (3, 1), (4, 2), (5, 2)):
        Sb = singular_sov_basis(ModelParams(n=n, l=l), l)
        assert Sb.shape == (math.comb(n - 1 + l, l),
                            math.comb(n - 1 + l, l)
                            - math.comb(n - 2 + l, l - 1))


def test_weight_fn_pinned_coordinates():
    omega = weight_fn((Fraction(3, 2),), P2, 1)
    assert omega.coords == {BoxPartition(()): Fraction(1, 2),
                            BoxPartition((1,)): Fraction(1)}
    # f = (u + 1)(u + 2) shifts to u (u + 1): only gap-free partitions survive
    omega = weight_fn((3, 2), P4, 2)
    assert omega.coords == {
        BoxPartition((1, 1, 1)): 1, BoxPartition((2, 1, 1)): 1,
        BoxPartition((2, 2, 1)): 1, BoxPartition((2, 2, 2)): 1}


def test_weight_fn_numeric_coefficients():
    omega = weight_fn((1.5,), P2, 1)
    assert abs(omega.coeff(BoxPartition(())) - 0.5) < 1e-15
    assert abs(omega.coeff(BoxPartition((1,))) - 1.0) < 1e-15


@given(st.integers(2, 4), st.data())
@settings(max_examples=30, deadline=None)
def test_weight_fn_never_vanishes(n, data):
    l = data.draw(st.integers(0, n // 2))
    a = tuple(data.draw(st.lists(rationals, min_size=l, max_size=l)))
    omega = weight_fn(a, ModelParams(n=n, l=l), l)
    assert not omega.is_zero
    # the full-box coordinate is a power of the leading 1
    assert omega.coeff(BoxPartition((l,) * (n - 1))) == 1


def test_weight_vector_solves_ladder_eigenproblem():
    for h, params in (((Fraction(2), Fraction(-1)), P2),
                      (HV1, P4), (HV2, P4)):
        pair = pair_from_h(h, params)
        out = weight_fn_eigencheck(pair, params)
        assert set(out) == \
            {f"H{s}" for s in range(1, params.n + 1)} | {"e21e12"}
        for res in out.values():
            assert isinstance(res, Fraction) and res == 0


def test_eigencheck_rejects_non_solution():
    pair = pair_from_h(HV1, P4)
    fake = dataclasses.replace(pair, h=HV1[:3] + (Fraction(1, 2),))
    out = weight_fn_eigencheck(fake, P4)
    assert out["H1"] == 0 and out["H4"] != 0


def test_apply_sov_matches_eigenvalue_action():
    omega = weight_fn((Fraction(3, 2),), P2, 1)
    _, H = transfer_B_sov(P2, 1)
    assert apply_sov(H[2], omega) == Fraction(-1) * omega


def test_sh_level_zero_is_identity():
    for params in (P2, P4, PZ):
        sh = sh_map(params, 0)
        assert sh.shape == (1, 1) and sh[0, 0] == 1


def test_sh_n2_matrix_and_fresh_tuple():
    sh = sh_map(P2, 1)
    assert [list(row) for row in sh] == [[1, -1], [1, 0]]
    # spanning vector at w = 4, away from the solved-for tuples:
    # y0 (4 - y1) has coordinates (4, -1)
    col = np.array([Fraction(4), Fraction(-1)], dtype=object)
    t12 = monodromy_at(Fraction(4), P2, "exact")[1]
    vac = np.zeros(4, dtype=object)
    vac[:] = Fraction(0)
    vac[0] = Fraction(1)
    assert (sh @ col == (t12 @ vac)[_weights(2, 1)]).all()


def test_sh_intertwines_hamiltonians():
    for params, l in ((P2, 1), (ModelParams(n=3, l=1), 1), (P4, 2), (PZ, 1)):
        sh = sh_map(params, l)
        _, Hs = transfer_B_sov(params, l)
        _, Ht = transfer_B(params, "exact")
        widx = _weights(params.n, l)
        for k in range(params.n + 1):
            assert (sh @ Hs[k] == Ht[k][np.ix_(widx, widx)] @ sh).all()


def test_sh_sends_weight_vector_to_bethe_vector():
    omega = weight_fn((Fraction(3, 2),), P2, 1)
    image = sh_map(P2, 1) @ omega.dense()
    bv = bethe_vector((Fraction(-3, 2),), P2)
    assert (image == bv[_weights(2, 1)]).all()
    # the point (4, 0, -2, -1) has roots -1, -2: its Bethe vector vanishes
    # identically and its weight vector spans a kernel line of sh
    omega = weight_fn((3, 2), P4, 2)
    image = sh_map(P4, 2) @ omega.dense()
    assert all(x == 0 for x in image)
    assert all(x == 0 for x in bethe_vector((-1, -2), P4))


def test_sh_matches_numeric_bethe_vector_at_complex_roots():
    pair = pair_from_h(HV1, P4)
    a = tuple(pair.f.coeff(2 - k) for k in range(1, 3))
    omega = weight_fn(a, P4, 2)
    image = np.asarray(sh_map(P4, 2), dtype=float) \
        @ np.array([float(x) for x in omega.dense()])
    roots = np.roots([1.0] + [float(x) for x in a])
    bv = bethe_vector(tuple(roots), P4, "numeric")[_weights(4, 2)]
    assert np.max(np.abs(image - bv)) < 1e-9


def test_sh_kernel_on_singular_level():
    # the 6-dimensional singular level maps onto the 2-dimensional tensor
    # singular space; four directions die
    Sb = singular_sov_basis(P4, 2)
    assert Sb.shape[1] == 6
    image = sh_map(P4, 2) @ Sb
    sol = solve_exact([list(r) for r in image],
                      [Fraction(0)] * image.shape[0])
    assert len(sol.kernel) == 4


def test_extract_singlet_line():
    line = extract_eigenvector((Fraction(2), Fraction(-1)), P2, 1)
    assert line[0] == 0 and line[3] == 0
    assert line[1] == -line[2] != 0


def test_extract_line_where_bethe_vector_vanishes():
    line = extract_eigenvector(HV2, P4, 2)
    _, Ht = transfer_B(P4, "exact")
    for k in range(1, 5):
        assert (Ht[k] @ line == HV2[k - 1] * line).all()
    # independent oracle: the eigenvector of the last Hamiltonian
    # restricted to the singular weight space, at eigenvalue -1
    S = weight_singular_basis(P4, 2, "numeric").basis
    R = S.conj().T @ np.asarray(Ht[4], dtype=complex) @ S
    vals, vecs = np.linalg.eig(R)
    j = int(np.argmin(np.abs(vals + 1)))
    assert abs(vals[j] + 1) < 1e-9
    cand = S @ vecs[:, j]
    linef = np.array([float(x) for x in line])
    ov = abs(np.vdot(cand, linef)) \
        / (np.linalg.norm(cand) * np.linalg.norm(linef))
    assert ov > 1 - 1e-8


def test_extract_agrees_with_bethe_vector_at_admissible_point():
    line = extract_eigenvector(HV1, P4, 2)
    linef = np.array([float(x) for x in line])
    roots = np.roots([1.0, 3.0, 7.0 / 3.0])
    bv = bethe_vector(tuple(roots), P4, "numeric")
    ov = abs(np.vdot(bv, linef)) \
        / (np.linalg.norm(bv) * np.linalg.norm(linef))
    assert ov > 1 - 1e-8


def test_extract_rejects_non_spectral_tuples():
    for bad in ((Fraction(4), Fraction(0), Fraction(-2), Fraction(5)),
                (Fraction(3), Fraction(0), Fraction(-2), Fraction(1)),
                (4.0, 0.0, -2.0, 5.0)):
        with pytest.raises(EmptyImage):
            extract_eigenvector(bad, P4, 2)


def test_extract_numeric_tuple_agrees_with_exact():
    exact = extract_eigenvector(HV2, P4, 2)
    numer = extract_eigenvector(tuple(float(x) for x in HV2), P4, 2)
    a = np.array([float(x) for x in exact])
    b = np.asarray(numer, dtype=complex)
    ov = abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    assert ov > 1 - 1e-10


def test_separated_variables_cap():
    big = ModelParams(n=7, l=1)
    with pytest.raises(ChainTooLarge):
        sklyanin_ops(big, 1)
    with pytest.raises(ChainTooLarge):
        extract_eigenvector((Fraction(0),) * 7, big, 1)
