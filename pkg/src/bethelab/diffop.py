"""The universal second-order difference operator d(u) - B(u) tau^{-1}
+ a(u) tau^{-2}, its polynomial kernel solver, the construction of B from a
candidate root polynomial, the defining equations q_1..q_{l+n}, and
Bethe-ansatz-equation residuals with admissibility classification.

Conventions: B(u, h) = 2u^n + h_1 u^{n-1} + ... + h_n, so the spectral
coordinates h live in B's coefficients; a(u) = prod(u - z_i + m_i),
d(u) = prod(u - z_i); l~ = sum(m) + 1 - l.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .exactmath import (
    ExactPoly,
    FloatPoly,
    Inconsistent,
    NonzeroRemainder,
    shift,
    solve_exact,
)

ADMISSIBLE = "admissible"
NON_ADMISSIBLE = "non-admissible"
OFF_SHELL = "off-shell"


class PreconditionViolated(ValueError):
    """An operation was called off the affine subspace q1 = q2 = 0."""


class NotSeparating(ValueError):
    """The weight data (m, l) fails the separating predicate."""


class NoKernelElement(ArithmeticError):
    """No kernel polynomial of the requested degree exists at this h."""


def _is_exact_scalar(x) -> bool:
    return isinstance(x, (int, Fraction))


@dataclass(frozen=True)
class ModelParams:
    """Model data: n sites, l excitations, evaluation points z, weights m.

    z defaults to all zeros (homogeneous) and m to all ones (spin 1/2).
    The derived dual degree is l~ = sum(m) + 1 - l.
    """

    n: int
    l: int
    z: tuple = None
    m: tuple = None

    def __post_init__(self):
        assert self.n >= 1, "need at least one site"
        assert self.l >= 0, "l must be non-negative"
        z = self.z if self.z is not None else (0,) * self.n
        m = self.m if self.m is not None else (1,) * self.n
        z = tuple(Fraction(v) for v in z)
        m = tuple(int(v) for v in m)
        assert len(z) == self.n and len(m) == self.n, "z and m must have n entries"
        assert all(v >= 1 for v in m), "weights must be positive integers"
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "m", m)

    @property
    def weight_sum(self) -> int:
        return sum(self.m)

    @property
    def l_tilde(self) -> int:
        return self.weight_sum + 1 - self.l

    @property
    def is_separating(self) -> bool:
        """sum(m) - 2l + 1 + s != 0 for s = 1..l."""
        base = self.weight_sum - 2 * self.l + 1
        return all(base + s != 0 for s in range(1, self.l + 1))

    @property
    def is_spin_chain(self) -> bool:
        return all(v == 1 for v in self.m) and 2 * self.l <= self.n

    @property
    def homogeneous(self) -> bool:
        return all(v == 0 for v in self.z)

    @cached_property
    def a_poly(self) -> ExactPoly:
        p = ExactPoly((1,))
        for zi, mi in zip(self.z, self.m):
            p = p * ExactPoly((mi - zi, 1))
        return p

    @cached_property
    def d_poly(self) -> ExactPoly:
        return ExactPoly.from_roots(self.z)


def wronskian_target(params: ModelParams) -> ExactPoly:
    """The Wronskian of any kernel pair: (l - l~) prod_s prod_{j=1}^{m_s} (u - z_s + j)."""
    p = ExactPoly((params.l - params.l_tilde,))
    for zs, ms in zip(params.z, params.m):
        for j in range(1, ms + 1):
            p = p * ExactPoly((j - zs, 1))
    return p


def b_poly_from_h(h, n: int):
    """B(u, h) = 2u^n + h_1 u^{n-1} + ... + h_n as a polynomial."""
    assert len(h) == n, "h must have n entries"
    if all(_is_exact_scalar(x) for x in h):
        return ExactPoly(tuple(reversed(h)) + (2,))
    return FloatPoly(tuple(complex(x) for x in reversed(h)) + (2,))


def h_from_b(B) -> tuple:
    """Recover (h_1, ..., h_n) from B(u, h)."""
    n = B.degree
    return tuple(B.coeff(n - k) for k in range(1, n + 1))


@dataclass(frozen=True)
class DifferenceOperator:
    """The operator d(u) - B(u) tau^{-1} + a(u) tau^{-2}."""

    d: object
    B: object
    a: object

    def __post_init__(self):
        assert self.d.degree == self.a.degree, "deg d and deg a must agree"
        assert self.B.degree == self.d.degree, "B must have degree n"
        assert self.B.leading == 2, "B must have leading coefficient 2"

    @classmethod
    def from_h(cls, h, params: ModelParams) -> "DifferenceOperator":
        B = b_poly_from_h(h, params.n)
        a, d = params.a_poly, params.d_poly
        if isinstance(B, FloatPoly):
            a, d = FloatPoly.from_exact(a), FloatPoly.from_exact(d)
        return cls(d=d, B=B, a=a)

    @property
    def h(self) -> tuple:
        return h_from_b(self.B)


def apply(D: DifferenceOperator, w):
    """Apply D to a polynomial: d*w - B*w(u-1) + a*w(u-2)."""
    if isinstance(w, FloatPoly) and isinstance(D.d, ExactPoly):
        D = DifferenceOperator(
            d=FloatPoly.from_exact(D.d),
            B=FloatPoly.from_exact(D.B),
            a=FloatPoly.from_exact(D.a),
        )
    elif isinstance(w, ExactPoly) and isinstance(D.d, FloatPoly):
        w = FloatPoly.from_exact(w)
    return D.d * w - D.B * shift(w, -1) + D.a * shift(w, -2)


def q12(h, params: ModelParams) -> tuple:
    """Evaluate (q1, q2) at h.

    q1 = h_1 - sum(m_i - 2 z_i);
    q2 = h_2 - l(l - 1 - sum(m)) - sum_{i<j} (z_i z_j + (z_i - m_i)(z_j - m_j)).
    For n = 1 there is no h_2 and q2 is reported as 0.
    """
    assert len(h) == params.n, "h must have n entries"
    z, m, l = params.z, params.m, params.l
    q1 = h[0] - sum(mi - 2 * zi for zi, mi in zip(z, m))
    if params.n == 1:
        return q1, Fraction(0)
    cross = sum(
        z[i] * z[j] + (z[i] - m[i]) * (z[j] - m[j])
        for i in range(params.n)
        for j in range(i + 1, params.n)
    )
    q2 = h[1] - l * (l - 1 - params.weight_sum) - cross
    return q1, q2


def _monic_from_tail(a_coeffs, degree: int, exact: bool):
    # p(u, a) = u^degree + a_1 u^{degree-1} + ... + a_degree
    tail = tuple(reversed(tuple(a_coeffs)))
    if exact:
        return ExactPoly(tail + (0,) * (degree - len(tail)) + (1,))
    return FloatPoly(tuple(complex(c) for c in tail) + (0j,) * (degree - len(tail)) + (1,))


def _check_q12(h, params, tol):
    q1, q2 = q12(h, params)
    if _is_exact_scalar(q1) and _is_exact_scalar(q2):
        if q1 != 0 or q2 != 0:
            raise PreconditionViolated(f"q1 = {q1}, q2 = {q2}; both must vanish")
    else:
        scale = 1.0 + max(abs(complex(x)) for x in h)
        if abs(complex(q1)) > tol * scale or abs(complex(q2)) > tol * scale:
            raise PreconditionViolated(f"q1 = {q1}, q2 = {q2} exceed tolerance")


def residual_system(a_coeffs, h, params: ModelParams, *, tol: float = 1e-6) -> tuple:
    """Residuals (q_3, ..., q_{l+n}) of D_h applied to p(u, a).

    These are the coefficients of D_h(p) at u^{l+n-3} down to u^0; the two
    higher coefficients vanish identically once q1 = q2 = 0, which is
    enforced as a precondition.
    """
    assert len(a_coeffs) == params.l, "a must have l entries"
    _check_q12(h, params, tol)
    exact = all(_is_exact_scalar(x) for x in h) and all(_is_exact_scalar(x) for x in a_coeffs)
    D = DifferenceOperator.from_h(list(h), params)
    p = _monic_from_tail(a_coeffs, params.l, exact)
    r = apply(D, p)
    top = params.l + params.n - 3
    if exact:
        assert r.degree <= top, "degree drop failed despite q1 = q2 = 0"
    return tuple(r.coeff(top - i) for i in range(params.l + params.n - 2))


def _residual_affine_map(h, params: ModelParams):
    # residual vector of p(u, a) equals c0 + sum_i a_i * col_i
    exact = all(_is_exact_scalar(x) for x in h)
    D = DifferenceOperator.from_h(list(h), params)
    l, top = params.l, params.l + params.n - 3
    nrows = params.l + params.n - 2

    def vec(poly):
        return [poly.coeff(top - i) for i in range(nrows)]

    mono = ExactPoly if exact else FloatPoly
    c0 = vec(apply(D, mono((0,) * l + (1,))))
    cols = [vec(apply(D, mono((0,) * (l - i) + (1,)))) for i in range(1, l + 1)]
    return c0, cols


def gauge_coefficient_row(gauge: str, l: int, degree: int, *, exact: bool = True) -> list:
    """Row of the linear functional whose vanishing pins the second kernel
    element, as weights on the ascending monomial coefficients c_0..c_degree.

    "factorial": the coefficient of (u+1)(u+2)...(u+l) in the Newton
    factorial expansion of g, i.e. the divided difference of g over the
    nodes -1, -2, ..., -(l+1).  "monomial": the plain u^l coefficient.
    Either one removes the residual freedom g -> g + c f.
    """
    assert gauge in ("factorial", "monomial"), f"unknown gauge {gauge!r}"
    if gauge == "monomial":
        row = [Fraction(1) if k == l else Fraction(0) for k in range(degree + 1)]
    else:
        nodes = [Fraction(-(j + 1)) for j in range(l + 1)]
        inv_denoms = []
        for j, xj in enumerate(nodes):
            denom = Fraction(1)
            for i, xi in enumerate(nodes):
                if i != j:
                    denom *= xj - xi
            inv_denoms.append(1 / denom)
        row = [sum(w * x**k for w, x in zip(inv_denoms, nodes))
               for k in range(degree + 1)]
    if not exact:
        row = [complex(v) for v in row]
    return row


def gauge_residual(g, l: int, *, gauge: str = "factorial"):
    """Value of the pinning functional on g; zero means g is in gauge."""
    exact = isinstance(g, ExactPoly)
    row = gauge_coefficient_row(gauge, l, g.degree, exact=exact)
    return sum(w * g.coeff(k) for k, w in enumerate(row))


def triangular_residuals(h, params: ModelParams, *, tol: float = 1e-6) -> tuple:
    """Solve the first l residual rows for the monic kernel candidate's
    coefficients a, and return (a, leftover residuals q_{l+3}..q_{l+n}).

    The leftover vector is all-zero exactly when h lies on the solution
    scheme; the candidate itself is p(u, a) of degree l.

    Raises
    ------
    NotSeparating : the triangular diagonal would contain a zero.
    """
    if not params.is_separating:
        raise NotSeparating(f"(m, l) = ({params.m}, {params.l})")
    exact = all(_is_exact_scalar(x) for x in h)
    _check_q12(h, params, tol)
    c0, cols = _residual_affine_map(h, params)
    l = params.l
    if l == 0:
        a_sol = ()
    elif exact:
        sol = solve_exact([[cols[j][i] for j in range(l)] for i in range(l)],
                          [-c0[i] for i in range(l)])
        a_sol = sol.particular
    else:
        M = np.array([[cols[j][i] for j in range(l)] for i in range(l)], dtype=complex)
        rhs = np.array([-c0[i] for i in range(l)], dtype=complex)
        a_sol = tuple(np.linalg.solve(M, rhs))
    rest = tuple(c0[i] + sum(a_sol[j] * cols[j][i] for j in range(l))
                 for i in range(l, len(c0)))
    return a_sol, rest


def kernel_poly(h, degree: int, params: ModelParams, *, tol: float = 1e-6,
                gauge: str = "factorial"):
    """Monic degree-`degree` polynomial in the kernel of D_h.

    For degree = l the triangular system q_3 = ... = q_{l+2} = 0 is solved
    for the l unknown coefficients (separating data required), then the
    remaining residuals q_{l+3}..q_{l+n} are checked.  For any other degree
    the full linear system apply(D, w) = 0 is solved; when degree = l~ > l
    the leftover freedom g -> g + c f is removed by the gauge condition of
    gauge_coefficient_row (default: zero coefficient of (u+1)...(u+l) in
    the Newton factorial expansion).

    Raises
    ------
    NotSeparating : degree = l requested for non-separating (m, l).
    NoKernelElement : no kernel polynomial of this degree exists at h.
    """
    exact = all(_is_exact_scalar(x) for x in h)
    _check_q12(h, params, tol)
    scale = 1.0 if exact else 1.0 + max(abs(complex(x)) for x in h) ** 2

    if degree == params.l:
        a_sol, rest = triangular_residuals(h, params, tol=tol)
        if exact:
            if any(r != 0 for r in rest):
                raise NoKernelElement(f"residuals q_{{l+3}}..q_{{l+n}} = {rest}")
        elif any(abs(complex(r)) > tol * scale for r in rest):
            raise NoKernelElement(f"residual magnitude {max(abs(complex(r)) for r in rest):.3e}")
        return _monic_from_tail(a_sol, degree, exact)

    # general degree: linear system on the non-leading coefficients
    D = DifferenceOperator.from_h(list(h), params)
    mono = ExactPoly if exact else FloatPoly
    images = [apply(D, mono((0,) * k + (1,))) for k in range(degree + 1)]
    nrows = degree + params.n + 1
    rows = [[images[k].coeff(r) for k in range(degree)] for r in range(nrows)]
    rhs = [-images[degree].coeff(r) for r in range(nrows)]
    if degree == params.l_tilde and params.l < degree:
        pin = gauge_coefficient_row(gauge, params.l, degree, exact=exact)
        rows.append(pin[:degree])
        rhs.append(-pin[degree])
    if exact:
        try:
            sol = solve_exact(rows, rhs)
        except Inconsistent as err:
            raise NoKernelElement(str(err)) from err
        coeffs = sol.particular
    else:
        A = np.array(rows, dtype=complex)
        b = np.array(rhs, dtype=complex)
        coeffs, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.max(np.abs(A @ coeffs - b)) > tol * scale:
            raise NoKernelElement(f"least-squares residual {np.max(np.abs(A @ coeffs - b)):.3e}")
    return _monic_from_tail(tuple(reversed(tuple(coeffs))), degree, exact)


def b_from_roots(p, params: ModelParams, *, tol: float = 1e-9):
    """B(u) = (d(u) p(u) + a(u) p(u-2)) / p(u-1) for monic p.

    The division is exact precisely when the roots of p satisfy the Bethe
    ansatz equations; the result has degree n and leading coefficient 2.

    Raises
    ------
    NonzeroRemainder : p does not generate a kernel subspace.
    """
    assert p.leading == 1, "p must be monic"
    a, d = params.a_poly, params.d_poly
    if isinstance(p, FloatPoly):
        a, d = FloatPoly.from_exact(a), FloatPoly.from_exact(d)
    from .exactmath import divide_exact

    B = divide_exact(d * p + a * shift(p, -2), shift(p, -1), tol=tol)
    assert B.degree == params.n and B.leading == 2
    return B


@dataclass(frozen=True)
class BetheRoots:
    """Candidate Bethe roots with their admissibility classification."""

    t: tuple
    classification: str


def bae_residual(roots, params: ModelParams, *, tol_factor: float = 1e-8,
                 tol_residual: float = 1e-8) -> tuple:
    """Residuals LHS_j - RHS_j of the Bethe ansatz equations, plus classification.

    The j-th equation reads
    a(t_j + 1) prod_{k != j} (t_j - t_k - 1) = d(t_j + 1) prod_{k != j} (t_j - t_k + 1).
    Classification: structural failures (coincident roots, differences of
    +-1, vanishing equation factors) give "non-admissible"; otherwise small
    residuals give "admissible" and anything else "off-shell".  A numeric
    factor counts as zero below tol_factor * (1 + |t_j|)^n.
    """
    t = roots.t if isinstance(roots, BetheRoots) else tuple(roots)
    assert len(t) == params.l, "need l roots"
    exact = all(_is_exact_scalar(x) for x in t)
    a, d = params.a_poly, params.d_poly
    l, n = params.l, params.n

    def is_zero(value, tj):
        if exact:
            return value == 0
        return abs(complex(value)) < tol_factor * (1.0 + abs(complex(tj))) ** n

    residuals = []
    structural_failure = False
    on_shell = True
    for j in range(l):
        lhs = a(t[j] + 1)
        rhs = d(t[j] + 1)
        for k in range(l):
            if k == j:
                continue
            diff = t[j] - t[k]
            if is_zero(diff, t[j]) or is_zero(diff - 1, t[j]) or is_zero(diff + 1, t[j]):
                structural_failure = True
            lhs = lhs * (diff - 1)
            rhs = rhs * (diff + 1)
        if is_zero(a(t[j] + 1), t[j]) or is_zero(d(t[j] + 1), t[j]):
            structural_failure = True
        res = lhs - rhs
        residuals.append(res)
        if exact:
            if res != 0:
                on_shell = False
        elif abs(complex(res)) > tol_residual * (1.0 + abs(complex(t[j]))) ** (n + l):
            on_shell = False

    if structural_failure:
        classification = NON_ADMISSIBLE
    elif on_shell:
        classification = ADMISSIBLE
    else:
        classification = OFF_SHELL
    return tuple(residuals), classification


def classify_roots(t, params: ModelParams, **kwargs) -> BetheRoots:
    """Package roots with their bae_residual classification."""
    _, classification = bae_residual(t, params, **kwargs)
    return BetheRoots(t=tuple(t), classification=classification)
