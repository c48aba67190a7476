"""Enumeration and certification of Wronskian pairs: the expected-count
formula, companion solving (f -> g), three solver routes over the spectral
coordinates h, and pair certificates.

A pair is a basis (f, g) of a two-dimensional polynomial subspace killed by
the difference operator D_h, with deg f = l, deg g = l~, normalized by the
gauge condition of diffop.gauge_coefficient_row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .diffop import (
    BetheRoots,
    DifferenceOperator,
    ModelParams,
    NoKernelElement,
    NotSeparating,
    apply,
    b_from_roots,
    classify_roots,
    gauge_coefficient_row,
    gauge_residual,
    h_from_b,
    kernel_poly,
    q12,
    wronskian_target,
)
from .exactmath import (
    ExactPoly,
    FloatPoly,
    Inconsistent,
    NonzeroRemainder,
    rational_reconstruct,
    solve_exact,
    wronskian,
)

RATIONAL_BOUND = 10**6
N_CAP = 12


class OutOfDomain(ValueError):
    """Count or solver requested outside the supported weight data."""


class NoCompanion(ArithmeticError):
    """f is not the degree-l member of any Wronskian pair."""


class SolverBudgetExceeded(RuntimeError):
    """A solver route ran out of its configured resources."""


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def expected_count(params: ModelParams) -> int:
    """Number of pairs for spin-1/2 data: C(n, l) - C(n, l-1)."""
    if any(mi != 1 for mi in params.m):
        raise OutOfDomain("count formula requires all weights m_i = 1")
    if 2 * params.l > params.n:
        raise OutOfDomain("count formula requires 2l <= n")
    n, l = params.n, params.l
    return math.comb(n, l) - (math.comb(n, l - 1) if l >= 1 else 0)


def affine_h12(params: ModelParams) -> tuple:
    """The values of (h_1, h_2) forced by q1 = q2 = 0."""
    probe = [Fraction(0)] * params.n
    q1, q2 = q12(probe, params)
    return (-q1, -q2) if params.n >= 2 else (-q1,)


@dataclass(frozen=True)
class WronskiPair:
    """Certified-ready pair data: f, g, the spectral point h, the roots of
    f with their admissibility classification, and the gauge used for g."""

    f: object
    g: object
    h: tuple
    roots: BetheRoots
    gauge: str = "factorial"

    @property
    def is_exact(self) -> bool:
        return isinstance(self.f, ExactPoly) and isinstance(self.g, ExactPoly)


@dataclass(frozen=True)
class PairCertificate:
    """Residual record for one pair; status is exact/numeric/failed."""

    status: str
    residuals: dict

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())


@dataclass(frozen=True)
class SolveReport:
    """Outcome of enumerate_pairs: both count directions are reported and
    neither is asserted here."""

    params: ModelParams
    method: str
    pairs: tuple
    certificates: tuple
    expected: int
    found: int
    stats: dict = field(default_factory=dict)

    @property
    def all_exact(self) -> bool:
        return all(c.status == "exact" for c in self.certificates)


def _roots_of(f) -> tuple:
    if f.degree <= 0:
        return ()
    coeffs = [complex(c) for c in f.coeffs]
    return tuple(np.roots(list(reversed(coeffs))))


def pair_from_h(h, params: ModelParams, *, gauge: str = "factorial") -> WronskiPair:
    """Build the normalized pair at a spectral point h via the kernel solver.

    Raises NoKernelElement when h is not on the solution scheme.
    """
    f = kernel_poly(h, params.l, params)
    g = kernel_poly(h, params.l_tilde, params, gauge=gauge)
    roots = classify_roots(_roots_of(f), params)
    return WronskiPair(f=f, g=g, h=tuple(h), roots=roots, gauge=gauge)


def pair_from_f(f, params: ModelParams, *, gauge: str = "factorial") -> WronskiPair:
    """Solve wronskian(f, g) = (l - l~) W(u) for the companion g, then
    derive h from f's roots and certify.

    Raises
    ------
    NoCompanion : the linear system for g is inconsistent, or f does not
        induce a polynomial B.
    """
    assert f.leading == 1 and f.degree == params.l, "f must be monic of degree l"
    exact = isinstance(f, ExactPoly)
    lt = params.l_tilde
    target = wronskian_target(params)
    if not exact:
        target = FloatPoly.from_exact(target)
    mono = ExactPoly if exact else FloatPoly
    # wronskian(f, .) is linear; build columns from monomial images
    images = [wronskian(f, mono((0,) * k + (1,))) for k in range(lt + 1)]
    nrows = params.l + lt
    rows = [[images[k].coeff(r) for k in range(lt)] for r in range(nrows)]
    rhs = [target.coeff(r) - images[lt].coeff(r) for r in range(nrows)]
    pin = gauge_coefficient_row(gauge, params.l, lt, exact=exact)
    rows.append(pin[:lt])
    rhs.append(-pin[lt])
    if exact:
        try:
            sol = solve_exact(rows, rhs)
        except Inconsistent as err:
            raise NoCompanion(str(err)) from err
        coeffs = sol.particular
    else:
        A = np.array(rows, dtype=complex)
        b = np.array(rhs, dtype=complex)
        coeffs, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.max(np.abs(A @ coeffs - b)) > 1e-9 * (1.0 + float(target.max_abs())):
            raise NoCompanion("companion linear system is inconsistent")
    g = mono(tuple(coeffs) + (1,))
    try:
        B = b_from_roots(f, params)
    except NonzeroRemainder as err:
        raise NoCompanion(str(err)) from err
    roots = classify_roots(_roots_of(f), params)
    return WronskiPair(f=f, g=g, h=h_from_b(B), roots=roots, gauge=gauge)


def verify_pair(pair: WronskiPair, params: ModelParams, *, tol: float = 1e-10) -> PairCertificate:
    """Residuals of both defining equation families, plus normalization.

    Wronskian route: wronskian(f, g) - (l - l~) W(u).  Kernel route:
    apply(D_h, f) and apply(D_h, g).  Normalization: monic leading
    coefficients, exact degrees, and the gauge functional on g.  Status is
    "exact" only when every residual is the literal zero rational.
    """

    def max_abs(p) -> float:
        if isinstance(p, ExactPoly):
            return float(max(abs(c) for c in p.coeffs))
        return float(p.max_abs())

    def poly_residual(p, scale: float) -> float:
        # relative to the terms being cancelled, else large systems hit the
        # double-precision cancellation floor at a fixed absolute tolerance
        if isinstance(p, ExactPoly) and p.is_zero:
            return 0.0
        return max_abs(p) / max(scale, 1.0)

    target = wronskian_target(params)
    exact_inputs = pair.is_exact and all(_is_exact(x) for x in pair.h)
    wr = wronskian(pair.f, pair.g) - (target if pair.is_exact else FloatPoly.from_exact(target))
    D = DifferenceOperator.from_h(list(pair.h), params)
    kf = apply(D, pair.f)
    kg = apply(D, pair.g)
    op_scale = max(max_abs(D.d), max_abs(D.B), max_abs(D.a))
    norm_parts = [
        abs(complex(pair.f.leading - 1)),
        abs(complex(pair.g.leading - 1)),
        float(pair.f.degree != params.l),
        float(pair.g.degree != params.l_tilde),
    ]
    norm_exact = (
        pair.f.leading == 1
        and pair.g.leading == 1
        and pair.f.degree == params.l
        and pair.g.degree == params.l_tilde
    )
    if norm_exact:
        gres = gauge_residual(pair.g, params.l, gauge=pair.gauge)
        norm_parts.append(abs(complex(gres)))
        norm_exact = _is_exact(gres) and gres == 0
    residuals = {
        "wronskian": poly_residual(wr, max_abs(pair.f) * max_abs(pair.g)),
        "kernel_f": poly_residual(kf, op_scale * max_abs(pair.f)),
        "kernel_g": poly_residual(kg, op_scale * max_abs(pair.g)),
        "normalization": max(norm_parts),
    }
    all_literal_zero = (
        exact_inputs
        and isinstance(wr, ExactPoly) and wr.is_zero
        and isinstance(kf, ExactPoly) and kf.is_zero
        and isinstance(kg, ExactPoly) and kg.is_zero
        and norm_exact
    )
    if all_literal_zero:
        status = "exact"
    elif max(residuals.values()) <= tol:
        status = "numeric"
    else:
        status = "failed"
    return PairCertificate(status=status, residuals=residuals)


class _LeftoverSystem:
    """Fast evaluator for the leftover residuals q_{l+3}..q_{l+n} as a
    function of x = (h_3..h_n), with the first-l triangular rows solved out.

    The full residual vector is affine in x and affine in a jointly, so the
    whole map is reconstructed exactly from k+1 probes of the affine pieces.
    The probes are taken in rational arithmetic; the exact copies back a
    high-precision polish for roots where double precision stalls.
    """

    def __init__(self, params: ModelParams, h12):
        from .diffop import _residual_affine_map

        self.l, self.n = params.l, params.n
        k = self.n - 2

        def probe(x):
            h = [h12[0], h12[1]] + list(x)
            c0, cols = _residual_affine_map(h, params)
            rows = [list(col) for col in cols]
            A = [list(r) for r in zip(*rows)] if rows else [[] for _ in c0]
            return list(c0), A

        base_c, base_A = probe([Fraction(0)] * k)
        self.exact_c = [base_c]
        self.exact_A = [base_A]
        for i in range(k):
            e = [Fraction(0)] * k
            e[i] = Fraction(1)
            ci, Ai = probe(e)
            self.exact_c.append([a - b for a, b in zip(ci, base_c)])
            self.exact_A.append([[a - b for a, b in zip(ra, rb)]
                                 for ra, rb in zip(Ai, base_A)])
        self.c0 = np.array([complex(v) for v in base_c])
        self.A0 = np.array([[complex(v) for v in r] for r in base_A]) \
            if base_A and base_A[0] else np.zeros((len(base_c), 0), dtype=complex)
        self.dc = [np.array([complex(v) for v in c]) for c in self.exact_c[1:]]
        self.dA = [np.array([[complex(v) for v in r] for r in A])
                   if A and A[0] else np.zeros_like(self.A0)
                   for A in self.exact_A[1:]]

    def _assemble(self, x):
        c = self.c0.copy()
        A = self.A0.copy()
        for xi, dci, dAi in zip(x, self.dc, self.dA):
            c = c + xi * dci
            A = A + xi * dAi
        return c, A

    def __call__(self, x) -> np.ndarray:
        c, A = self._assemble(x)
        l = self.l
        if l:
            a = np.linalg.solve(A[:l, :], -c[:l])
            return c[l:] + A[l:, :] @ a
        return c

    def residual_and_jacobian(self, x):
        """r(x) and its analytic Jacobian; a(x) solves the triangular block."""
        c, A = self._assemble(x)
        l = self.l
        if not l:
            return c, np.array([dci for dci in self.dc]).T \
                if self.dc else np.zeros((len(c), 0), dtype=complex)
        a = np.linalg.solve(A[:l, :], -c[:l])
        r = c[l:] + A[l:, :] @ a
        k = len(x)
        J = np.empty((len(r), k), dtype=complex)
        for i in range(k):
            # da/dx_i from differentiating A1 a = -c1
            rhs = -(self.dc[i][:l] + self.dA[i][:l, :] @ a)
            da = np.linalg.solve(A[:l, :], rhs)
            J[:, i] = self.dc[i][l:] + self.dA[i][l:, :] @ a + A[l:, :] @ da
        return r, J


def _newton_polish(x0, system: _LeftoverSystem, *, max_iter: int = 60,
                   tol: float = 1e-12):
    """Newton iteration on the square leftover system in (h_3..h_n).

    Returns (solution, iterations) or (None, iterations)."""
    x = np.array(x0, dtype=complex)
    k = len(x)
    if k == 0:
        r = system(x)
        ok = r.size == 0 or np.max(np.abs(r)) < 1e-8
        return (x, 0) if ok else (None, 0)
    scale = 1.0 + float(np.max(np.abs(x)))
    for it in range(1, max_iter + 1):
        try:
            r, J = system.residual_and_jacobian(x)
        except np.linalg.LinAlgError:
            return None, it
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(J))):
            return None, it
        if np.max(np.abs(r)) < tol * scale:
            return x, it
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            dx, *_ = np.linalg.lstsq(J, -r, rcond=None)
        if not np.all(np.isfinite(dx)):
            return None, it
        x = x + dx
        scale = 1.0 + float(np.max(np.abs(x)))
    try:
        r = system(x)
    except np.linalg.LinAlgError:
        return None, max_iter
    # stalled but nearly-zero residual: typical of multiple roots, where the
    # residual scales like the squared position error; promotion sorts it out
    if np.max(np.abs(r)) < 1e-8 * scale:
        return x, max_iter
    return None, max_iter


def _augmented_polish(tail, params: ModelParams, h12, gauge: str, *,
                      max_iter: int = 40):
    """Gauss-Newton on the full defining equations in (h, f, g) jointly.

    Eliminating the triangular block can leave true roots in flat valleys of
    the reduced square system, where residual-based Newton cannot localize
    them.  The joint system apply(D, f) = apply(D, g) = 0 with the monic and
    gauge pins is regular at simple pairs, so this converges quadratically
    where the reduced route stalls.  Returns the refined tail or None.
    """
    l, lt, k = params.l, params.l_tilde, params.n - 2
    h0 = [complex(h12[0]), complex(h12[1])] + [complex(v) for v in tail]
    try:
        f0 = kernel_poly(h0, l, params, tol=float("inf"))
        g0 = kernel_poly(h0, lt, params, tol=float("inf"), gauge=gauge)
    except (NoKernelElement, NotSeparating):
        return None
    x = np.array(
        [complex(v) for v in tail]
        + [complex(c) for c in f0.coeffs[:l]]
        + [complex(c) for c in g0.coeffs[:lt]], dtype=complex)
    pin = [complex(v) for v in gauge_coefficient_row(gauge, l, lt, exact=False)]
    nf, ng = l + params.n + 1, lt + params.n + 1

    def residual(xv):
        hh = [complex(h12[0]), complex(h12[1])] + list(xv[:k])
        f = FloatPoly(tuple(xv[k:k + l]) + (1,))
        g = FloatPoly(tuple(xv[k + l:k + l + lt]) + (1,))
        D = DifferenceOperator.from_h(hh, params)
        rf, rg = apply(D, f), apply(D, g)
        gr = sum(p * c for p, c in zip(pin, list(xv[k + l:]) + [1.0]))
        return np.array([rf.coeff(r) for r in range(nf)]
                        + [rg.coeff(r) for r in range(ng)] + [gr], dtype=complex)

    dim = k + l + lt
    for _ in range(max_iter):
        r = residual(x)
        if not np.all(np.isfinite(r)):
            return None
        scale = 1.0 + float(np.max(np.abs(x)))
        if np.max(np.abs(r)) < 1e-13 * scale:
            break
        J = np.empty((len(r), dim), dtype=complex)
        step = 1e-7 * scale
        for j in range(dim):
            xp = x.copy()
            xp[j] += step
            J[:, j] = (residual(xp) - r) / step
        dx, *_ = np.linalg.lstsq(J, -r, rcond=None)
        if not np.all(np.isfinite(dx)):
            return None
        x = x + dx
        if np.max(np.abs(dx)) < 1e-15 * scale:
            break
    r = residual(x)
    if np.max(np.abs(r)) > 1e-10 * (1.0 + float(np.max(np.abs(x)))):
        return None
    return tuple(x[:k])


def _dedup(points, tol: float):
    kept, merges = [], 0
    for p in points:
        duplicate = False
        for q in kept:
            if len(p) == 0 or max(abs(a - b) for a, b in zip(p, q)) <= tol:
                duplicate = True
                break
        if duplicate:
            merges += 1
        else:
            kept.append(p)
    return kept, merges


def _dedup_pairs(pairs, certs, tol: float):
    """Merge pairs whose h coincide, keeping the exact one when available.

    Needed after promotion: several stagnated starts can snap to one root."""
    kept_p, kept_c, merges = [], [], 0
    for pair, cert in zip(pairs, certs):
        hv = [complex(v) for v in pair.h]
        match = None
        for i, other in enumerate(kept_p):
            dist = max(
                (abs(a - complex(b)) for a, b in zip(hv, other.h)), default=0.0
            )
            if dist <= tol:
                match = i
                break
        if match is None:
            kept_p.append(pair)
            kept_c.append(cert)
        else:
            merges += 1
            if cert.status == "exact" and kept_c[match].status != "exact":
                kept_p[match], kept_c[match] = pair, cert
    return kept_p, kept_c, merges


def _promote_h(h_tail, h12, params: ModelParams):
    """Try to lift a numeric (h_3..h_n) to exact rationals; None on failure."""
    out = []
    for v in h_tail:
        r = rational_reconstruct(complex(v), RATIONAL_BOUND)
        if r is None:
            return None
        out.append(r)
    return (h12[0], h12[1]) + tuple(out)


def _snap_h(h_tail, h12, *, tol: float = 5e-2):
    """Nearby small-denominator rational candidates for a stagnated tail.

    Newton stalls at degenerate roots with position error far above the
    reconstruction gate; snapped candidates are only ever accepted after
    exact verification, so a wrong snap cannot introduce a spurious pair.
    """
    for bound in (12, 1000):
        out = []
        for v in h_tail:
            v = complex(v)
            if abs(v.imag) > tol:
                break
            r = Fraction(v.real).limit_denominator(bound)
            if abs(v.real - r) > tol:
                break
            out.append(r)
        else:
            yield (h12[0], h12[1]) + tuple(out)


def _pair_from_numeric_tail(tail, params: ModelParams, h12, gauge: str):
    """Exact pair when rational reconstruction holds up, numeric otherwise."""
    exact_h = _promote_h(tail, h12, params)
    if exact_h is not None:
        try:
            return pair_from_h(exact_h, params, gauge=gauge), True
        except (NoKernelElement, NotSeparating):
            pass
    for snapped in _snap_h(tail, h12):
        try:
            return pair_from_h(snapped, params, gauge=gauge), True
        except (NoKernelElement, NotSeparating):
            continue
    h = (complex(h12[0]), complex(h12[1])) + tuple(complex(v) for v in tail)
    return pair_from_h(h[: params.n], params, gauge=gauge), False


def _seeds_eigen(params: ModelParams, seed: int):
    from .spectra import spectrum_report

    report = spectrum_report(params, seed=seed)
    return [tuple(t) for t in report.tuples]


def _seeds_gaussian(params: ModelParams, seed: int, starts: int):
    k = params.n - 2
    rng = np.random.default_rng(seed)
    pts = rng.normal(scale=params.n, size=(starts, 2 * k)) if k else np.zeros((1, 0))
    return [tuple(row[:k] + 1j * row[k:]) for row in pts]


def _roots_exact_elimination(params: ModelParams):
    """Fully exact route: eliminate (h_3..h_n) by resultants over Q."""
    import sympy

    n = params.n
    if n > 4:
        raise SolverBudgetExceeded("exact elimination supported for n <= 4")
    h12 = affine_h12(params)
    if n == 2:
        return [()]
    syms = sympy.symbols(f"h3:{n + 1}", complex=True)
    h = [sympy.Rational(h12[0]), sympy.Rational(h12[1])] + list(syms)
    a, rest = _symbolic_triangular(h, params)
    eqs = [sympy.expand(sympy.together(r)) for r in rest]
    eqs = [sympy.fraction(e)[0] for e in eqs]
    if n == 3:
        poly = sympy.Poly(eqs[0], syms[0])
        sols = [(r,) for r in poly.all_roots()]
    else:
        res = sympy.resultant(eqs[0], eqs[1], syms[1])
        sols = []
        for r3 in sympy.Poly(res, syms[0]).all_roots():
            sub0 = sympy.Poly(eqs[0].subs(syms[0], r3), syms[1])
            sub1 = sympy.Poly(eqs[1].subs(syms[0], r3), syms[1])
            common = sympy.gcd(sub0, sub1)
            if common.degree() == 0:
                continue
            for r4 in common.all_roots():
                sols.append((r3, r4))
    out = []
    for sol in sols:
        vals = []
        for v in sol:
            if v.is_rational:
                vals.append(Fraction(int(sympy.numer(v)), int(sympy.denom(v))))
            else:
                vals.append(complex(v.evalf(30)))
        out.append(tuple(vals))
    return out


def _symbolic_triangular(h, params: ModelParams):
    """Forward-substitute the triangular rows symbolically; return (a, rest)."""
    import sympy

    l, n = params.l, params.n
    su = sympy.Symbol("u")
    zs = [sympy.Rational(z) for z in params.z]
    d = sympy.prod([su - z for z in zs])
    a_poly = sympy.prod([su - z + m for z, m in zip(zs, params.m)])
    B = 2 * su**n + sum(h[i] * su ** (n - 1 - i) for i in range(n))

    def op(w):
        return sympy.expand(d * w - B * w.subs(su, su - 1) + a_poly * w.subs(su, su - 2))

    base = op(su**l)
    cols = [op(su ** (l - i)) for i in range(1, l + 1)]
    top = l + n - 3
    a_vals = []
    # q_{2+i} rows are triangular in a_1..a_l; substitute as we go
    for i in range(1, l + 1):
        row = sympy.expand(
            base.coeff(su, top - (i - 1))
            + sum(a_vals[j] * cols[j].coeff(su, top - (i - 1)) for j in range(i - 1))
        )
        coef = cols[i - 1].coeff(su, top - (i - 1))
        a_vals.append(sympy.cancel(-row / coef))
    rest = []
    for i in range(l + 1, l + n - 1):
        rest.append(
            base.coeff(su, top - (i - 1))
            + sum(a_vals[j] * cols[j].coeff(su, top - (i - 1)) for j in range(l))
        )
    return a_vals, [sympy.cancel(r) for r in rest]


def enumerate_pairs(params: ModelParams, method: str = "eigen_seeded", *,
                    seed: int = 0, starts: int = None, dedup_tol: float = 1e-7,
                    gauge: str = "factorial", threads: int = 1) -> SolveReport:
    """Find all Wronskian pairs for the given weight data.

    method "eigen_seeded" seeds Newton from the joint spectrum of the
    commuting Hamiltonians (complete given simple spectrum),
    "newton_multistart" from 200(n-2) Gaussian starts (chain-free
    cross-check), "exact_elimination" (n <= 4) from resultants over Q.
    Numeric h values that survive rational reconstruction are certified
    exactly.
    """
    if params.n > N_CAP:
        raise SolverBudgetExceeded(f"n = {params.n} exceeds the dense cap {N_CAP}")
    try:
        expected = expected_count(params)
    except OutOfDomain:
        expected = -1
    h12 = affine_h12(params)
    stats = {"method": method, "seed": seed, "starts": 0,
             "newton_iterations": 0, "dedup_merges": 0, "reconstructed": 0}

    if method == "exact_elimination":
        tails = _roots_exact_elimination(params)
        stats["starts"] = len(tails)
        converged = [tuple(complex(v) for v in t) for t in tails]
        exact_tails = tails
    else:
        if method == "eigen_seeded":
            seeds = _seeds_eigen(params, seed)
        elif method == "newton_multistart":
            seeds = _seeds_gaussian(params, seed, starts or 200 * max(params.n - 2, 1))
        else:
            raise ValueError(f"unknown method {method!r}")
        stats["starts"] = len(seeds)
        system = _LeftoverSystem(params, h12)

        if method == "eigen_seeded":
            # eigen seeds are near-exact already; refine on the joint
            # (h, f, g) system, which stays regular at simple pairs where
            # the reduced system can be degenerate and let Newton wander
            def polish(s):
                refined = _augmented_polish(tuple(s), params, h12, gauge)
                if refined is not None:
                    return refined, 0
                return _newton_polish(s, system)
        else:
            def polish(s):
                return _newton_polish(s, system)

        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(polish, seeds))
        else:
            results = [polish(s) for s in seeds]
        converged = []
        for x, its in results:
            stats["newton_iterations"] += its
            if x is not None:
                converged.append(tuple(x))
        exact_tails = None

    kept, merges = _dedup(converged, dedup_tol)
    stats["dedup_merges"] = merges
    stats["refined"] = 0
    pairs, certs = [], []
    rescue = []
    for tail in kept:
        if exact_tails is not None:
            src = exact_tails[converged.index(tail)]
            if all(_is_exact(v) for v in src):
                try:
                    pair = pair_from_h((h12[0], h12[1]) + tuple(src), params, gauge=gauge)
                    pairs.append(pair)
                    certs.append(verify_pair(pair, params))
                    stats["reconstructed"] += 1
                    continue
                except NoKernelElement:
                    continue
        try:
            pair, promoted = _pair_from_numeric_tail(tail, params, h12, gauge)
            cert = verify_pair(pair, params)
        except (NoKernelElement, NotSeparating):
            rescue.append(tail)
            continue
        if exact_tails is None and cert.status == "failed":
            rescue.append(tail)
            continue
        stats["reconstructed"] += int(promoted)
        pairs.append(pair)
        certs.append(cert)
    if rescue:
        # stalled candidates cluster loosely around flat-valley roots; one
        # joint polish per cluster relocates the root to full precision
        reps, _ = _dedup(rescue, 2e-2)
        for rep in reps:
            stats["refined"] += 1
            refined = _augmented_polish(rep, params, h12, gauge)
            if refined is None:
                continue
            try:
                pair, promoted = _pair_from_numeric_tail(refined, params, h12, gauge)
            except (NoKernelElement, NotSeparating):
                continue
            stats["reconstructed"] += int(promoted)
            pairs.append(pair)
            certs.append(verify_pair(pair, params))
    pairs, certs, merges = _dedup_pairs(pairs, certs, dedup_tol)
    stats["dedup_merges"] += merges
    return SolveReport(params=params, method=method, pairs=tuple(pairs),
                       certificates=tuple(certs), expected=expected,
                       found=len(pairs), stats=stats)
