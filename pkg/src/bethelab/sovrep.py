"""The chain in separated variables: the x<->y change of variables, the
ladder form of the transfer-matrix entries, the universal weight function,
the singular subspace cut out by the quantum-determinant coefficient
e21 e12, the spanning-vector projection sh onto the tensor module, and
eigenvector extraction for spectral points whose Bethe vector vanishes.

Level-l vectors live in W_y[l] = y0^l C_l, where C_l is the space of
symmetric polynomials in y_1..y_{n-1} of degree at most l in each
variable.  Coordinates are taken in the monomial-symmetric basis
y0^l m_lambda with lambda running over partitions in the (n-1) x l box,
graded-lexicographically ordered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations, product

import numpy as np

from .diffop import ModelParams
from .exactmath import ExactPoly, FloatPoly, Singular, invert_exact, shift, solve_exact
from .spinchain import (
    ChainTooLarge,
    OperatorPoly,
    _weight_indices,
    monodromy_at,
    transfer_B,
)

SOV_N_CAP = 6
_ATTEMPTS = 3
_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61)


class InterpolationDegeneracy(ArithmeticError):
    """Every retried sample grid failed to determine the interpolation."""


class RankDeficientSampling(ArithmeticError):
    """Every retried tuple family failed to span the level."""


class EmptyImage(ArithmeticError):
    """No eigenline with the requested eigenvalues exists in the image of
    sh; the tuple is not a spectral point."""


def _is_exact_scalar(x) -> bool:
    return isinstance(x, (int, Fraction))


def _check_sov(n: int):
    if n > SOV_N_CAP:
        raise ChainTooLarge(f"n = {n} exceeds the separated-variables cap {SOV_N_CAP}")


@dataclass(frozen=True)
class BoxPartition:
    """A partition fitting an (n-1) x l box: weakly decreasing parts, at
    most n-1 of them, each at most l.  Ordered by grade, ties broken
    lexicographically; trailing zero parts are stripped."""

    parts: tuple

    def __post_init__(self):
        raw = tuple(int(p) for p in self.parts)
        assert all(a >= b for a, b in zip(raw, raw[1:])), \
            "parts must be weakly decreasing"
        assert all(p >= 0 for p in raw), "parts must be nonnegative"
        object.__setattr__(self, "parts", tuple(p for p in raw if p))

    @property
    def total(self) -> int:
        return sum(self.parts)

    @property
    def key(self) -> tuple:
        return (self.total, self.parts)

    def padded(self, width: int) -> tuple:
        assert len(self.parts) <= width, "partition has too many parts"
        return self.parts + (0,) * (width - len(self.parts))

    def fits(self, rows: int, height: int) -> bool:
        return len(self.parts) <= rows and all(p <= height for p in self.parts)

    def __lt__(self, other: "BoxPartition") -> bool:
        return self.key < other.key

    @classmethod
    def box(cls, rows: int, height: int) -> tuple:
        """All partitions in the rows x height box, graded-lex sorted."""
        return _box(rows, height)


@lru_cache(maxsize=None)
def _box(rows: int, height: int) -> tuple:
    seen = {tuple(sorted(e, reverse=True))
            for e in product(range(height + 1), repeat=rows)}
    return tuple(sorted(BoxPartition(p) for p in seen))


@dataclass(frozen=True, eq=False)
class SoVVector:
    """An element of W_y[l]: coords maps a BoxPartition lam to the
    coefficient of y0^l m_lam(y_1..y_{n-1})."""

    n: int
    level: int
    coords: dict

    def __post_init__(self):
        rows, height = self.n - 1, self.level
        assert all(lam.fits(rows, height) for lam in self.coords), \
            "coordinate outside the box"
        # the y-side count of box partitions equals the count of degree-l
        # monomials in x_1..x_n, so the change of variables can be square
        assert math.comb(rows + height, height) == math.comb(rows + height, rows)
        object.__setattr__(
            self, "coords",
            {lam: v for lam, v in self.coords.items() if v != 0})

    @property
    def dim(self) -> int:
        return math.comb(self.n - 1 + self.level, self.level)

    @property
    def is_zero(self) -> bool:
        return not self.coords

    def coeff(self, lam: BoxPartition):
        return self.coords.get(lam, Fraction(0))

    def dense(self) -> np.ndarray:
        order = BoxPartition.box(self.n - 1, self.level)
        col = np.zeros(len(order), dtype=object)
        for r, lam in enumerate(order):
            col[r] = self.coords.get(lam, Fraction(0))
        return col

    def max_abs(self):
        if self.is_zero:
            return Fraction(0)
        return max(abs(v) for v in self.coords.values())

    def value(self, ys):
        """The value of the symmetric part at the point ys; the y0^l
        prefactor is left implicit."""
        ys = tuple(ys)
        assert len(ys) == self.n - 1, "need n - 1 coordinates"
        total = 0
        for lam, c in self.coords.items():
            total = total + c * _mono_value(lam.padded(self.n - 1), ys)
        return total

    def __eq__(self, other) -> bool:
        if not isinstance(other, SoVVector):
            return NotImplemented
        return (self.n, self.level, self.coords) == \
            (other.n, other.level, other.coords)

    def __add__(self, other: "SoVVector") -> "SoVVector":
        assert (self.n, self.level) == (other.n, other.level), "level mismatch"
        coords = dict(self.coords)
        for lam, v in other.coords.items():
            coords[lam] = coords.get(lam, 0) + v
        return SoVVector(n=self.n, level=self.level, coords=coords)

    def __sub__(self, other: "SoVVector") -> "SoVVector":
        return self + (-1) * other

    def __rmul__(self, scalar) -> "SoVVector":
        return SoVVector(n=self.n, level=self.level,
                         coords={lam: scalar * v for lam, v in self.coords.items()})


def from_dense(col, n: int, level: int) -> SoVVector:
    """Rebuild a level vector from coordinates in the BoxPartition order."""
    order = BoxPartition.box(n - 1, level)
    assert len(col) == len(order), "dense length must match the level dimension"
    return SoVVector(n=n, level=level, coords=dict(zip(order, col)))


def apply_sov(M, vec: SoVVector) -> SoVVector:
    """Apply a matrix in BoxPartition coordinates to a level vector."""
    return from_dense(M @ vec.dense(), vec.n, vec.level)


class SoVOperatorPoly(OperatorPoly):
    """Operator polynomial whose matrix coefficients act on level-l SoV
    coordinates in the graded-lex BoxPartition order."""


@lru_cache(maxsize=65536)
def _mono_value(exps: tuple, ys: tuple):
    """Monomial symmetric polynomial with exponent multiset exps at ys."""
    total = 0
    for perm in set(permutations(exps)):
        term = 1
        for y, e in zip(ys, perm):
            if e:
                term = term * y ** e
        total = total + term
    return total


def _ladder_tuples(count: int, width: int, attempt: int) -> tuple:
    """The first `count` width-subsets of the ladder 1, 1+s, 1+2s, ... with
    spacing s = attempt + 2.  Coordinate gaps are multiples of s, so sample
    points never collide with each other or with their +-1 shifts, and each
    retry changes the geometry rather than translating it."""
    if width == 0:
        return ((),) * count
    pool_size = width
    while math.comb(pool_size, width) < count:
        pool_size += 1
    step = attempt + 2
    base = [Fraction(1 + step * k) for k in range(pool_size)]
    out = []
    for combo in combinations(base, width):
        out.append(tuple(combo))
        if len(out) == count:
            break
    return tuple(out)


@lru_cache(maxsize=32)
def _interp_nodes(n: int, l: int):
    """Sample tuples and the inverse evaluation matrix for level (n, l):
    a vector of C_l is recovered from its values at the samples by one
    multiplication with the inverse."""
    order = BoxPartition.box(n - 1, l)
    dim = len(order)
    err = None
    for attempt in range(_ATTEMPTS):
        samples = _ladder_tuples(dim, n - 1, attempt)
        M = [[_mono_value(lam.padded(n - 1), s) for lam in order]
             for s in samples]
        try:
            inv = invert_exact(M)
        except Singular as exc:
            err = InterpolationDegeneracy(
                f"sample grid attempt {attempt} is degenerate: {exc}")
            continue
        return order, samples, np.array(inv, dtype=object)
    raise err


def _eye_obj(dim: int) -> np.ndarray:
    m = np.zeros((dim, dim), dtype=object)
    m[:] = Fraction(0)
    np.fill_diagonal(m, Fraction(1))
    return m


@lru_cache(maxsize=32)
def sklyanin_ops(params: ModelParams, l: int):
    """T~11(u) and T~22(u) on W_y[l] as SoVOperatorPoly, plus the e11 and
    e22 matrices (scalars on a level).

    The entries take the ladder form

        T~22(u) = (u + e22 - sum z + sum y_j) prod_j (u - y_j)
                  + sum_j d(y_j) prod_{j'!=j} (u - y_{j'})/(y_j - y_{j'}) tau_j

    with tau_j : y_j -> y_j + 1, and T~11(u) the same with e11, a(y_j) and
    tau_j^{-1}.  Matrices come from exact evaluation at ladder samples
    followed by interpolation in the m_lambda basis: the apparent poles at
    y_j = y_{j'} cancel only after the j-sum, and distinct-coordinate
    samples never meet them.
    """
    _check_sov(params.n)
    assert l >= 0, "level must be nonnegative"
    n = params.n
    order, samples, minv = _interp_nodes(n, l)
    dim = len(order)
    zsum = sum(params.z, Fraction(0))
    t_ops = []
    for lead, scalar, step in (
        (params.a_poly, Fraction(params.weight_sum - l), -1),
        (params.d_poly, Fraction(l), 1),
    ):
        vals = [np.zeros((dim, dim), dtype=object) for _ in range(n + 1)]
        for t, s in enumerate(samples):
            node = ExactPoly.from_roots(s)
            front = ExactPoly((scalar - zsum + sum(s), Fraction(1))) * node
            terms = []
            for j in range(n - 1):
                others = s[:j] + s[j + 1:]
                den = Fraction(1)
                for v in others:
                    den *= s[j] - v
                shifted = s[:j] + (s[j] + step,) + s[j + 1:]
                terms.append((lead(s[j]) / den, ExactPoly.from_roots(others),
                              shifted))
            for c, lam in enumerate(order):
                exps = lam.padded(n - 1)
                mval = _mono_value(exps, s)
                coefs = [front.coeff(k) * mval for k in range(n + 1)]
                for wt, lag, shifted in terms:
                    mv = wt * _mono_value(exps, shifted)
                    if mv:
                        for k, lc in enumerate(lag.coeffs):
                            coefs[k] += mv * lc
                for k in range(n + 1):
                    vals[k][t, c] = coefs[k]
        t_ops.append(SoVOperatorPoly(tuple(minv @ vals[k]
                                           for k in range(n + 1))))
    eye = _eye_obj(dim)
    e11 = Fraction(params.weight_sum - l) * eye
    e22 = Fraction(l) * eye
    return t_ops[0], t_ops[1], e11, e22


def transfer_B_sov(params: ModelParams, l: int):
    """B(u, H~) = T~11(u) + T~22(u) on W_y[l] and the extracted
    coefficients H~_0..H~_n, with B = H~_0 u^n + H~_1 u^(n-1) + ... + H~_n."""
    t11, t22, _, _ = sklyanin_ops(params, l)
    B = SoVOperatorPoly((t11 + t22).coeffs)
    n = params.n
    H = [B.coeff(n - k) for k in range(n + 1)]
    eye = _eye_obj(B.dim)
    zsum = sum(params.z, Fraction(0))
    assert B.degree == n, "transfer polynomial must have degree n"
    assert np.array_equal(H[0], 2 * eye), "leading coefficient must be 2 Id"
    assert np.array_equal(H[1], Fraction(params.weight_sum - 2 * zsum) * eye), \
        "subleading coefficient must be the scalar sum(m - 2z)"
    return B, H


@lru_cache(maxsize=32)
def e21e12_op(params: ModelParams, l: int) -> np.ndarray:
    """The operator e21 e12 on W_y[l], read off the quantum determinant:
    T~12(u) T~21(u-1) = T~11(u) T~22(u-1) - a(u) d(u-1), and the left side
    opens with e21 e12 u^(2n-2) because the off-diagonal entries are
    e21 u^(n-1) + ... and e12 u^(n-1) + ... .  Its kernel is Sing W_y[l]
    since e21, multiplication by y0, is injective."""
    t11, t22, _, _ = sklyanin_ops(params, l)
    prod = t11 @ t22.shifted(-1)
    scalar = (params.a_poly * shift(params.d_poly, -1)).coeff(2 * params.n - 2)
    out = prod.coeff(2 * params.n - 2).copy()
    for i in range(out.shape[0]):
        out[i, i] -= scalar
    return out


@lru_cache(maxsize=32)
def singular_sov_basis(params: ModelParams, l: int) -> np.ndarray:
    """Columns spanning Sing W_y[l] = ker(e21 e12) in BoxPartition
    coordinates; the dimension drops by the next-lower level whenever the
    separating condition 2l <= n holds."""
    op = e21e12_op(params, l)
    sol = solve_exact([list(r) for r in op], [Fraction(0)] * op.shape[0])
    basis = np.zeros((op.shape[0], len(sol.kernel)), dtype=object)
    basis[:] = Fraction(0)
    for c, vec in enumerate(sol.kernel):
        for r, v in enumerate(vec):
            basis[r, c] = v
    if 2 * l <= params.n:
        lower = math.comb(params.n - 2 + l, l - 1) if l >= 1 else 0
        assert basis.shape[1] == math.comb(params.n - 1 + l, l) - lower, \
            "singular dimension must drop by the lower level"
    return basis


def weight_fn(a_coeffs, params: ModelParams, l: int) -> SoVVector:
    """The weight vector omega = y0^l prod_j p(y_j - 1) for the monic
    degree-l polynomial p with trailing coefficients a_coeffs = (a_1..a_l).

    Nonzero for every coefficient vector: the full-box coordinate is the
    leading 1 of p raised to the number of variables.
    """
    _check_sov(params.n)
    a = tuple(a_coeffs)
    assert len(a) == l, "need l trailing coefficients"
    if all(_is_exact_scalar(x) for x in a):
        p = ExactPoly(tuple(Fraction(x) for x in reversed(a)) + (Fraction(1),))
    else:
        p = FloatPoly(tuple(complex(x) for x in reversed(a)) + (1 + 0j,))
    q = shift(p, -1)
    rows = params.n - 1
    coords = {}
    for lam in BoxPartition.box(rows, l):
        c = 1
        for e in lam.padded(rows):
            c = c * q.coeff(e)
        coords[lam] = c
    vec = SoVVector(n=params.n, level=l, coords=coords)
    assert not vec.is_zero, "weight vector cannot vanish"
    return vec


def weight_fn_eigencheck(pair, params: ModelParams) -> dict:
    """Residuals of the ladder eigenproblem on the weight vector of a pair:
    the max-abs coordinate of (H~_s - h_s) omega for s = 1..n and of
    e21 e12 omega.  All are exactly zero at a certified rational pair, in
    particular at the pairs whose tensor-module Bethe vector vanishes."""
    l = pair.f.degree
    a = tuple(pair.f.coeff(l - k) for k in range(1, l + 1))
    omega = weight_fn(a, params, l)
    col = omega.dense()
    _, H = transfer_B_sov(params, l)
    out = {}
    for s in range(1, params.n + 1):
        delta = H[s] @ col - pair.h[s - 1] * col
        out[f"H{s}"] = max(abs(v) for v in delta)
    ecol = e21e12_op(params, l) @ col
    out["e21e12"] = max(abs(v) for v in ecol)
    return out


def _prime_tuples(l: int, count: int, attempt: int) -> tuple:
    """Argument tuples for the spanning operators: the first `count`
    combinations of l distinct small primes in graded order (by tuple sum),
    skipping the first `attempt` primes on retries.

    Spanning vectors depend on the tuples only through their symmetric
    functions, so the tuples must spread in that space; graded order mixes
    the leading primes early, where the lexicographic order would start
    with a long one-parameter family sharing the smallest prime.
    """
    if l == 0:
        return ((),) * count
    pool = [Fraction(p) for p in _PRIMES[attempt:]]
    assert math.comb(len(pool), l) >= count, "prime pool exhausted"
    combos = sorted(combinations(pool, l), key=lambda c: (sum(c), c))
    return tuple(combos[:count])


def _independent_columns(S, need: int | None = None):
    """Indices of linearly independent columns of S, scanned left to right.

    With `need` set, stop at that many and return None if S cannot supply
    them; otherwise return every pivot column found.
    """
    work, piv_pos, chosen = [], [], []
    for c in range(S.shape[1]):
        vec = [Fraction(x) if not isinstance(x, Fraction) else x
               for x in S[:, c]]
        for pos, red in zip(piv_pos, work):
            if vec[pos] != 0:
                fac = vec[pos] / red[pos]
                vec = [a - fac * b for a, b in zip(vec, red)]
        pos = next((i for i, v in enumerate(vec) if v != 0), None)
        if pos is None:
            continue
        work.append(vec)
        piv_pos.append(pos)
        chosen.append(c)
        if need is not None and len(chosen) == need:
            return chosen
    return chosen if need is None else None


def _span_sov(w, n: int, l: int, order) -> list:
    """Coordinates of y0^l prod_{i,j} (w_i - y_j): the separated-variables
    value of the spanning operator string at the tuple w."""
    base = ExactPoly.from_roots(w)
    sign = Fraction(-1 if l % 2 else 1)
    rc = [sign * base.coeff(k) for k in range(l + 1)]
    out = []
    for lam in order:
        c = Fraction(1)
        for e in lam.padded(n - 1):
            c *= rc[e]
        out.append(c)
    return out


@lru_cache(maxsize=32)
def sh_map(params: ModelParams, l: int) -> np.ndarray:
    """Matrix of the projection of W_y[l] onto weight-l tensor coordinates,
    solved from spanning vectors: the operator string applied to the cyclic
    vector equals y0^l prod_{i,j} (w_i - y_j) in separated variables and
    the matching product applied to v+^(x)n in the tensor module.

    Tuples w draw coordinates from distinct small primes; dim W[l] + 10
    samples are taken, and the surplus must be consistent with the solved
    map - every kernel relation among the spanning vectors maps to the
    zero tensor vector.
    """
    _check_sov(params.n)
    n = params.n
    assert 0 <= l <= n, "level must fit the chain"
    order = BoxPartition.box(n - 1, l)
    dim = len(order)
    count = dim + 10
    widx = _weight_indices(n, l)
    lowering = {}

    def tensor_side(w):
        v = np.zeros(1 << n, dtype=object)
        v[:] = Fraction(0)
        v[0] = Fraction(1)
        for wi in w:
            if wi not in lowering:
                lowering[wi] = monodromy_at(wi, params, "exact")[1]
            v = lowering[wi] @ v
        return v[widx]

    err = None
    for attempt in range(_ATTEMPTS):
        tuples_w = _prime_tuples(l, count, attempt)
        S = np.zeros((dim, count), dtype=object)
        T = np.zeros((len(widx), count), dtype=object)
        for t, w in enumerate(tuples_w):
            S[:, t] = _span_sov(w, n, l, order)
            T[:, t] = tensor_side(w)
        piv = _independent_columns(S, dim)
        if piv is None:
            err = RankDeficientSampling(
                f"attempt {attempt}: spanning vectors have rank below {dim}")
            continue
        inv = invert_exact([[S[r, c] for c in piv] for r in range(dim)])
        sh = T[:, piv] @ np.array(inv, dtype=object)
        resid = sh @ S - T
        assert all(v == 0 for v in resid.flat), \
            "kernel relations among spanning vectors must map to zero"
        return sh
    raise err


def _restrict(M: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Matrix of M on the column span of cols, in those coordinates."""
    rhs = M @ cols
    rows = [list(r) for r in cols]
    out = np.zeros((cols.shape[1], cols.shape[1]), dtype=object)
    out[:] = Fraction(0)
    for c in range(cols.shape[1]):
        sol = solve_exact(rows, list(rhs[:, c]))
        assert sol.is_unique, "restriction basis must have full column rank"
        out[:, c] = sol.particular
    return out


def _mat_pow(A: np.ndarray, k: int) -> np.ndarray:
    out = _eye_obj(A.shape[0])
    for _ in range(k):
        out = out @ A
    return out


def _kernel_matrix(rows) -> np.ndarray:
    sol = solve_exact(rows, [Fraction(0)] * len(rows))
    K = np.zeros((len(rows[0]), len(sol.kernel)), dtype=object)
    K[:] = Fraction(0)
    for c, vec in enumerate(sol.kernel):
        for r, v in enumerate(vec):
            K[r, c] = v
    return K


def extract_eigenvector(h_star, params: ModelParams, l: int) -> np.ndarray:
    """Tensor-space eigenline for the spectral point h_star = (h_1..h_n),
    returned as an ambient (C^2)^(x)n vector.

    The generalized joint eigenspace of the ladder Hamiltonians H~_k for
    h_star inside Sing W_y[l] (exponent: the full subspace dimension) is
    pushed through sh, and the unique eigenline of the tensor Hamiltonians
    in the image is returned.  This serves the spectral points whose
    Bethe vector vanishes identically; the separated-variables weight
    vector never does.
    """
    _check_sov(params.n)
    n = params.n
    h = tuple(h_star)
    assert len(h) == n, "need n eigenvalues"
    Sb = singular_sov_basis(params, l)
    if Sb.shape[1] == 0:
        raise EmptyImage("singular level is empty")
    _, H = transfer_B_sov(params, l)
    sh = sh_map(params, l)
    widx = _weight_indices(n, l)
    exact = all(_is_exact_scalar(x) for x in h)
    if exact:
        return _extract_exact(h, params, l, Sb, H, sh, widx)
    return _extract_numeric(h, params, l, Sb, H, sh, widx)


def _extract_exact(h, params, l, Sb, H, sh, widx):
    n = params.n
    depth = Sb.shape[1]
    V = _eye_obj(depth)
    for k in range(1, n + 1):
        R = _restrict(H[k], Sb)
        for i in range(depth):
            R[i, i] -= Fraction(h[k - 1])
        P = _mat_pow(R, depth) @ V
        K = _kernel_matrix([list(r) for r in P])
        if K.shape[1] == 0:
            raise EmptyImage(f"H_{k} has no generalized eigenvalue {h[k - 1]}")
        V = V @ K
    image = sh @ (Sb @ V)
    piv = _independent_columns(image)
    if not piv:
        raise EmptyImage("generalized eigenspace maps to zero")
    basis = image[:, piv]
    _, Ht = transfer_B(params, "exact")
    stacked = []
    for k in range(1, n + 1):
        Hw = Ht[k][np.ix_(widx, widx)].copy()
        for i in range(len(widx)):
            Hw[i, i] -= Fraction(h[k - 1])
        stacked.extend([list(r) for r in Hw @ basis])
    sol = solve_exact(stacked, [Fraction(0)] * len(stacked))
    if not sol.kernel:
        raise EmptyImage("no common eigenline in the image")
    assert len(sol.kernel) == 1, "eigenline must be unique at a spectral point"
    line = basis @ np.array(sol.kernel[0], dtype=object)
    out = np.zeros(1 << n, dtype=object)
    out[:] = Fraction(0)
    for r, j in enumerate(widx):
        out[j] = line[r]
    return out


def _extract_numeric(h, params, l, Sb, H, sh, widx, tol: float = 1e-8):
    from scipy.linalg import orth, schur

    n = params.n
    Q = orth(np.asarray(Sb, dtype=complex))
    for k in range(1, n + 1):
        # the running subspace is invariant under every H~_k, so the
        # compression Q* H Q is the genuine restriction; a sorted Schur
        # form splits off the cluster of eigenvalues at h_k stably.  A
        # defective cluster of size m scatters like the m-th root of the
        # rounding error, so the matching window takes the same root of tol.
        A = Q.conj().T @ np.asarray(H[k], dtype=complex) @ Q
        target = complex(h[k - 1])
        window = tol ** (1.0 / Q.shape[1])
        _, Z, sdim = schur(A, output="complex",
                           sort=lambda lam: abs(lam - target) < window)
        if sdim == 0:
            raise EmptyImage(f"H_{k} has no generalized eigenvalue {h[k - 1]}")
        Q = Q @ Z[:, :sdim]
    # ranks below are judged against tol on an absolute scale: the matrices
    # being tested are residuals, near zero in norm precisely when the
    # extraction succeeds, so a cutoff relative to their own largest
    # singular value would see pure rounding noise as full rank
    image = np.asarray(sh, dtype=complex) @ Q
    s_img = np.linalg.svd(image, compute_uv=False)
    rank = int(np.sum(s_img > tol * max(1.0, s_img[0])))
    if rank == 0:
        raise EmptyImage("generalized eigenspace maps to zero")
    basis = np.linalg.svd(image, full_matrices=False)[0][:, :rank]
    _, Ht = transfer_B(params, "numeric")
    scale = 1.0
    stacked = []
    for k in range(1, n + 1):
        Hw = np.asarray(Ht[k], dtype=complex)[np.ix_(widx, widx)]
        scale = max(scale, float(np.linalg.norm(Hw)))
        Hw = Hw - complex(h[k - 1]) * np.eye(len(widx))
        stacked.append(Hw @ basis)
    _, s, Vh = np.linalg.svd(np.vstack(stacked), full_matrices=False)
    if s[-1] > tol * scale:
        raise EmptyImage("no common eigenline in the image")
    if len(s) > 1:
        assert s[-2] > tol * scale, "eigenline must be unique at a spectral point"
    line = basis @ Vh[-1].conj()
    out = np.zeros(1 << n, dtype=complex)
    out[widx] = line
    return out


def xy_transform(p) -> SoVVector:
    """Image of a degree-l homogeneous x-polynomial under the change of
    variables sum_i x_i u^(n-i) = y0 prod_j (u - y_j), i.e.
    x_i = (-1)^(i-1) y0 sigma_{i-1}(y_1..y_{n-1}).

    p maps exponent tuples (d_1..d_n), all of one total degree l, to
    rational coefficients.  The product of elementary symmetric functions
    is expanded in the m_lambda basis by evaluation and interpolation.
    """
    assert p, "the zero polynomial fixes neither n nor the degree"
    keys = list(p)
    n = len(keys[0])
    l = sum(keys[0])
    assert all(len(k) == n and sum(k) == l for k in keys), \
        "p must be homogeneous in x_1..x_n"
    _check_sov(n)
    order, samples, minv = _interp_nodes(n, l)
    vals = np.zeros(len(order), dtype=object)
    for t, s in enumerate(samples):
        sig = _sigma_values(s)
        acc = Fraction(0)
        for exps, cf in p.items():
            term = Fraction(cf)
            for i, d in enumerate(exps):
                if d:
                    term *= ((-1) ** i * sig[i]) ** d
            acc += term
        vals[t] = acc
    return from_dense(minv @ vals, n, l)


def xy_inverse(vec: SoVVector) -> dict:
    """Coefficients of the x-monomial expansion recovering vec; exact
    round trip with xy_transform."""
    mons, minv = _x_matrix(vec.n, vec.level)
    coords = minv @ vec.dense()
    return {m: c for m, c in zip(mons, coords) if c != 0}


def _sigma_values(s: tuple) -> tuple:
    """Elementary symmetric function values (sigma_0 .. sigma_width) at s."""
    poly = ExactPoly.from_roots(s)
    width = len(s)
    return tuple((-1) ** k * poly.coeff(width - k) for k in range(width + 1))


@lru_cache(maxsize=32)
def _x_monomials(n: int, l: int) -> tuple:
    mons = [e for e in product(range(l + 1), repeat=n) if sum(e) == l]
    return tuple(sorted(mons, reverse=True))


@lru_cache(maxsize=32)
def _x_matrix(n: int, l: int):
    mons = _x_monomials(n, l)
    order = BoxPartition.box(n - 1, l)
    cols = np.zeros((len(order), len(mons)), dtype=object)
    for c, m in enumerate(mons):
        cols[:, c] = xy_transform({m: Fraction(1)}).dense()
    inv = np.array(invert_exact([list(r) for r in cols]), dtype=object)
    return mons, inv
