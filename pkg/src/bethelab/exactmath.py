"""Exact rational scalars, dense univariate polynomials, the shift operator,
the discrete Wronskian, and exact linear algebra over the rationals.

Polynomials are stored densely in ascending degree order.  ExactPoly carries
arbitrary-precision Fraction coefficients and is the workhorse for all
certified computations; FloatPoly is its complex double mirror used while
refining numeric candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

Rational = Fraction

# trim threshold applied by FloatPoly.normalize when no epsilon is given
FLOAT_TRIM_EPS = 1e-12


class NonzeroRemainder(ArithmeticError):
    """A division that had to be exact left a remainder."""


class Inconsistent(ArithmeticError):
    """A linear system has no solution."""


class Singular(ArithmeticError):
    """A square matrix that had to be inverted has no inverse."""


def _binomial_shift(coeffs, k, zero):
    # (u+k)^i expanded: result_j = sum_{i>=j} C(i,j) k^(i-j) c_i
    m = len(coeffs)
    out = [zero] * m
    for i, c in enumerate(coeffs):
        if c == zero:
            continue
        kp = 1
        for d in range(i + 1):
            j = i - d
            out[j] = out[j] + c * math.comb(i, j) * kp
            kp = kp * k
    return out


class ExactPoly:
    """Univariate polynomial with Fraction coefficients.

    coeffs[k] is the coefficient of u^k; trailing zeros are stripped so the
    leading coefficient is nonzero and the zero polynomial has empty coeffs.
    Instances are immutable.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        cs = [c if isinstance(c, Fraction) else Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("ExactPoly is immutable")

    @classmethod
    def constant(cls, c) -> "ExactPoly":
        return cls((c,))

    @classmethod
    def from_roots(cls, roots) -> "ExactPoly":
        """Monic polynomial with the given rational roots."""
        p = cls((1,))
        for r in roots:
            p = p * cls((-Fraction(r), 1))
        return p

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def leading(self) -> Fraction:
        assert self.coeffs, "zero polynomial has no leading coefficient"
        return self.coeffs[-1]

    def coeff(self, k: int) -> Fraction:
        """Coefficient of u^k (zero beyond the degree)."""
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def monic(self) -> "ExactPoly":
        assert self.coeffs, "cannot normalize the zero polynomial"
        lead = self.coeffs[-1]
        return ExactPoly(c / lead for c in self.coeffs)

    def __add__(self, other):
        if not isinstance(other, ExactPoly):
            other = ExactPoly((other,))
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return ExactPoly([x + y for x, y in zip(a, b)] + list(a[len(b):]))

    __radd__ = __add__

    def __neg__(self):
        return ExactPoly(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-other if isinstance(other, ExactPoly) else ExactPoly((-Fraction(other),)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, ExactPoly):
            c = Fraction(other)
            return ExactPoly(x * c for x in self.coeffs)
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1) if self.coeffs and other.coeffs else []
        for i, x in enumerate(self.coeffs):
            for j, y in enumerate(other.coeffs):
                out[i + j] += x * y
        return ExactPoly(out)

    __rmul__ = __mul__

    def __call__(self, x):
        """Evaluate by Horner; accepts Fraction, int or complex arguments."""
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other):
        if isinstance(other, ExactPoly):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"ExactPoly({list(self.coeffs)!r})"


class FloatPoly:
    """Complex double mirror of ExactPoly.

    Exact trailing zeros are stripped at construction; coefficients that are
    merely small survive until an explicit normalize call.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        cs = [complex(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("FloatPoly is immutable")

    @classmethod
    def from_exact(cls, p: ExactPoly) -> "FloatPoly":
        return cls(complex(c) for c in p.coeffs)

    @classmethod
    def constant(cls, c) -> "FloatPoly":
        return cls((c,))

    @classmethod
    def from_roots(cls, roots) -> "FloatPoly":
        p = cls((1,))
        for r in roots:
            p = p * cls((-complex(r), 1))
        return p

    def normalize(self, eps: float | None = None) -> "FloatPoly":
        """Trim trailing coefficients of magnitude below eps."""
        if eps is None:
            eps = FLOAT_TRIM_EPS
        cs = list(self.coeffs)
        while cs and abs(cs[-1]) < eps:
            cs.pop()
        return FloatPoly(cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def leading(self) -> complex:
        assert self.coeffs, "zero polynomial has no leading coefficient"
        return self.coeffs[-1]

    def coeff(self, k: int) -> complex:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0j

    def monic(self) -> "FloatPoly":
        assert self.coeffs, "cannot normalize the zero polynomial"
        lead = self.coeffs[-1]
        return FloatPoly(c / lead for c in self.coeffs)

    def max_abs(self) -> float:
        return max((abs(c) for c in self.coeffs), default=0.0)

    def __add__(self, other):
        if not isinstance(other, FloatPoly):
            other = FloatPoly((other,))
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return FloatPoly([x + y for x, y in zip(a, b)] + list(a[len(b):]))

    __radd__ = __add__

    def __neg__(self):
        return FloatPoly(-c for c in self.coeffs)

    def __sub__(self, other):
        if not isinstance(other, FloatPoly):
            other = FloatPoly((other,))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, FloatPoly):
            c = complex(other)
            return FloatPoly(x * c for x in self.coeffs)
        out = [0j] * (len(self.coeffs) + len(other.coeffs) - 1) if self.coeffs and other.coeffs else []
        for i, x in enumerate(self.coeffs):
            for j, y in enumerate(other.coeffs):
                out[i + j] += x * y
        return FloatPoly(out)

    __rmul__ = __mul__

    def __call__(self, x):
        acc = 0j
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other):
        if isinstance(other, FloatPoly):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"FloatPoly({list(self.coeffs)!r})"


def _promote(f, g):
    # mixed exact/float arguments compute in float
    if isinstance(f, ExactPoly) and isinstance(g, FloatPoly):
        return FloatPoly.from_exact(f), g
    if isinstance(f, FloatPoly) and isinstance(g, ExactPoly):
        return f, FloatPoly.from_exact(g)
    return f, g


def shift(p, k):
    """Return p(u+k), same coefficient type as p.

    The shift by an integer k is the k-th power of the translation operator
    tau: w(u) -> w(u+1); any exact scalar k is accepted.
    """
    if isinstance(p, ExactPoly):
        return ExactPoly(_binomial_shift(p.coeffs, Fraction(k), Fraction(0)))
    return FloatPoly(_binomial_shift(p.coeffs, complex(k), 0j))


def wronskian(f, g):
    """Discrete Wronskian Wr(f,g) = f(u)g(u-1) - f(u-1)g(u)."""
    f, g = _promote(f, g)
    return f * shift(g, -1) - shift(f, -1) * g


def divide_exact(num, den, tol: float = 1e-9):
    """Divide num by den, requiring the division to be exact.

    Parameters
    ----------
    num, den : ExactPoly or FloatPoly (den nonzero).
    tol : float
        For float inputs the remainder may not exceed tol relative to the
        magnitude of num; exact inputs require a literal zero remainder.

    Raises
    ------
    NonzeroRemainder : num is not a polynomial multiple of den.
    """
    num, den = _promote(num, den)
    assert not den.is_zero, "division by the zero polynomial"
    exact = isinstance(num, ExactPoly)
    rem = list(num.coeffs)
    dc = den.coeffs
    dd = len(dc) - 1
    lead = dc[-1]
    qc = [Fraction(0) if exact else 0j] * max(len(rem) - dd, 0)
    for i in range(len(rem) - dd - 1, -1, -1):
        q = rem[i + dd] / lead
        qc[i] = q
        if q != 0:
            for j, d in enumerate(dc):
                rem[i + j] -= q * d
    if exact:
        if any(c != 0 for c in rem):
            raise NonzeroRemainder(f"remainder {ExactPoly(rem)!r}")
        return ExactPoly(qc)
    scale = 1.0 + num.max_abs()
    if any(abs(c) > tol * scale for c in rem):
        raise NonzeroRemainder(f"remainder magnitude {max(abs(c) for c in rem):.3e}")
    return FloatPoly(qc)


@dataclass(frozen=True)
class LinearSolution:
    """One particular solution of M x = rhs plus a basis of ker M."""

    particular: tuple
    kernel: tuple

    @property
    def is_unique(self) -> bool:
        return not self.kernel


def solve_exact(M, rhs) -> LinearSolution:
    """Solve the rectangular rational system M x = rhs exactly.

    Fraction-free (Bareiss-style) forward elimination with the pivot chosen
    as the largest-numerator entry of the current column, ties broken by the
    lowest row index; rows are scaled to integers first so the Bareiss
    divisions stay exact.

    Raises
    ------
    Inconsistent : no solution exists.
    """
    nrows = len(M)
    ncols = len(M[0]) if nrows else 0
    assert all(len(row) == ncols for row in M), "M must be rectangular"
    assert len(rhs) == nrows, "rhs length must match the row count"
    rows = []
    for i in range(nrows):
        row = [Fraction(x) for x in M[i]] + [Fraction(rhs[i])]
        scale = math.lcm(*(x.denominator for x in row)) if row else 1
        rows.append([x * scale for x in row])

    prev = Fraction(1)
    pivot_cols: list[int] = []
    rank = 0
    for col in range(ncols):
        best = None
        for i in range(rank, nrows):
            v = rows[i][col]
            if v != 0 and (best is None or abs(v.numerator) > abs(rows[best][col].numerator)):
                best = i
        if best is None:
            continue
        rows[rank], rows[best] = rows[best], rows[rank]
        piv = rows[rank][col]
        for i in range(rank + 1, nrows):
            fac = rows[i][col]
            rows[i] = [(piv * rows[i][j] - fac * rows[rank][j]) / prev
                       for j in range(ncols + 1)]
        prev = piv
        pivot_cols.append(col)
        rank += 1
        if rank == nrows:
            break

    for i in range(rank, nrows):
        if rows[i][ncols] != 0:
            raise Inconsistent(f"row {i} reduces to 0 = {rows[i][ncols]}")

    free_cols = [c for c in range(ncols) if c not in set(pivot_cols)]
    base = [Fraction(0)] * ncols
    particular = _solve_pivots(rows, rank, pivot_cols, ncols, base, use_rhs=True)
    kernel = []
    for fc in free_cols:
        seed = [Fraction(0)] * ncols
        seed[fc] = Fraction(1)
        kernel.append(_solve_pivots(rows, rank, pivot_cols, ncols, seed, use_rhs=False))
    return LinearSolution(particular=particular, kernel=tuple(kernel))


def invert_exact(M) -> tuple:
    """Invert a square rational matrix by Gauss-Jordan elimination.

    Returns the inverse as a tuple of row tuples of Fractions.

    Raises
    ------
    Singular : the matrix has rank below its size.
    """
    size = len(M)
    assert all(len(row) == size for row in M), "matrix must be square"
    rows = [[Fraction(x) for x in row]
            + [Fraction(1 if j == i else 0) for j in range(size)]
            for i, row in enumerate(M)]
    for col in range(size):
        piv = next((i for i in range(col, size) if rows[i][col] != 0), None)
        if piv is None:
            raise Singular(f"rank deficiency at column {col}")
        rows[col], rows[piv] = rows[piv], rows[col]
        inv = 1 / rows[col][col]
        rows[col] = [v * inv for v in rows[col]]
        for i in range(size):
            if i != col and rows[i][col] != 0:
                fac = rows[i][col]
                rows[i] = [a - fac * b for a, b in zip(rows[i], rows[col])]
    return tuple(tuple(row[size:]) for row in rows)


def _solve_pivots(rows, rank, pivot_cols, ncols, seed, use_rhs):
    x = list(seed)
    for r in range(rank - 1, -1, -1):
        col = pivot_cols[r]
        acc = rows[r][ncols] if use_rhs else Fraction(0)
        for j in range(col + 1, ncols):
            if x[j] != 0:
                acc -= rows[r][j] * x[j]
        x[col] = acc / rows[r][col]
    return tuple(x)


def rational_reconstruct(x, bound: int) -> Fraction | None:
    """Promote a float to p/q with q <= bound and |x - p/q| < 1e-9.

    Returns None (never raises) when x is not close to such a fraction,
    including any x with a non-negligible imaginary part.
    """
    assert bound > 0, "denominator bound must be positive"
    xc = complex(x)
    if abs(xc.imag) >= 1e-9:
        return None
    cand = Fraction(xc.real).limit_denominator(bound)
    if abs(float(cand) - xc.real) < 1e-9:
        return cand
    return None


def rational_to_str(q) -> str:
    """Serialize a rational as "p/q", or "p" when the denominator is 1."""
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def rational_from_str(s: str) -> Fraction:
    return Fraction(s)
