"""The spin-1/2 chain on (C^2)^(x)n: monodromy operators cleared of
denominators, the transfer polynomial B(u, H) and its commuting
coefficients H_k, weight and singular subspaces, the periodic flip
Hamiltonian, Bethe vectors, and the conjugation/normality identities.

Basis conventions: site 1 is the leftmost tensor factor and the most
significant bit of the basis index; bit 0 is spin up (v+), bit 1 is spin
down (v-).  Weight l means l down spins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .diffop import BetheRoots, ModelParams
from .exactmath import ExactPoly, shift, solve_exact

N_CAP = 12
EXACT_SITE_CAP = 6


class ChainTooLarge(ValueError):
    """Requested chain length exceeds the dense-matrix cap."""


def _is_exact_scalar(x) -> bool:
    return isinstance(x, (int, Fraction))


def _check_cap(n: int):
    if n > N_CAP:
        raise ChainTooLarge(f"n = {n} exceeds the dense cap {N_CAP}")


def _use_exact(params: ModelParams, mode: str) -> bool:
    if mode == "exact":
        return True
    if mode == "numeric":
        return False
    assert mode == "auto", f"unknown mode {mode!r}"
    return params.n <= EXACT_SITE_CAP


@dataclass(frozen=True)
class OperatorPoly:
    """Polynomial in u with dense square-matrix coefficients; index k holds
    the operator coefficient of u^k."""

    coeffs: tuple

    def __post_init__(self):
        assert len(self.coeffs) >= 1, "need at least one coefficient"
        dim = self.coeffs[0].shape[0]
        assert all(c.shape == (dim, dim) for c in self.coeffs), \
            "coefficients must be square of equal dimension"

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def dim(self) -> int:
        return self.coeffs[0].shape[0]

    @property
    def is_exact(self) -> bool:
        return self.coeffs[0].dtype == object

    def coeff(self, k: int):
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return _zeros(self.dim, self.is_exact)

    def __call__(self, u):
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = u * acc + c
        return acc

    def __add__(self, other: "OperatorPoly") -> "OperatorPoly":
        top = max(len(self.coeffs), len(other.coeffs))
        return OperatorPoly(tuple(self.coeff(k) + other.coeff(k)
                                  for k in range(top)))

    def __sub__(self, other: "OperatorPoly") -> "OperatorPoly":
        top = max(len(self.coeffs), len(other.coeffs))
        return OperatorPoly(tuple(self.coeff(k) - other.coeff(k)
                                  for k in range(top)))

    def __matmul__(self, other: "OperatorPoly") -> "OperatorPoly":
        out = [_zeros(self.dim, self.is_exact)
               for _ in range(self.degree + other.degree + 1)]
        for i, ci in enumerate(self.coeffs):
            for j, cj in enumerate(other.coeffs):
                out[i + j] = out[i + j] + ci @ cj
        return OperatorPoly(tuple(out))

    def shifted(self, delta) -> "OperatorPoly":
        """The composition u -> u + delta, re-expanded."""
        out = [_zeros(self.dim, self.is_exact)
               for _ in range(len(self.coeffs))]
        for k, c in enumerate(self.coeffs):
            for j in range(k + 1):
                out[j] = out[j] + (math.comb(k, j) * delta ** (k - j)) * c
        return OperatorPoly(tuple(out))


@dataclass(frozen=True)
class SubspaceBasis:
    """Columns spanning a subspace of (C^2)^(x)n; orthonormal in numeric
    mode, exact spanning in rational mode."""

    ambient: int
    basis: object
    label: str

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def _zeros(dim: int, exact: bool):
    if exact:
        return np.zeros((dim, dim), dtype=object)
    return np.zeros((dim, dim), dtype=complex)


def _eye(dim: int, exact: bool):
    m = _zeros(dim, exact)
    np.fill_diagonal(m, Fraction(1) if exact else 1.0)
    return m


def _sweep(u, params: ModelParams, exact: bool):
    """The 2x2 aux-block monodromy at a scalar u: blocks M[a][b] = T~_{a+1,b+1}(u).

    Site i contributes L_i(u) with aux-block (c, b) equal to
    (u - z_i) delta_cb + e_{bc}^{(i)}; the product runs site 1 to site n.
    Site operators act by column-slice moves instead of dense products.
    """
    n = params.n
    dim = 1 << n
    M = [[_eye(dim, exact), _zeros(dim, exact)],
         [_zeros(dim, exact), _eye(dim, exact)]]
    for i in range(n):
        zi = params.z[i] if exact else complex(params.z[i])
        uz = u - zi
        shape = (dim, 1 << i, 2, 1 << (n - 1 - i))
        new = [[uz * M[a][b] for b in range(2)] for a in range(2)]
        for a in range(2):
            views = [M[a][c].reshape(shape) for c in range(2)]
            for b in range(2):
                dest = new[a][b].reshape(shape)
                for c in range(2):
                    # right-multiply by e_{b+1,c+1}: columns with site bit c
                    # receive the columns with site bit b
                    dest[:, :, c, :] += views[c][:, :, b, :]
        M = new
    return M


def _lagrange_rows(nodes, exact: bool):
    """Coefficient rows of the Lagrange basis: row j holds the coefficients
    of l_j(u), so poly coeff k = sum_j rows[j][k] * value_j."""
    rows = []
    for j, uj in enumerate(nodes):
        others = [uk for k, uk in enumerate(nodes) if k != j]
        if exact:
            num = ExactPoly.from_roots(others)
            den = Fraction(1)
            for uk in others:
                den *= uj - uk
            rows.append([c / den for c in num.coeffs])
        else:
            num = np.poly(others)[::-1] if others else np.array([1.0 + 0j])
            den = np.prod([uj - uk for uk in others]) if others else 1.0
            rows.append(list(np.asarray(num, dtype=complex) / den))
    return rows


@lru_cache(maxsize=16)
def monodromy(params: ModelParams, mode: str = "auto"):
    """The four d(u)-cleared monodromy entries as OperatorPoly, ordered
    (T~11, T~12, T~21, T~22).

    Degrees: n on the diagonal, n-1 off the diagonal.  The site ordering is
    the one fixed by the highest-weight action T~_aa(u) v+ = prod(u - z_i
    + L_a^(i)) v+ with site weights L^(i) = (1, 0).
    """
    _check_cap(params.n)
    assert all(m == 1 for m in params.m), "chain requires all weights m_i = 1"
    exact = _use_exact(params, mode)
    n = params.n
    if exact:
        nodes = [Fraction(k) for k in range(n + 1)]
    else:
        radius = max(1.0, n / 2.0)
        nodes = [radius * np.exp(2j * np.pi * k / (n + 1)) for k in range(n + 1)]
    samples = [_sweep(u, params, exact) for u in nodes]
    rows = _lagrange_rows(nodes, exact)
    out = []
    for a in range(2):
        for b in range(2):
            deg = n if a == b else n - 1
            coeffs = []
            for k in range(deg + 1):
                acc = _zeros(1 << n, exact)
                for j in range(len(nodes)):
                    acc = acc + rows[j][k] * samples[j][a][b]
                coeffs.append(acc)
            out.append(OperatorPoly(tuple(coeffs)))
    return tuple(out)


def monodromy_at(u, params: ModelParams, mode: str = "auto"):
    """The four T~ matrices evaluated at a scalar u (no interpolation)."""
    _check_cap(params.n)
    exact = _use_exact(params, mode) and _is_exact_scalar(u)
    M = _sweep(u if exact else complex(u), params, exact)
    return M[0][0], M[0][1], M[1][0], M[1][1]


def transfer_B(params: ModelParams, mode: str = "auto"):
    """B(u, H) = T~11(u) + T~22(u) and the extracted coefficients H_0..H_n,
    with B = H_0 u^n + H_1 u^(n-1) + ... + H_n."""
    t11, _, _, t22 = monodromy(params, mode)
    B = t11 + t22
    H = [B.coeff(params.n - k) for k in range(params.n + 1)]
    return B, H


def _weight_indices(n: int, l: int):
    return [j for j in range(1 << n) if bin(j).count("1") == l]


def _raising_on_weight(n: int, l: int, exact: bool):
    """Global e12 mapped from weight-l coordinates to weight-(l-1) coordinates."""
    src = _weight_indices(n, l)
    dst = _weight_indices(n, l - 1)
    pos = {j: r for r, j in enumerate(dst)}
    one = Fraction(1) if exact else 1.0
    A = np.zeros((len(dst), len(src)), dtype=object if exact else complex)
    for c, j in enumerate(src):
        for i in range(n):
            bit = 1 << (n - 1 - i)
            if j & bit:
                A[pos[j ^ bit], c] += one
    return A


def weight_singular_basis(params: ModelParams, l: int,
                          mode: str = "auto") -> SubspaceBasis:
    """Basis of Sing[l]: the weight-(n-l, l) space intersected with ker e12.

    Dimension C(n, l) - C(n, l-1).
    """
    n = params.n
    _check_cap(n)
    assert 0 <= 2 * l <= n, "need 0 <= 2l <= n"
    exact = _use_exact(params, mode)
    idx = _weight_indices(n, l)
    if l == 0:
        cols = [[Fraction(1) if exact else 1.0]]
    else:
        A = _raising_on_weight(n, l, exact)
        if exact:
            sol = solve_exact([list(r) for r in A], [Fraction(0)] * A.shape[0])
            cols = sol.kernel
        else:
            from scipy.linalg import null_space

            cols = list(null_space(A.astype(complex).real).T)
    dim = 1 << n
    basis = np.zeros((dim, len(cols)), dtype=object if exact else complex)
    for c, vec in enumerate(cols):
        for r, j in enumerate(idx):
            basis[j, c] = vec[r]
    expect = math.comb(n, l) - (math.comb(n, l - 1) if l >= 1 else 0)
    assert basis.shape[1] == expect, "singular dimension mismatch"
    return SubspaceBasis(ambient=dim, basis=basis, label=f"singular[{l}]")


def xxx_hamiltonian(n: int):
    """The periodic flip Hamiltonian sum_{j=1}^{n-1} P_{j,j+1} + P_{1,n};
    for n = 2 both terms are P_12."""
    assert n >= 2, "need at least two sites"
    _check_cap(n)
    dim = 1 << n

    def flip(i, j):
        # permutation matrix swapping the site-i and site-j bits
        src = np.arange(dim)
        bi, bj = 1 << (n - 1 - i), 1 << (n - 1 - j)
        vi, vj = (src & bi) > 0, (src & bj) > 0
        dst = src & ~(bi | bj)
        dst |= np.where(vi, bj, 0) | np.where(vj, bi, 0)
        P = np.zeros((dim, dim), dtype=np.int64)
        P[dst, src] = 1
        return P

    H = sum(flip(j, j + 1) for j in range(n - 1)) + flip(0, n - 1)
    return H


def global_e(n: int, a: int, b: int):
    """The global generator sum_i e_ab^(i) as a dense integer matrix."""
    dim = 1 << n
    E = np.zeros((dim, dim), dtype=np.int64)
    for i in range(n):
        bit = 1 << (n - 1 - i)
        for j in range(dim):
            # e_ab |j> at site i: site state must be b-1; result has a-1
            if (j >> (n - 1 - i)) & 1 == b - 1:
                E[j ^ (bit if a != b else 0), j] += 1
    return E


def bethe_vector(roots, params: ModelParams, mode: str = "auto"):
    """(-1)^(l(n-1)) T~12(t_1+1) ... T~12(t_l+1) v+^(x)n for roots t.

    This is the tensor-module image of the weight vector
    y_0^l prod_j f(y_j - 1) with f = prod_i (u - t_i): the operator string
    T~12(u_1)...T~12(u_l) applied to the cyclic vector produces
    y_0^l prod_{i,j} (u_i - y_j) in separated variables, which matches the
    weight vector at u_i = t_i + 1 up to the sign prefactor.  At
    non-admissible roots the vector vanishes identically.
    """
    t = roots.t if isinstance(roots, BetheRoots) else tuple(roots)
    assert len(t) == params.l, "need l roots"
    _check_cap(params.n)
    exact = _use_exact(params, mode) and all(_is_exact_scalar(x) for x in t)
    dim = 1 << params.n
    v = np.zeros(dim, dtype=object if exact else complex)
    sign = -1 if (params.l * (params.n - 1)) % 2 else 1
    v[0] = Fraction(sign) if exact else float(sign)
    for tj in reversed(t):
        uj = tj + 1 if exact else complex(tj) + 1
        _, t12, _, _ = monodromy_at(uj, params, "exact" if exact else "numeric")
        v = t12 @ v
    return v


@dataclass(frozen=True)
class NormalityReport:
    """Deviations of the conjugation identity and of H_k normality."""

    conjugation: float
    hk_commutator: float


def normality_check(params: ModelParams, u_samples) -> NormalityReport:
    """Check B~(u)^dag = (-1)^n B~(-conj(u)-1) with B~ = T~11 + T~22, and
    the normality commutators [H_k, H_k^dag].

    Both deviations are relative to the operator norms involved.  For odd n
    the sign is the minus of the uncleared T11 + T22 identity; clearing by
    d(u) = u^n contributes (-1)^n under u -> -u-1.
    """
    assert params.homogeneous, "conjugation identity needs homogeneous z"
    B, H = transfer_B(params, mode="numeric")
    sign = (-1) ** params.n
    worst = 0.0
    for u in u_samples:
        u = complex(u)
        lhs = B(u).conj().T
        rhs = sign * B(-u.conjugate() - 1)
        scale = 1.0 + np.linalg.norm(lhs, 2)
        worst = max(worst, float(np.linalg.norm(lhs - rhs, 2)) / scale)
    hk_worst = 0.0
    for Hk in H:
        Hd = Hk.conj().T
        scale = 1.0 + float(np.linalg.norm(Hk, 2)) ** 2
        dev = float(np.linalg.norm(Hk @ Hd - Hd @ Hk, 2)) / scale
        hk_worst = max(hk_worst, dev)
    return NormalityReport(conjugation=worst, hk_commutator=hk_worst)


def rtt_check(params: ModelParams, u, v) -> float:
    """Max deviation of the defining relations
    (u-v)[T_ab(u), T_cd(v)] = T_cb(v) T_ad(u) - T_cb(u) T_ad(v)
    over all index choices, together with the k=1 exchange relation of the
    T12 commutation formulae; both via the d-cleared operators.

    Rejects u = v (the relation degenerates).
    """
    if complex(u) == complex(v):
        raise ValueError("rtt_check needs u != v")
    exact = (_use_exact(params, "auto")
             and _is_exact_scalar(u) and _is_exact_scalar(v))
    Tu = monodromy_at(u, params, "exact" if exact else "numeric")
    Tv = monodromy_at(v, params, "exact" if exact else "numeric")

    def ix(a, b):
        return 2 * (a - 1) + (b - 1)

    worst = 0.0
    uv = u - v
    for a in (1, 2):
        for b in (1, 2):
            for c in (1, 2):
                for d in (1, 2):
                    lhs = uv * (Tu[ix(a, b)] @ Tv[ix(c, d)]
                                - Tv[ix(c, d)] @ Tu[ix(a, b)])
                    rhs = (Tv[ix(c, b)] @ Tu[ix(a, d)]
                           - Tu[ix(c, b)] @ Tv[ix(a, d)])
                    worst = max(worst, _rel_dev(lhs, rhs))
    # k = 1 exchange relations, cleared of the 1/(u - u1) denominators:
    # (u-v) Taa(u) T12(v) = (u-v-s) T12(v) Taa(u) + s T12(u) Taa(v)
    for aa, s in ((0, 1), (3, -1)):
        lhs = uv * (Tu[aa] @ Tv[1])
        rhs = (uv - s) * (Tv[1] @ Tu[aa]) + s * (Tu[1] @ Tv[aa])
        worst = max(worst, _rel_dev(lhs, rhs))
    return worst


def _rel_dev(lhs, rhs) -> float:
    diff = lhs - rhs
    if diff.dtype == object:
        num = max((abs(complex(x)) for x in diff.flat), default=0.0)
        den = 1.0 + max((abs(complex(x)) for x in lhs.flat), default=0.0)
    else:
        num = float(np.max(np.abs(diff))) if diff.size else 0.0
        den = 1.0 + float(np.max(np.abs(lhs)))
    return num / den


def qdet_check(params: ModelParams, mode: str = "auto") -> float:
    """Residual of the quantum-determinant identity
    T~11(u) T~22(u-1) - T~12(u) T~21(u-1) = a(u) d(u-1) Id
    as an OperatorPoly identity; 0.0 in exact mode means literal equality.
    """
    t11, t12, t21, t22 = monodromy(params, mode)
    exact = t11.is_exact
    lhs = (t11 @ t22.shifted(Fraction(-1) if exact else -1.0)
           - t12 @ t21.shifted(Fraction(-1) if exact else -1.0))
    target = params.a_poly * shift(params.d_poly, -1)
    dim = t11.dim
    worst = 0.0
    for k in range(max(lhs.degree, target.degree) + 1):
        c = target.coeff(k)
        expect = (c if exact else complex(c)) * _eye(dim, exact)
        worst = max(worst, _rel_dev(lhs.coeff(k), expect))
    return worst
