"""Z-affine subspaces A_{x,y} = {x + k y : k in Z} of the reals.

Includes Z-GCD / Z-LCM of reals, densities, exact intersections, interval
counts, the two-term Bonferroni bound, Dirichlet sums over primes in
progressions, Euler's totient with its explicit lower bound, and the builder
for the unipotent trace families A(n, l) of a rational matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np
import sympy

from .errors import (
    DegenerateError,
    ExactnessRequiredError,
    PreconditionError,
    ResourceLimitError,
    VerificationError,
)
from .field import QuadElem
from .matgroup import ExactMat2
from .qrs import AffineDecomp, QrsSeq, decompose
from .sieve import prime_flags, primes_upto

INF = math.inf
EULER_GAMMA = 0.57721566490153286061
DEFAULT_FAMILY_CAP = 64


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, QuadElem))


def _rational_part(x):
    """x as a Fraction when x is an exactly rational value, else None."""
    if isinstance(x, QuadElem):
        return x.u if x.v == 0 else None
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return None


def _is_integer(x) -> bool:
    r = _rational_part(x)
    return r is not None and r.denominator == 1


@dataclass(frozen=True)
class ZAffine:
    """{x + k*y : k in Z}; ``y = INF`` denotes the singleton {x}."""

    x: object
    y: object = INF

    def __post_init__(self):
        if self.y != INF and not self.y > 0:
            raise PreconditionError(f"period must be positive or infinite, got {self.y}")

    @property
    def exact(self) -> bool:
        return _is_exact(self.x) and (self.y == INF or _is_exact(self.y))

    @property
    def is_point(self) -> bool:
        return self.y == INF

    def __contains__(self, v) -> bool:
        if self.is_point:
            return v == self.x
        if not (self.exact and _is_exact(v)):
            raise ExactnessRequiredError("membership needs exact values")
        return _is_integer((v - self.x) / self.y)

    def elements(self, lo, hi) -> list:
        """Elements in [lo, hi], ascending."""
        if self.is_point:
            return [self.x] if lo <= self.x <= hi else []
        k0 = math.ceil((lo - self.x) / self.y)
        k1 = math.floor((hi - self.x) / self.y)
        return [self.x + k * self.y for k in range(k0, k1 + 1)]

    def __str__(self) -> str:
        return f"A_{{{self.x},{'inf' if self.is_point else self.y}}}"


@dataclass(frozen=True)
class Empty:
    def elements(self, lo, hi) -> list:
        return []


@dataclass(frozen=True)
class Point:
    value: object

    def elements(self, lo, hi) -> list:
        return [self.value] if lo <= self.value <= hi else []


def _float_ratio(r: float, tolerance: float, max_den: int = 10**6):
    approx = Fraction(r).limit_denominator(max_den)
    return approx if abs(float(approx) - r) <= tolerance * max(1.0, abs(r)) else None


def gcd_lcm_z(x, y, tolerance: float | None = None):
    """(GCD_Z(x, y), LCM_Z(x, y)) for positive reals; (0, INF) for an irrational ratio.

    Exact inputs decide rationality of x/y exactly.  Float inputs need a
    ``tolerance`` within which the ratio is matched by a rational p/q.
    """
    if not (x > 0 and y > 0):
        raise PreconditionError("Z-GCD/Z-LCM need positive arguments")
    if _is_exact(x) and _is_exact(y):
        x = Fraction(x) if isinstance(x, int) else x
        ratio = _rational_part(x / y)
        if ratio is None:
            return Fraction(0), INF
    else:
        if tolerance is None:
            raise ExactnessRequiredError("rationality of a float ratio is undecidable "
                                         "without a tolerance")
        ratio = _float_ratio(float(x) / float(y), tolerance)
        if ratio is None:
            return 0.0, INF
    p, q = ratio.numerator, ratio.denominator
    return x / p, x * q


def density(A: ZAffine):
    """Natural density 1/y (0 for a singleton)."""
    if A.is_point:
        return 0
    return Fraction(1, A.y) if isinstance(A.y, int) else 1 / A.y


def _as_quad(x, d: int) -> QuadElem:
    return x if isinstance(x, QuadElem) else QuadElem(x, 0, d)


def _field_d(*xs) -> int | None:
    ds = {x.d for x in xs if isinstance(x, QuadElem) and x.v != 0}
    if len(ds) > 1:
        raise PreconditionError("values from different quadratic fields")
    return ds.pop() if ds else None


def intersect(A: ZAffine, B: ZAffine):
    """A ∩ B as :class:`Empty`, :class:`Point` or a :class:`ZAffine`.

    In the affine case the period is LCM_Z of the periods and the offset is
    the least common element that is >= max(x, x').
    """
    if not (A.exact and B.exact):
        raise ExactnessRequiredError("intersection needs exact offsets and periods")
    if A.is_point:
        return Point(A.x) if A.x in B else Empty()
    if B.is_point:
        return Point(B.x) if B.x in A else Empty()
    y, y2 = A.y, B.y
    delta = B.x - A.x
    g, lcm = gcd_lcm_z(y, y2)
    if lcm == INF:
        # y, y2 independent over Q: k*y - k2*y2 = delta has at most one rational solution
        d = _field_d(y, y2, delta)
        Y, Y2, DL = (_as_quad(v, d) for v in (y, y2, delta))
        det = -Y.u * Y2.v + Y2.u * Y.v
        k = (-DL.u * Y2.v + Y2.u * DL.v) / det
        k2 = (Y.u * DL.v - DL.u * Y.v) / det
        if k.denominator == 1 and k2.denominator == 1:
            return Point(A.x + k * y)
        return Empty()
    # y = p g, y2 = q g with gcd(p, q) = 1
    step = delta / g
    if not _is_integer(step):
        return Empty()
    step = int(_rational_part(step))
    p = int(_rational_part(y / g))
    q = int(_rational_part(y2 / g))
    k0 = (step * pow(p, -1, q)) % q if q > 1 else 0
    e = A.x + k0 * y
    lo = A.x if A.x >= B.x else B.x
    e = e + math.ceil((lo - e) / lcm) * lcm
    return ZAffine(e, lcm)


def count_in_interval(A: ZAffine, lo, hi) -> int:
    """Exact #{x + k y in [lo, hi]}."""
    if lo > hi:
        raise PreconditionError("need lo <= hi")
    if A.is_point:
        return int(lo <= A.x <= hi)
    k0 = math.ceil((lo - A.x) / A.y)
    k1 = math.floor((hi - A.x) / A.y)
    return max(0, k1 - k0 + 1)


def count_in(S, lo, hi) -> int:
    if isinstance(S, Empty):
        return 0
    if isinstance(S, Point):
        return int(lo <= S.value <= hi)
    return count_in_interval(S, lo, hi)


@dataclass(frozen=True)
class UnionBound:
    exact: int
    bound: int
    singles: int
    pairwise: int


def union_lower_bound(family: list[ZAffine], lo, hi, cap: int = DEFAULT_FAMILY_CAP) -> UnionBound:
    """Exact #(∪ A_i ∩ [lo, hi]) and the bound Σ#(A_i) - Σ_{i<j}#(A_i ∩ A_j)."""
    if len(family) > cap:
        raise ResourceLimitError(f"family of {len(family)} spaces exceeds cap {cap}")
    union = set()
    singles = 0
    for A in family:
        els = A.elements(lo, hi)
        singles += len(els)
        union.update(els)
    pairwise = sum(count_in(intersect(A, B), lo, hi) for A, B in combinations(family, 2))
    out = UnionBound(len(union), singles - pairwise, singles, pairwise)
    if out.exact < out.bound:
        raise VerificationError(f"Bonferroni violated: exact {out.exact} < bound {out.bound}")
    return out


# ---------------------------------------------------------------------------
# totients and Dirichlet sums


def totient(n: int) -> int:
    if n < 1:
        raise PreconditionError("totient needs n >= 1")
    out = n
    for p in sympy.factorint(n):
        out = out // p * (p - 1)
    return out


def totient_bound(n: int) -> float | None:
    """n / (e^gamma log log n + 3 / log log n); None where log log n <= 0 (n < 3)."""
    if n < 3:
        return None
    ll = math.log(math.log(n))
    return n / (math.exp(EULER_GAMMA) * ll + 3 / ll)


def totient_and_bound(n: int) -> tuple[int, float | None]:
    """(phi(n), lower bound); asserts phi(n) > bound for n >= 3."""
    if n < 2:
        raise PreconditionError("need n >= 2")
    phi = totient(n)
    bound = totient_bound(n)
    if bound is not None and not phi > bound:
        raise VerificationError(f"phi({n}) = {phi} not above {bound}")
    return phi, bound


def totient_table(n_max: int) -> np.ndarray:
    """phi(0..n_max) by a sieve (phi(0) = 0)."""
    phi = np.arange(n_max + 1, dtype=np.int64)
    for p in np.flatnonzero(prime_flags(n_max + 1)):
        phi[p::p] -= phi[p::p] // p
    return phi


@dataclass(frozen=True)
class DirichletValue:
    x: float
    a: int
    m: int
    n_primes: int
    reciprocal_sum: float
    S: float


def dirichlet_S(x, a: int, m: int) -> DirichletValue:
    """S(x, a, m) = Σ_{p<=x, p≡a (m)} 1/p - log log x / phi(m)."""
    if m < 1 or math.gcd(a, m) != 1:
        raise PreconditionError(f"need m >= 1 and gcd(a, m) = 1, got a={a}, m={m}")
    if x < 3:
        raise PreconditionError("need x >= 3")
    ps = primes_upto(math.floor(x))
    sel = ps[ps % m == a % m]
    recip = math.fsum((1.0 / sel.astype(np.float64)).tolist())
    S = recip - math.log(math.log(x)) / totient(m)
    return DirichletValue(float(x), a, m, int(len(sel)), recip, S)


# ---------------------------------------------------------------------------
# trace families A(n, l)


@dataclass(frozen=True)
class FamilyEntry:
    n: int
    l: int
    space: ZAffine
    witness: int
    witness_prime: bool


@dataclass
class FamilyReport:
    matrix: ExactMat2
    beta2: int
    budget: float
    negated: bool
    entries: list
    decomps: dict            # n -> AffineDecomp
    density_sums: dict       # n -> exact Σ_l 1/(beta2 (l a_n + b_n))
    e_over_C: dict           # n -> Σ_{i<=n} 3 beta2 K_i phi(S_i) / L_i
    degenerate: list         # n with a_n = 0


def power_entries(A: ExactMat2) -> tuple[QrsSeq, QrsSeq, QrsSeq, QrsSeq]:
    """Entry sequences a_n, b_n, c_n, d_n of A^n, each a QRS(tr A, 1)."""
    tr = A.trace()
    return (QrsSeq(tr, 1, A.a), QrsSeq(tr, 0, A.b), QrsSeq(tr, 0, A.c), QrsSeq(tr, 1, A.d))


def build_trace_family(A: ExactMat2, beta2: int, n_range, value_budget) -> FamilyReport:
    """Z-affine trace families A(n, l) = A_{a_n + l c_n + d_n, beta2 (l a_n + b_n)}.

    Keeps the l whose witness l S_n + T_n is a prime in [2, value_budget].
    """
    ents = [Fraction(x) for x in A.entries()]
    A = ExactMat2(*ents)
    if A.det() != 1:
        raise PreconditionError("matrix must have determinant 1")
    tr = A.trace()
    if tr.denominator == 1:
        raise PreconditionError(f"trace {tr} is an integer")
    if abs(tr) <= 2:
        raise PreconditionError(f"|trace| = {abs(tr)} <= 2: not hyperbolic")
    if A.b * A.c == 0:
        raise PreconditionError("need bc != 0")
    if not (isinstance(beta2, int) and beta2 > 0):
        raise PreconditionError("beta2 must be a positive integer")
    negated = tr < 0
    if negated:
        A = -A
    seqs = power_entries(A)
    n_list = sorted(set(n_range))
    budget = math.floor(value_budget)
    flags = prime_flags(max(budget, 2) + 1)
    entries, decomps, dsums, e_over_c, degenerate = [], {}, {}, {}, []
    running = Fraction(0)
    last = max(n_list) if n_list else -1
    for i in range(last + 1):
        an, bn, cn, dn = (s.term(i) for s in seqs)
        try:
            dec = decompose(an, bn, i)
        except DegenerateError:
            degenerate.append(i)
            continue
        running += Fraction(3 * beta2 * dec.K * totient(abs(dec.S)), dec.L)
        if i not in n_list:
            continue
        decomps[i] = dec
        e_over_c[i] = running
        dsum = Fraction(0)
        S, T = dec.S, dec.T
        lo_w, hi_w = 2, budget
        if S > 0:
            ls = range(math.ceil(Fraction(lo_w - T, S)), math.floor(Fraction(hi_w - T, S)) + 1)
        else:
            ls = range(math.ceil(Fraction(hi_w - T, S)), math.floor(Fraction(lo_w - T, S)) + 1)
        for l in ls:
            w = l * S + T
            if not (2 <= w <= budget and flags[w]):
                continue
            period = beta2 * (l * an + bn)
            space = ZAffine(an + l * cn + dn, period)
            entries.append(FamilyEntry(i, l, space, w, True))
            dsum += 1 / period
        dsums[i] = dsum
    return FamilyReport(A, beta2, float(value_budget), negated, entries, decomps, dsums,
                        e_over_c, degenerate)
