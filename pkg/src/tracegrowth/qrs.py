"""Quadratic recurrence sequences F_n = a F_{n-1} - b F_{n-2} over the rationals.

The verification helpers work with the integer rescaling Fbar_n = M q^n F_n
(a = p/q, b = 1), which satisfies Fbar_n = p Fbar_{n-1} - q^2 Fbar_{n-2}.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    DegenerateError,
    PreconditionError,
    UndefinedValuationError,
    VerificationError,
)

DEFAULT_HORIZON = 120


class QrsSeq:
    """QRS(a, b) with initial terms F0, F1; terms are memoized (thread-safe)."""

    def __init__(self, a, F0, F1, b=1):
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.F0 = Fraction(F0)
        self.F1 = Fraction(F1)
        self._terms = [self.F0, self.F1]
        self._lock = threading.Lock()

    @property
    def p(self) -> int:
        return self.a.numerator

    @property
    def q(self) -> int:
        return self.a.denominator

    @property
    def M(self) -> int:
        """Least positive integer clearing the denominators of F0 and F1."""
        return math.lcm(self.F0.denominator, self.F1.denominator)

    def term(self, n: int) -> Fraction:
        if n < 0:
            raise PreconditionError("index must be non-negative")
        if n >= len(self._terms):
            with self._lock:
                t = self._terms
                while len(t) <= n:
                    t.append(self.a * t[-1] - self.b * t[-2])
        return self._terms[n]

    def terms(self, n: int) -> list[Fraction]:
        """F_0, ..., F_n."""
        self.term(n)
        return self._terms[: n + 1]

    def scaled(self, n: int) -> int:
        """Fbar_n = M q^n F_n, an integer when b = 1."""
        if self.b != 1:
            raise PreconditionError("integer rescaling needs b = 1")
        x = self.M * self.q**n * self.term(n)
        assert x.denominator == 1
        return x.numerator

    def __repr__(self) -> str:
        return f"QrsSeq(a={self.a}, b={self.b}, F0={self.F0}, F1={self.F1})"


def term(seq: QrsSeq, n: int) -> Fraction:
    return seq.term(n)


@dataclass(frozen=True)
class ReducedTerm:
    n: int
    f: int
    f_den: int


def reduced(seq: QrsSeq, n: int) -> ReducedTerm:
    """Reduced numerator/denominator of F_n; (0, 1) for a zero term."""
    x = seq.term(n)
    return ReducedTerm(n, x.numerator, x.denominator)


def closed_form_params(seq: QrsSeq, check_upto: int = 30) -> tuple[float, float, float, float]:
    """(lam, alpha, beta, residual) with F_n = alpha lam^n + beta lam^-n, for b = 1 and a > 2.

    ``residual`` is max |F_n - (alpha lam^n + beta lam^-n)| over n <= check_upto.
    """
    if seq.b != 1:
        raise PreconditionError("closed form implemented for b = 1")
    if seq.a <= 2:
        raise PreconditionError("closed form needs a > 2 (distinct real roots)")
    a = float(seq.a)
    lam = (a + math.sqrt(a * a - 4)) / 2
    # F0 = alpha + beta, F1 = alpha lam + beta / lam
    F0, F1 = float(seq.F0), float(seq.F1)
    alpha = (F1 - F0 / lam) / (lam - 1 / lam)
    beta = F0 - alpha
    residual = max(abs(float(seq.term(n)) - (alpha * lam**n + beta * lam**-n))
                   for n in range(check_upto + 1))
    return lam, alpha, beta, residual


def valuation(n: int, r: int) -> int:
    if n == 0:
        raise UndefinedValuationError("valuation of 0")
    n = abs(n)
    v = 0
    while n % r == 0:
        n //= r
        v += 1
    return v


def _is_prime(r: int) -> bool:
    return r >= 2 and all(r % k for k in range(2, math.isqrt(r) + 1))


def scaled_valuation(seq: QrsSeq, r: int, n: int) -> int:
    """r-adic valuation of Fbar_n = M q^n F_n, for a prime r dividing q."""
    if not _is_prime(r) or seq.q % r:
        raise PreconditionError(f"r = {r} must be a prime dividing q = {seq.q}")
    x = seq.scaled(n)
    if x == 0:
        raise UndefinedValuationError(f"Fbar_{n} = 0")
    return valuation(x, r)


def _half_plateau(values: list, n_max: int) -> tuple:
    """(max over n <= n_max//2, max over all); values indexed by n."""
    first = [v for n, v in values if n <= n_max // 2]
    allv = [v for _, v in values]
    return (max(first) if first else None), (max(allv) if allv else None)


@dataclass
class BoundednessReport:
    a: Fraction
    F0: Fraction
    F1: Fraction
    horizon: int
    den_ratios: list = field(repr=False)      # (n, f'_n / q^n)
    num_ratios: list = field(repr=False)      # (n, f_n / (q^n F_n))
    skipped: list                             # indices with F_n = 0
    window: float                             # B with all ratios in [1/B, B]
    first_half_window: float
    second_half_window: float
    plateau: bool
    valuation_trace: dict

    def to_json(self) -> dict:
        return {
            "a": str(self.a), "F0": str(self.F0), "F1": str(self.F1), "horizon": self.horizon,
            "denominator_window": [1 / self.window, self.window],
            "first_half_window": self.first_half_window,
            "second_half_window": self.second_half_window,
            "plateau": self.plateau,
            "skipped_zero_terms": self.skipped,
            "valuation_trace": {str(r): v for r, v in self.valuation_trace.items()},
        }


def _spread(x: Fraction) -> Fraction:
    """max(x, 1/x) for x > 0; the smallest B with x in [1/B, B]."""
    x = abs(x)
    return max(x, 1 / x)


def _prime_factors(n: int) -> list[int]:
    out = []
    k = 2
    while k * k <= n:
        if n % k == 0:
            out.append(k)
            while n % k == 0:
                n //= k
        k += 1
    if n > 1:
        out.append(n)
    return out


def verify_boundedness(seq: QrsSeq, N: int = DEFAULT_HORIZON) -> BoundednessReport:
    """Check that f'_n / q^n and f_n / (q^n F_n) stay in a fixed window up to ``N``.

    The window half-width B is the empirical max of max(x, 1/x); the plateau
    verdict requires the max over n <= N/2 to equal the max over n <= N.
    """
    if seq.b != 1:
        raise PreconditionError("boundedness lemma is stated for b = 1")
    if N < 10:
        raise PreconditionError("horizon must be at least 10")
    if seq.F0 == 0 and seq.F1 == 0:
        raise PreconditionError("sequence is identically zero")
    q = seq.q
    den, num, skipped = [], [], []
    for n in range(N + 1):
        x = seq.term(n)
        if x == 0:
            skipped.append(n)
            continue
        qn = q**n
        den.append((n, Fraction(x.denominator, qn)))
        num.append((n, Fraction(x.numerator) / (qn * x)))
    spreads = [(n, max(_spread(d), _spread(u))) for (n, d), (_, u) in zip(den, num)]
    first, full = _half_plateau(spreads, N)
    second = max((v for n, v in spreads if n > N // 2), default=None)
    vtrace = {}
    for r in _prime_factors(q):
        vtrace[r] = [valuation(seq.scaled(n), r) if seq.term(n) != 0 else None
                     for n in range(N + 1)]
    return BoundednessReport(seq.a, seq.F0, seq.F1, N, den, num, skipped,
                             float(full), float(first), float(second), first == full, vtrace)


@dataclass(frozen=True)
class GcdReport:
    horizon: int
    gcds: tuple
    max_gcd: int
    max_gcd_half: int
    plateau: bool


def verify_gcd_bounded(F: QrsSeq, G: QrsSeq, N: int = DEFAULT_HORIZON) -> GcdReport:
    """max over n <= N of gcd(f_n, g_n), the reduced numerators of F_n and G_n."""
    if F.a != G.a or F.b != 1 or G.b != 1:
        raise PreconditionError("F and G must share a and have b = 1")
    if F.F0 * G.F1 - F.F1 * G.F0 == 0:
        raise PreconditionError("initial determinant F0 G1 - F1 G0 vanishes")
    gcds = tuple(math.gcd(F.term(n).numerator, G.term(n).numerator) for n in range(N + 1))
    full = max(gcds)
    half = max(gcds[: N // 2 + 1])
    return GcdReport(N, gcds, full, half, full == half)


@dataclass(frozen=True)
class PowerMatrixReport:
    p: int
    q: int
    horizon: int
    identity_holds: bool
    det_divisibility_holds: bool
    p_power_divisibility: tuple  # per n, whether gcd also divides p^n * det0


def power_matrix_check(Fbar0: tuple[int, int], H0: tuple[int, int], p: int, q: int,
                       N: int = 30) -> PowerMatrixReport:
    """Check A_n = C^n A_0 for the stacked integer QRS(p, q^2) columns.

    A_n = [[Fbar_n, H_n], [Fbar_{n+1}, H_{n+1}]] and C = [[0, 1], [-q^2, p]].
    Taking determinants, gcd(Fbar_n, Fbar_{n+1}) divides q^(2n) det A_0.
    """
    det0 = Fbar0[0] * H0[1] - Fbar0[1] * H0[0]
    if det0 == 0:
        raise PreconditionError("initial determinant vanishes")
    q2 = q * q
    F = list(Fbar0)
    H = list(H0)
    for _ in range(N + 1):
        F.append(p * F[-1] - q2 * F[-2])
        H.append(p * H[-1] - q2 * H[-2])
    Cn = ((1, 0), (0, 1))
    A0 = ((F[0], H[0]), (F[1], H[1]))
    identity_ok = True
    det_ok = True
    p_pow = []
    for n in range(N + 1):
        An = ((F[n], H[n]), (F[n + 1], H[n + 1]))
        prod = tuple(tuple(sum(Cn[i][k] * A0[k][j] for k in range(2)) for j in range(2))
                     for i in range(2))
        identity_ok &= prod == An
        g = math.gcd(F[n], F[n + 1])
        det_ok &= g != 0 and (q2**n * det0) % g == 0
        p_pow.append(g != 0 and (p**n * det0) % g == 0)
        Cn = ((Cn[1][0], Cn[1][1]),
              (-q2 * Cn[0][0] + p * Cn[1][0], -q2 * Cn[0][1] + p * Cn[1][1]))
    return PowerMatrixReport(p, q, N, identity_ok, det_ok, tuple(p_pow))


@dataclass(frozen=True)
class AffineDecomp:
    """l*a_n + b_n = K (l S + T) / L for every integer l."""

    n: int
    K: int
    S: int
    T: int
    L: int

    def value(self, l: int) -> Fraction:
        return Fraction(self.K * (l * self.S + self.T), self.L)


def decompose(a_n, b_n, n: int = 0) -> AffineDecomp:
    """Exact (K, S, T, L) with gcd(S, T) = 1, L = lcm of the reduced denominators."""
    a_n = Fraction(a_n)
    b_n = Fraction(b_n)
    if a_n == 0:
        raise DegenerateError(f"a_{n} = 0: decomposition with S = 0 is not allowed")
    A, A_ = a_n.numerator, a_n.denominator
    B, B_ = b_n.numerator, b_n.denominator
    g = math.gcd(A_, B_)
    L = A_ * B_ // g
    u = A * (B_ // g)
    v = B * (A_ // g)
    K = math.gcd(u, v)
    S, T = u // K, v // K
    out = AffineDecomp(n, K, S, T, L)
    for l in range(-3, 4):
        if out.value(l) != l * a_n + b_n:
            raise VerificationError(f"decomposition identity fails at l = {l}")
    return out


@dataclass(frozen=True)
class AffineDecompReport:
    decomps: tuple
    max_K: int
    K_plateau: bool
    S_ratio_window: tuple  # min/max of S_n / A_n
    L_ratio_window: tuple  # min/max of L_n / q^n


def affine_decompose(a_seq: QrsSeq, b_seq: QrsSeq, n: int) -> AffineDecomp:
    """Decomposition of l*a_n + b_n for the n-th terms of two sequences."""
    return decompose(a_seq.term(n), b_seq.term(n), n)


def affine_decompose_range(a_seq: QrsSeq, b_seq: QrsSeq, horizon: int) -> AffineDecompReport:
    """Decompositions for n <= horizon (skipping a_n = 0) with boundedness diagnostics."""
    ds = []
    for n in range(horizon + 1):
        if a_seq.term(n) == 0:
            continue
        ds.append(affine_decompose(a_seq, b_seq, n))
    q = a_seq.q
    ks = [d.K for d in ds]
    half = [d.K for d in ds if d.n <= horizon // 2]
    s_ratios = [Fraction(abs(d.S), abs(a_seq.term(d.n).numerator)) for d in ds]
    l_ratios = [Fraction(d.L, q**d.n) for d in ds]
    return AffineDecompReport(
        tuple(ds), max(ks), bool(half) and max(half) == max(ks),
        (float(min(s_ratios)), float(max(s_ratios))),
        (float(min(l_ratios)), float(max(l_ratios))),
    )
