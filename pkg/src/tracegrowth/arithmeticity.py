"""Trace-side arithmeticity diagnostics for groups with exact entries.

These are checkers, not provers: finite samples can refute integrality, but
boundedness under Galois conjugation is only ever reported as "consistent
with bound B".
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DegenerateError, PreconditionError
from .field import Field, QuadElem, squarefree_part
from .matgroup import ExactMat2, GroupSpec, normalize_projective

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


def _is_parabolic(m: ExactMat2) -> bool:
    t = m.trace()
    return (t == 2 or t == -2) and not (m.b == 0 and m.c == 0)


def _fixed_point(m: ExactMat2):
    """Boundary fixed point of a parabolic; None stands for infinity."""
    if m.c == 0:
        return None
    return (m.a - m.d) / (2 * m.c)


def _conjugate(g: ExactMat2, m: ExactMat2) -> ExactMat2:
    return g @ m @ g.inverse()


@dataclass(frozen=True)
class CuspNormalization:
    spec: GroupSpec
    conjugator: ExactMat2
    N: object
    inverted: tuple  # which of the two parabolics was replaced by its inverse


def normalize_cusped(spec: GroupSpec, p_inf: ExactMat2, p_zero: ExactMat2,
                     check_words: int = 4) -> CuspNormalization:
    """Conjugate so that ``p_inf`` becomes [[1,1],[0,1]] and ``p_zero`` [[1,0],[N,1]].

    The conjugator sends the fixed point of ``p_inf`` to infinity and that of
    ``p_zero`` to 0, then rescales by a diagonal matrix.  A parabolic may be
    replaced by its inverse (same cyclic subgroup) to make the translation
    lengths positive.  Traces of generators and of all words of length up to
    ``check_words`` are verified unchanged.
    """
    if not spec.field.exact:
        raise PreconditionError("cusp normalization needs exact entries")
    for m in (p_inf, p_zero):
        if not _is_parabolic(m):
            raise PreconditionError(f"{m} is not parabolic (|trace| != 2)")
    x1, x2 = _fixed_point(p_inf), _fixed_point(p_zero)
    if x1 == x2 or (x1 is None and x2 is None):
        raise PreconditionError("parabolics share a fixed point")
    one, zero = Fraction(1), Fraction(0)
    if x1 is None:
        g = ExactMat2(one, -x2, zero, one)
    elif x2 is None:
        g = ExactMat2(zero, one, -one, x1)
    else:
        g = ExactMat2(one, -x2, one, -x1)
        if g.det() < 0:
            g = ExactMat2(one, -x2, -one, x1)
    P = normalize_projective(_conjugate(g, p_inf))
    Q = normalize_projective(_conjugate(g, p_zero))
    inverted = [False, False]
    t = P.b
    if t < 0:
        t, inverted[0] = -t, True
    s = Q.c
    if s * t < 0:
        s, inverted[1] = -s, True
    # diag(lam, 1/lam) with lam^2 = 1/t maps [[1,t],[0,1]] to [[1,1],[0,1]]
    def rescale(m: ExactMat2) -> ExactMat2:
        return ExactMat2(m.a, m.b / t, m.c * t, m.d)

    conj = ExactMat2(g.a / t, g.b / t, g.c, g.d)  # represents diag(1/t, 1) g projectively
    gens = tuple(rescale(_conjugate(g, h)) for h in spec.generators)
    N = s * t
    for h, h2 in zip(spec.generators, gens):
        if h.trace() != h2.trace():
            raise AssertionError("conjugation changed a trace")
    _check_word_traces(spec.generators, gens, check_words)
    out = GroupSpec(spec.field, gens, N)
    return CuspNormalization(out, conj, N, tuple(inverted))


def _check_word_traces(old, new, length: int) -> None:
    letters = [(a, b) for a, b in zip(old, new)]
    letters += [(a.inverse(), b.inverse()) for a, b in zip(old, new)]
    frontier = [(ExactMat2.identity(), ExactMat2.identity())]
    for _ in range(length):
        nxt = []
        for x, y in frontier:
            for a, b in letters:
                u, v = x @ a, y @ b
                if u.trace() != v.trace():
                    raise AssertionError("conjugation changed a word trace")
                nxt.append((u, v))
        frontier = nxt


# ---------------------------------------------------------------------------
# Takeuchi conditions


def is_algebraic_integer(t, d: int | None = None) -> bool:
    """Integrality in Q or Q(sqrt d): trace 2u and norm u^2 - d v^2 must be integers."""
    if isinstance(t, QuadElem):
        return t.trace().denominator == 1 and t.norm().denominator == 1
    t = Fraction(t)
    return t.denominator == 1


@dataclass
class TakeuchiReport:
    field: Field
    integrality: list = field(repr=False)  # (trace, verdict)
    conjugate_sup: float | None
    condition1: str
    condition2: str
    first_nonintegral: object = None

    def to_json(self) -> dict:
        return {
            "field": self.field.to_json(),
            "n_traces": len(self.integrality),
            "condition1": self.condition1,
            "condition2": self.condition2,
            "conjugate_sup": self.conjugate_sup,
            "first_nonintegral": None if self.first_nonintegral is None
            else str(self.first_nonintegral),
        }


def takeuchi_report(traces, K: Field) -> TakeuchiReport:
    """Check the two trace conditions on a finite sample.

    Condition (1): every trace is an algebraic integer of K.  Condition (2):
    for the nontrivial embedding sqrt d -> -sqrt d, report sup |conjugate|;
    a finite sample gives at best ``consistent(bound=B)``, and over Q the
    condition is vacuous.
    """
    if K.kind == "float":
        raise PreconditionError("Takeuchi diagnostics need an exact field")
    traces = [K.elem(t) for t in traces]
    integ = [(t, is_algebraic_integer(t)) for t in traces]
    if not traces:
        return TakeuchiReport(K, integ, None, INCONCLUSIVE, INCONCLUSIVE)
    bad = next((t for t, ok in integ if not ok), None)
    cond1 = PASS if bad is None else FAIL
    if K.kind == "rational":
        return TakeuchiReport(K, integ, None, cond1, "vacuous", bad)
    sup = max(abs(float(t.conj())) for t in traces)
    return TakeuchiReport(K, integ, sup, cond1, f"consistent(bound={sup:.12g})", bad)


# ---------------------------------------------------------------------------
# scalar decompositions A = c A' with A' rational


@dataclass(frozen=True)
class ScaledMat:
    """sqrt(D) * B with B rational, D square-free; det B = 1/D for an SL(2) element."""

    D: int
    B: ExactMat2

    def __matmul__(self, o: ScaledMat) -> ScaledMat:
        prod = self.D * o.D
        D = squarefree_part(prod)
        s = Fraction(math.isqrt(prod // D))
        return ScaledMat(D, (self.B @ o.B).scale(s))

    def inverse(self) -> ScaledMat:
        # (sqrt D B)^-1 = sqrt D adj(B) when det(sqrt D B) = 1
        b = self.B
        return ScaledMat(self.D, ExactMat2(b.d, -b.b, -b.c, b.a))

    def det(self) -> Fraction:
        return self.D * self.B.det()

    def to_quadratic(self) -> ExactMat2:
        if self.D == 1:
            return self.B
        r = QuadElem(0, 1, self.D)
        return self.B.scale(r)


def _entries_as_quad(m: ExactMat2) -> list[QuadElem]:
    ds = {x.d for x in m.entries() if isinstance(x, QuadElem)}
    if len(ds) > 1:
        raise PreconditionError("entries from different quadratic fields")
    d = ds.pop() if ds else None
    if d is None:
        return [Fraction(x) for x in m.entries()]
    return [x if isinstance(x, QuadElem) else QuadElem(x, 0, d) for x in m.entries()]


def scalar_decomposition(m: ExactMat2):
    """(c, A') with m = c A', A' rational; None if no such scalar exists."""
    ents = _entries_as_quad(m)
    pivot = next(x for x in ents if x != 0)
    ratios = [x / pivot for x in ents]
    rat = []
    for r in ratios:
        if isinstance(r, QuadElem):
            if r.v != 0:
                return None
            r = r.u
        rat.append(Fraction(r))
    return pivot, ExactMat2(*rat)


def _rational_or_none(x):
    if isinstance(x, QuadElem):
        return x.u if x.v == 0 else None
    return Fraction(x)


@dataclass(frozen=True)
class SquareCheck:
    matrix: ExactMat2
    scalar: object
    scalar_sq: Fraction | None
    square_rational: bool
    rank_one: bool | None
    ok: bool


def square_rationality_check(mats, beta2=None) -> list[SquareCheck]:
    """For each A: scalar c with A = c A' (A' rational), c^2 in Q, and A^2 rational.

    With ``beta2`` the rational span of (beta2 a, beta2 b, c, beta2 d) must be
    one-dimensional.  Matrices with no scalar decomposition are reported with
    ``ok=False`` as counterexample candidates.
    """
    out = []
    for m in mats:
        dec = scalar_decomposition(m)
        sq = normalize_projective(m @ m)
        sq_rat = all(_rational_or_none(x) is not None for x in sq.entries())
        rank_one = None
        if beta2 is not None:
            vec = [beta2 * m.a, beta2 * m.b, m.c, beta2 * m.d]
            rank_one = scalar_decomposition(ExactMat2(*vec)) is not None
        if dec is None:
            out.append(SquareCheck(m, None, None, sq_rat, rank_one, False))
            continue
        c, _ = dec
        c2 = _rational_or_none(c * c)
        ok = c2 is not None and sq_rat and rank_one is not False
        out.append(SquareCheck(m, c, c2, sq_rat, rank_one, ok))
    return out


def to_scaled(m: ExactMat2) -> ScaledMat:
    """Write m = sqrt(D_A) B' with B' rational and D_A square-free."""
    dec = scalar_decomposition(m)
    if dec is None:
        raise DegenerateError(f"{m} has no scalar decomposition")
    c, A1 = dec
    c2 = _rational_or_none(c * c)
    if c2 is None:
        raise DegenerateError(f"scalar {c} has irrational square")
    D = squarefree_part(c2)
    # c = sqrt(D) * s with s rational
    if isinstance(c, QuadElem) and c.v != 0:
        if c.d != D:
            raise DegenerateError("scalar field mismatch")
        s = c.v
    else:
        s = Fraction(c.u if isinstance(c, QuadElem) else c)
    return ScaledMat(D, A1.scale(s))


def squarefree_class(m) -> int:
    """Square-free D_A with A = sqrt(D_A) B', B' rational (1 for rational A)."""
    if isinstance(m, ScaledMat):
        return m.D
    return to_scaled(m).D


def check_class_homomorphism(A: ScaledMat, B: ScaledMat) -> bool:
    """class(AB) = squarefree(D_A D_B) and class(A^-1) = class(A)."""
    return (squarefree_class(A @ B) == squarefree_part(A.D * B.D)
            and squarefree_class(A.inverse()) == A.D)


# ---------------------------------------------------------------------------
# structure lemma


@dataclass(frozen=True)
class StructureVerdict:
    ok: bool
    N: int
    checked: int
    violator: ExactMat2 | None = None
    reason: str = ""


def structure_check(mats, N: int) -> StructureVerdict:
    """Every matrix must satisfy N a, N b, N d in Z and c in Z."""
    if not (isinstance(N, int) or (isinstance(N, Fraction) and N.denominator == 1)) or N < 1:
        raise PreconditionError(f"N must be a positive integer, got {N}")
    N = int(N)
    count = 0
    for m in mats:
        count += 1
        a, b, c, d = (_rational_or_none(x) for x in m.entries())
        if None in (a, b, c, d):
            raise PreconditionError("structure check needs rational entries")
        if c.denominator != 1:
            return StructureVerdict(False, N, count, m, "c not integral")
        for name, x in (("a", a), ("b", b), ("d", d)):
            if (N * x).denominator != 1:
                return StructureVerdict(False, N, count, m, f"N*{name} not integral")
    return StructureVerdict(True, N, count)
