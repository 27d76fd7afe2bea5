from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from conftest import Q, S, T, m
from tracegrowth.arithmeticity import (FAIL, PASS, ScaledMat, check_class_homomorphism,
                                       is_algebraic_integer, normalize_cusped,
                                       square_rationality_check, squarefree_class,
                                       structure_check, takeuchi_report, to_scaled)
from tracegrowth.errors import DegenerateError, PreconditionError
from tracegrowth.field import Field, QuadElem, squarefree_part
from tracegrowth.matgroup import ExactMat2, GroupSpec, enumerate_ball

K2 = Field("quadratic", 2)
r2 = QuadElem(0, 1, 2)


def sqf_oracle(n: int) -> int:
    return math.prod(p for p, e in sympy.factorint(n).items() if e % 2)


# --- cusp normalization ----------------------------------------------------------------------


def test_canonical_input_unchanged():
    P, Qm = m(1, 1, 0, 1), m(1, 0, 3, 1)
    out = normalize_cusped(GroupSpec(Q, (P, Qm)), P, Qm)
    assert out.N == 3 and out.spec.generators == (P, Qm)


def test_rescaling_example():
    P, Qm = m(1, 2, 0, 1), m(1, 0, 6, 1)
    out = normalize_cusped(GroupSpec(Q, (P, Qm)), P, Qm)
    assert out.N == 12
    assert out.spec.generators == (m(1, 1, 0, 1), m(1, 0, 12, 1))


def test_elliptic_and_coincident_rejected():
    with pytest.raises(PreconditionError):
        normalize_cusped(GroupSpec(Q, (S,)), S, m(1, 0, 1, 1))
    with pytest.raises(PreconditionError):
        normalize_cusped(GroupSpec(Q, (T,)), T, m(1, 5, 0, 1))


@given(st.integers(-4, 4), st.integers(-4, 4), st.integers(1, 6), st.integers(1, 6))
def test_conjugated_cusps_recovered(x, y, w1, w2):
    # conjugate a canonical pair by g = [[1, x], [y, 1 + x y]] and recover N = w1 * w2
    g = m(1, x, y, 1 + x * y)
    P0, Q0 = m(1, w1, 0, 1), m(1, 0, w2, 1)
    P, Qm = g @ P0 @ g.inverse(), g @ Q0 @ g.inverse()
    extra = g @ m(2, 1, 1, 1) @ g.inverse()
    spec = GroupSpec(Q, (P, Qm, extra))
    out = normalize_cusped(spec, P, Qm)
    assert out.N == w1 * w2
    a, b = out.spec.generators[:2]
    assert a.b in (1, -1) and a.c == 0 and b.b == 0 and abs(b.c) == w1 * w2
    for h, h2 in zip(spec.generators, out.spec.generators):
        assert h.trace() == h2.trace()


# --- Takeuchi conditions ----------------------------------------------------------------------


def test_takeuchi_examples(sl2z):
    rep = takeuchi_report([0, 1, 2, 3], Q)
    assert (rep.condition1, rep.condition2) == (PASS, "vacuous")
    assert takeuchi_report([Fraction(3, 2)], Q).condition1 == FAIL
    rep = takeuchi_report([r2, 2 + r2], K2)
    assert rep.condition1 == PASS
    assert rep.conjugate_sup == pytest.approx(math.sqrt(2))
    assert rep.condition2.startswith("consistent(")


def test_takeuchi_sl2z_ball(sl2z):
    traces = list(enumerate_ball(sl2z, 9).traces())
    assert takeuchi_report(traces, Q).condition1 == PASS


def test_algebraic_integer_half_integers():
    # (1 + sqrt 5)/2 is integral, (1 + sqrt 2)/2 is not
    assert is_algebraic_integer(QuadElem(Fraction(1, 2), Fraction(1, 2), 5))
    assert not is_algebraic_integer(QuadElem(Fraction(1, 2), Fraction(1, 2), 2))


def test_takeuchi_float_field_rejected():
    with pytest.raises(PreconditionError):
        takeuchi_report([1.0], Field("float"))


# --- square rationality and square-free classes -------------------------------------------


def test_square_rationality_examples():
    (c,) = square_rationality_check([ExactMat2(r2, 0, 0, 1 / r2)])
    assert c.ok and c.scalar_sq == 2
    (c,) = square_rationality_check([m(2, 1, 1, 1)])
    assert c.ok and c.scalar_sq in (1, 4)
    u = 1 + r2
    (c,) = square_rationality_check([ExactMat2(u, 0, 0, 1 / u)])
    assert not c.ok and c.scalar is None


def test_rank_one_claim():
    # every entry a rational multiple of sqrt 2: one-dimensional span
    (c,) = square_rationality_check([ExactMat2(r2, r2 / 2, 0, 1 / r2)], beta2=Fraction(2))
    assert c.rank_one is True
    # entries mix 1 and sqrt 2: two-dimensional span
    (c,) = square_rationality_check([ExactMat2(r2, 1, 0, 1 / r2)], beta2=Fraction(2))
    assert c.rank_one is False and not c.ok
    (c,) = square_rationality_check([m(1, 1, 0, 1)], beta2=Fraction(3))
    assert c.rank_one is True


def test_squarefree_examples():
    A = ExactMat2(r2, 0, 0, 1 / r2)
    s = to_scaled(A)
    assert squarefree_class(A) == 2 and s.B.det() == Fraction(1, 2)
    assert squarefree_class(m(2, 1, 1, 1)) == 1
    r3 = QuadElem(0, 1, 3)
    B = to_scaled(ExactMat2(r3, 0, 0, 1 / r3))
    assert squarefree_class(s @ B) == 6
    assert check_class_homomorphism(s, B)
    with pytest.raises(DegenerateError):
        to_scaled(ExactMat2(1 + r2, 0, 0, 1 / (1 + r2)))


def random_scaled(rng: random.Random, D: int) -> ScaledMat:
    """sqrt(D) * diag(1, 1/D) * M with M in SL(2, Q) random."""
    M = ExactMat2.identity()
    for _ in range(4):
        t = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
        M = M @ (m(1, t, 0, 1) if rng.random() < 0.5 else m(1, 0, t, 1))
    return ScaledMat(D, m(1, 0, 0, Fraction(1, D)) @ M)


@given(st.sampled_from([1, 2, 3, 5, 6, 7, 10, 11, 14, 15]),
       st.sampled_from([1, 2, 3, 5, 6, 7, 10, 11, 14, 15]), st.integers(0, 10**6))
def test_class_is_multiplicative(D1, D2, seed):
    rng = random.Random(seed)
    A, B = random_scaled(rng, D1), random_scaled(rng, D2)
    assert A.det() == 1 and B.det() == 1
    P = A @ B
    assert P.det() == 1
    assert squarefree_class(P) == sqf_oracle(D1 * D2) == squarefree_part(D1 * D2)
    assert squarefree_class(A.inverse()) == D1
    # second route: realize the product inside Q(sqrt D) and decompose from scratch
    if P.D > 1:
        assert squarefree_class(P.to_quadratic()) == P.D


# --- structure lemma ---------------------------------------------------------------------------


def test_structure_examples(sl2z):
    assert structure_check(enumerate_ball(sl2z, 6), 1).ok
    assert structure_check([m(Fraction(1, 2), 1, 1, 2)], 2).ok
    v = structure_check([m(Fraction(1, 3), 1, 1, 2)], 2)
    assert not v.ok and v.violator == m(Fraction(1, 3), 1, 1, 2)
    with pytest.raises(PreconditionError):
        structure_check([], 0)


def test_integer_traces_imply_structure_on_canonical_spec():
    spec = GroupSpec(Q, (m(1, 1, 0, 1), m(1, 0, 5, 1)), Fraction(5))
    ball = enumerate_ball(spec, 7)
    assert all(Fraction(t).denominator == 1 for t in ball.traces())
    assert structure_check(ball, 5).ok
