from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import Q, S, T, m
from tracegrowth.errors import (GapUndefinedError, InsufficientSamplesError,
                                PreconditionError, ResourceLimitError)
from tracegrowth.field import Field, QuadElem
from tracegrowth.matgroup import (ExactMat2, GroupSpec, TraceSet, counting_function,
                                  dn_lower_bound, enumerate_ball, geometric_samples,
                                  growth_classify, normalize_projective, phi_fiber,
                                  theta_family, trace_counts, trace_set, trace_statistics)

# --- independent oracle: naive word enumeration on tuples of Fractions ------------------


def _mul(x, y):
    a, b, c, d = x
    e, f, g, h = y
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def _norm(x):
    lead = next(v for v in x if v != 0)
    return x if lead > 0 else tuple(-v for v in x)


def naive_ball(gens, L):
    letters = []
    for g in gens:
        a, b, c, d = g
        letters += [g, (d, -b, -c, a)]
    one = (Fraction(1), Fraction(0), Fraction(0), Fraction(1))
    words = {one}
    frontier = [one]
    out = {_norm(one)}
    for _ in range(L):
        nxt = []
        for w in frontier:
            for g in letters:
                nxt.append(_mul(w, g))
        frontier = list(set(nxt))
        out.update(_norm(w) for w in frontier)
        words.update(frontier)
    return out


SL2Z_GENS = [tuple(S.entries()), tuple(T.entries())]


# --- normal form and matrices ---------------------------------------------------------------


def test_normalize_examples():
    assert normalize_projective(m(-1, 0, 0, -1)) == m(1, 0, 0, 1)
    assert normalize_projective(m(0, -1, 1, 0)) == m(0, 1, -1, 0)
    assert normalize_projective(m(2, 1, 1, 1)) == m(2, 1, 1, 1)


sl2z_words = st.lists(st.sampled_from([S, T, T.inverse()]), min_size=0, max_size=12)


@given(sl2z_words)
def test_normalize_idempotent_and_sign_blind(word):
    x = ExactMat2.identity()
    for g in word:
        x = x @ g
    assert x.det() == 1
    n = normalize_projective(x)
    assert normalize_projective(n) == n
    assert normalize_projective(-x) == n
    assert x.inverse() @ x == ExactMat2.identity()


def test_group_spec_rejects_bad_det():
    with pytest.raises(PreconditionError):
        GroupSpec(Q, (m(2, 0, 0, 1),))


def test_group_spec_json_roundtrip(sl2z):
    assert GroupSpec.from_json(sl2z.to_json()) == sl2z
    with pytest.raises(PreconditionError):
        GroupSpec.from_json({"generators": [], "extra": 1})


# --- ball enumeration -----------------------------------------------------------------------


def test_ball_small_examples(sl2z):
    ball = enumerate_ball(sl2z, 1)
    assert set(ball) == {m(1, 0, 0, 1), normalize_projective(S), T, T.inverse()}
    assert len(enumerate_ball(sl2z, 0)) == 1
    cyc = enumerate_ball(GroupSpec(Q, (T,)), 3)
    assert set(cyc) == {m(1, k, 0, 1) for k in range(-3, 4)}


@pytest.mark.parametrize("L", [2, 5, 8])
def test_ball_matches_naive_oracle(sl2z, L):
    ball = enumerate_ball(sl2z, L)
    oracle = naive_ball(SL2Z_GENS, L)
    assert {tuple(x.entries()) for x in ball} == oracle


def test_ball_quadratic_matches_naive_oracle():
    K = Field("quadratic", 2)
    r = QuadElem(0, 1, 2)
    A = ExactMat2(1 + r, QuadElem(0, 0, 2), QuadElem(0, 0, 2), r - 1)
    spec = GroupSpec(K, (A, T))
    ball = enumerate_ball(spec, 5)
    oracle = naive_ball([tuple(A.entries()), tuple(K.elem(x) for x in T.entries())], 5)
    assert {tuple(x.entries()) for x in ball} == oracle


def test_ball_float_mode_counts_match_exact(sl2z):
    F = Field("float")
    spec = GroupSpec(F, tuple(ExactMat2(*(float(x) for x in g.entries())) for g in sl2z.generators))
    assert len(enumerate_ball(spec, 7)) == len(enumerate_ball(sl2z, 7))


def test_ball_monotone(sl2z):
    prev = set()
    for L in range(6):
        cur = set(enumerate_ball(sl2z, L))
        assert prev <= cur
        prev = cur


def test_ball_cap(sl2z):
    with pytest.raises(ResourceLimitError):
        enumerate_ball(sl2z, 20, cap=500)


def test_sl2z_traces_are_integers(sl2z):
    for t in enumerate_ball(sl2z, 10).traces():
        assert Fraction(t).denominator == 1


# --- trace sets and counting ------------------------------------------------------------------


def test_sl2z_counting_function_L14(sl2z):
    ts = trace_set(enumerate_ball(sl2z, 14))
    ball = enumerate_ball(sl2z, 14)
    # witness family [[k, -1], [1, 0]] = T^k S (word length |k| + 1) realizes trace k
    for k in range(-13, 14):
        assert normalize_projective(m(k, -1, 1, 0)) in ball
    assert normalize_projective(m(14, -1, 1, 0)) not in ball
    # beyond the family's reach every trace up to 20 is realized by some other word
    abs_traces = {abs(x.trace()) for x in ball}
    assert set(range(21)) <= abs_traces
    assert trace_counts(ts, 5) == 11
    assert [c for _, c in counting_function(ts, range(21))] == [2 * n + 1 for n in range(21)]


def test_identity_trace_set():
    ts = TraceSet.from_values([Fraction(2)])
    assert trace_counts(ts, 2) == 1 and trace_counts(ts, 100) == 1


def test_hyperbolic_cyclic_count():
    # traces +-(2^k + 2^-k); k <= 4 satisfy 2^k + 2^-k <= 17 (2^4 + 1/16 = 16.0625)
    spec = GroupSpec(Q, (m(2, 0, 0, Fraction(1, 2)),))
    ts = trace_set(enumerate_ball(spec, 6))
    assert trace_counts(ts, 17) == 10
    oracle = {s * (Fraction(2) ** k + Fraction(1, 2) ** k) for k in range(7) for s in (1, -1)}
    assert set(ts.values) == oracle


def test_trace_counts_monotone(sl2z):
    ts_small = trace_set(enumerate_ball(sl2z, 6))
    ts_big = trace_set(enumerate_ball(sl2z, 9))
    for n in range(30):
        assert trace_counts(ts_small, n) <= trace_counts(ts_small, n + 1)
        assert trace_counts(ts_small, n) <= trace_counts(ts_big, n)


def test_trace_statistics_examples(sl2z):
    st1 = trace_statistics(TraceSet.from_values([0, 1, 2, 3]))
    assert (st1.gap, st1.max_bc) == (1, 2)
    st2 = trace_statistics(TraceSet.from_values([2, Fraction(5, 2), 4]))
    assert (st2.gap, st2.max_bc) == (Fraction(1, 2), 2)
    ts = trace_set(enumerate_ball(sl2z, 14)).restrict(-20, 20)
    assert trace_statistics(ts).gap == 1
    with pytest.raises(GapUndefinedError):
        trace_statistics(TraceSet.from_values([2]))


def test_statistics_sign_invariant(sl2z):
    ball = enumerate_ball(sl2z, 7)
    ts = trace_set(ball)
    flipped = TraceSet.from_values([-v for v in ts.values])
    a, b = trace_statistics(ts), trace_statistics(flipped)
    assert (a.gap, a.max_bc) == (b.gap, b.max_bc)


# --- growth classification -------------------------------------------------------------------


def test_growth_classes(sl2z):
    ns = geometric_samples(20, 2, 3)  # f(1) = 0 for groups whose traces all have |t| >= 2
    par = trace_set(enumerate_ball(GroupSpec(Q, (T,)), 8))
    hyp = trace_set(enumerate_ball(GroupSpec(Q, (m(2, 0, 0, Fraction(1, 2)),)), 12))
    lin = trace_set(enumerate_ball(sl2z, 14))
    assert growth_classify(counting_function(par, ns)).growth_class == "constant"
    assert growth_classify(counting_function(hyp, ns)).growth_class == "logarithmic"
    assert growth_classify(counting_function(lin, ns)).growth_class == "linear"


def test_growth_superlinear_and_errors():
    ns = geometric_samples(1000, 1, 2)
    assert growth_classify([(n, n * n) for n in ns]).growth_class == "superlinear"
    with pytest.raises(InsufficientSamplesError):
        growth_classify([(1, 1), (2, 2), (3, 3)])


def test_geometric_samples():
    ns = geometric_samples(64, 1, 1)
    assert ns == [1, 2, 4, 8, 16, 32, 64]


# --- Theta / Phi / D_N -----------------------------------------------------------------------


def test_theta_examples():
    fam = theta_family(1, 1, 1, 1, K=[1], L=[2])
    assert fam.points[0].value == 5 and fam.points[0].triple == (2, 1, 2)
    sym = theta_family(K=[2], L=[3], symbolic=True)
    assert sym.points[0].triple == (6, 2, 3)
    ks = [k for k in range(-10, 11) if k]
    sym = theta_family(K=ks, L=ks, symbolic=True)
    assert sym.distinct_size == sym.lattice_size == 400


def test_theta_evaluated_collisions_reported():
    fam = theta_family(1, 1, 1, 1, K=range(-3, 4), L=range(-3, 4))
    assert fam.distinct_size < fam.lattice_size
    for v, pairs in fam.collisions:
        assert all(k * l + k + l == v for k, l in pairs)


def test_phi_examples():
    s = t = 1
    phi = lambda k, l: (s * k * l + k, t * k * l + l)  # noqa: E731
    assert phi(2, 3) == phi(-4, -3) == (8, 9)
    assert phi_fiber(0, 0, 20).max_fiber == 1
    rep = phi_fiber(1, 1, 200)
    assert rep.max_fiber <= 2 and not rep.partner_failures and rep.partner_checked > 0


@given(st.fractions(min_value=-5, max_value=5, max_denominator=4).filter(lambda x: x != 0),
       st.fractions(min_value=-5, max_value=5, max_denominator=4).filter(lambda x: x != 0))
def test_phi_fiber_bound_property(s, t):
    rep = phi_fiber(s, t, 15)
    assert rep.max_fiber <= 2
    assert rep.partner_failures == ()


def test_dn_examples():
    assert dn_lower_bound(1) == (1, -1.0)
    c, b = dn_lower_bound(10)
    assert c == 27 and b == pytest.approx(10 * math.log(10) - 10)
    c, b = dn_lower_bound(1000)
    assert c == sum(sum(1 for d in range(1, k + 1) if k % d == 0) for k in range(1, 1001))
    assert b == pytest.approx(5907.755, abs=1e-3)
