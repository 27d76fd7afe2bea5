"""Exact 2x2 matrix groups: ball enumeration, trace sets and growth statistics.

Matrices are identified up to sign (the PSL(2) quotient).  Ball enumeration
works on packed integer encodings so that deduplication is exact hashing of a
canonical form; :class:`ExactMat2` is the public value type.
"""
from __future__ import annotations

import bisect
import json
import math
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence, Set
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np
from scipy.optimize import nnls

from .errors import (
    GapUndefinedError,
    InsufficientSamplesError,
    PreconditionError,
    ResourceLimitError,
    VerificationError,
)
from .field import Field, FieldElem, QuadElem, format_elem, parse_elem

DEFAULT_ELEMENT_CAP = 10**6
DEFAULT_FLOAT_TOL = 1e-9


def _sign(x) -> int:
    if isinstance(x, QuadElem):
        return x.sign()
    return (x > 0) - (x < 0)


@dataclass(frozen=True)
class ExactMat2:
    """The matrix ``[[a, b], [c, d]]`` with exact (or, in float mode, float) entries."""

    a: FieldElem
    b: FieldElem
    c: FieldElem
    d: FieldElem

    @classmethod
    def of(cls, rows, field: Field | None = None) -> ExactMat2:
        """Build from ``[[a, b], [c, d]]``; entries may be ints, Fractions or strings."""
        field = field or Field()
        (a, b), (c, d) = rows
        return cls(field.elem(a), field.elem(b), field.elem(c), field.elem(d))

    @classmethod
    def identity(cls) -> ExactMat2:
        return cls(Fraction(1), Fraction(0), Fraction(0), Fraction(1))

    def entries(self) -> tuple:
        return (self.a, self.b, self.c, self.d)

    def rows(self) -> list[list]:
        return [[self.a, self.b], [self.c, self.d]]

    def det(self):
        return self.a * self.d - self.b * self.c

    def trace(self):
        return self.a + self.d

    def __matmul__(self, o: ExactMat2) -> ExactMat2:
        return ExactMat2(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                         self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)

    def __neg__(self) -> ExactMat2:
        return ExactMat2(-self.a, -self.b, -self.c, -self.d)

    def scale(self, s) -> ExactMat2:
        return ExactMat2(s * self.a, s * self.b, s * self.c, s * self.d)

    def inverse(self) -> ExactMat2:
        det = self.det()
        if det == 1:
            return ExactMat2(self.d, -self.b, -self.c, self.a)
        return ExactMat2(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def __pow__(self, k: int) -> ExactMat2:
        base = self if k >= 0 else self.inverse()
        k = abs(k)
        out = ExactMat2.identity()
        while k:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return out

    def to_json(self) -> list:
        return [[format_elem(self.a), format_elem(self.b)],
                [format_elem(self.c), format_elem(self.d)]]

    def __str__(self) -> str:
        return "[[{}, {}], [{}, {}]]".format(*map(format_elem, self.entries()))


def normalize_projective(m: ExactMat2) -> ExactMat2:
    """Return ``m`` or ``-m``, whichever has a positive first nonzero entry."""
    for x in m.entries():
        s = _sign(x)
        if s:
            return m if s > 0 else -m
    raise PreconditionError("zero matrix has no projective normal form")


@dataclass(frozen=True)
class GroupSpec:
    """Generators of a subgroup of SL(2) over ``field``; ``N`` is the cusp width beta^2."""

    field: Field
    generators: tuple[ExactMat2, ...]
    N: FieldElem | None = None

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        for g in self.generators:
            det = g.det()
            if self.field.exact:
                if det != 1:
                    raise PreconditionError(f"generator {g} has determinant {det}, not 1")
            elif abs(det - 1) > 1e-9:
                raise PreconditionError(f"generator {g} has determinant {det}, not 1")

    @classmethod
    def from_json(cls, obj: dict | str) -> GroupSpec:
        if isinstance(obj, str):
            obj = json.loads(obj)
        unknown = set(obj) - {"field", "generators", "N"}
        if unknown:
            raise PreconditionError(f"unknown group spec keys: {sorted(unknown)}")
        field = Field.from_json(obj.get("field", {"kind": "rational"}))
        gens = []
        for rows in obj["generators"]:
            (a, b), (c, d) = rows
            gens.append(ExactMat2(*(parse_elem(str(x), field) for x in (a, b, c, d))))
        N = obj.get("N")
        if N is not None:
            N = parse_elem(str(N), field)
        return cls(field, tuple(gens), N)

    def to_json(self) -> dict:
        out = {"field": self.field.to_json(), "generators": [g.to_json() for g in self.generators]}
        if self.N is not None:
            out["N"] = format_elem(self.N)
        return out


# ---------------------------------------------------------------------------
# packed kernels: canonical hashable encodings with fast multiplication


class _RationalKernel:
    """Matrix (1/q)[[A, B], [C, D]] packed as (q, A, B, C, D), gcd-reduced, sign-normalized."""

    exact = True

    def pack(self, m: ExactMat2) -> tuple:
        ents = [Fraction(x) for x in m.entries()]
        q = math.lcm(*(x.denominator for x in ents))
        return self._canon((q, *(int(x * q) for x in ents)))

    @staticmethod
    def _canon(t: tuple) -> tuple:
        q, A, B, C, D = t
        g = math.gcd(q, A, B, C, D)
        if g != 1:
            q, A, B, C, D = q // g, A // g, B // g, C // g, D // g
        first = A or B or C or D
        if first < 0:
            A, B, C, D = -A, -B, -C, -D
        return (q, A, B, C, D)

    def mul(self, x: tuple, y: tuple) -> tuple:
        q1, a1, b1, c1, d1 = x
        q2, a2, b2, c2, d2 = y
        return self._canon((q1 * q2, a1 * a2 + b1 * c2, a1 * b2 + b1 * d2,
                            c1 * a2 + d1 * c2, c1 * b2 + d1 * d2))

    def unpack(self, t: tuple) -> ExactMat2:
        q = t[0]
        return ExactMat2(*(Fraction(x, q) for x in t[1:]))

    def trace(self, t: tuple) -> Fraction:
        return Fraction(t[1] + t[4], t[0])

    def key(self, t: tuple) -> tuple:
        return t


class _QuadraticKernel:
    """Entries (u + v r)/q with r = sqrt(D), packed as (q, Au, Av, Bu, Bv, Cu, Cv, Du, Dv)."""

    exact = True

    def __init__(self, d: int):
        self.d = d

    def pack(self, m: ExactMat2) -> tuple:
        parts = []
        for x in m.entries():
            x = x if isinstance(x, QuadElem) else QuadElem(x, 0, self.d)
            parts += [x.u, x.v]
        q = math.lcm(*(p.denominator for p in parts))
        return self._canon((q, *(int(p * q) for p in parts)))

    def _canon(self, t: tuple) -> tuple:
        g = math.gcd(*t)
        if g != 1:
            t = tuple(x // g for x in t)
        for i in (1, 3, 5, 7):
            s = _sign(QuadElem(t[i], t[i + 1], self.d)) if t[i + 1] else (t[i] > 0) - (t[i] < 0)
            if s:
                if s < 0:
                    t = (t[0], *(-x for x in t[1:]))
                break
        return t

    def mul(self, x: tuple, y: tuple) -> tuple:
        D = self.d
        q1, au, av, bu, bv, cu, cv, du, dv = x
        q2, eu, ev, fu, fv, gu, gv, hu, hv = y

        def m(xu, xv, yu, yv):
            return xu * yu + D * xv * yv, xu * yv + xv * yu

        p1 = m(au, av, eu, ev); p2 = m(bu, bv, gu, gv)
        p3 = m(au, av, fu, fv); p4 = m(bu, bv, hu, hv)
        p5 = m(cu, cv, eu, ev); p6 = m(du, dv, gu, gv)
        p7 = m(cu, cv, fu, fv); p8 = m(du, dv, hu, hv)
        return self._canon((q1 * q2, p1[0] + p2[0], p1[1] + p2[1], p3[0] + p4[0], p3[1] + p4[1],
                            p5[0] + p6[0], p5[1] + p6[1], p7[0] + p8[0], p7[1] + p8[1]))

    def unpack(self, t: tuple) -> ExactMat2:
        q = t[0]
        return ExactMat2(*(QuadElem(Fraction(t[i], q), Fraction(t[i + 1], q), self.d)
                           for i in (1, 3, 5, 7)))

    def trace(self, t: tuple) -> QuadElem:
        q = t[0]
        return QuadElem(Fraction(t[1] + t[7], q), Fraction(t[2] + t[8], q), self.d)

    def key(self, t: tuple) -> tuple:
        return t


class _FloatKernel:
    exact = False

    def __init__(self, tol: float):
        self.tol = tol

    def pack(self, m: ExactMat2) -> tuple:
        return self._canon(tuple(float(x) for x in m.entries()))

    def _canon(self, t: tuple) -> tuple:
        for x in t:
            if abs(x) > self.tol:
                return t if x > 0 else tuple(-y for y in t)
        return t

    def mul(self, x: tuple, y: tuple) -> tuple:
        a1, b1, c1, d1 = x
        a2, b2, c2, d2 = y
        return self._canon((a1 * a2 + b1 * c2, a1 * b2 + b1 * d2, c1 * a2 + d1 * c2, c1 * b2 + d1 * d2))

    def unpack(self, t: tuple) -> ExactMat2:
        return ExactMat2(*t)

    def trace(self, t: tuple) -> float:
        return t[0] + t[3]

    def key(self, t: tuple) -> tuple:
        return tuple(round(x / self.tol) for x in t)


def _kernel(field: Field, tol: float):
    if field.kind == "rational":
        return _RationalKernel()
    if field.kind == "quadratic":
        return _QuadraticKernel(field.d)
    return _FloatKernel(tol)


class Ball(Set):
    """Distinct projective group elements of word length at most ``L``.

    Behaves as a read-only set of normalized :class:`ExactMat2`.
    """

    def __init__(self, spec: GroupSpec, L: int, kernel, packed: dict, sphere_sizes: list[int],
                 tolerance: float | None):
        self.spec = spec
        self.L = L
        self._kernel = kernel
        self._packed = packed
        self.sphere_sizes = sphere_sizes
        self.tolerance = tolerance

    def __len__(self) -> int:
        return len(self._packed)

    def __iter__(self) -> Iterator[ExactMat2]:
        for t in self._packed.values():
            yield self._kernel.unpack(t)

    def __contains__(self, m) -> bool:
        if not isinstance(m, ExactMat2):
            return False
        try:
            t = self._kernel.pack(normalize_projective(m))
        except (TypeError, ValueError):
            return False
        return self._kernel.key(t) in self._packed

    def traces(self) -> Iterator:
        """Trace of the normal-form representative of every element."""
        for t in self._packed.values():
            yield self._kernel.trace(t)

    @property
    def mode(self) -> str:
        return "exact" if self._kernel.exact else "float"


def enumerate_ball(spec: GroupSpec, L: int, cap: int = DEFAULT_ELEMENT_CAP,
                   tolerance: float = DEFAULT_FLOAT_TOL) -> Ball:
    """All distinct normalized products of at most ``L`` generators and inverses.

    Raises :class:`ResourceLimitError` once more than ``cap`` distinct elements are found.
    """
    if L < 0:
        raise PreconditionError("word length must be non-negative")
    kernel = _kernel(spec.field, tolerance)
    letters = []
    seen_letters = set()
    for g in spec.generators:
        for h in (g, g.inverse()):
            t = kernel.pack(normalize_projective(h))
            if kernel.key(t) not in seen_letters:
                seen_letters.add(kernel.key(t))
                letters.append(t)
    ident = kernel.pack(ExactMat2.identity())
    packed = {kernel.key(ident): ident}
    frontier = [ident]
    sphere_sizes = [1]
    for _ in range(L):
        nxt = []
        for x in frontier:
            for g in letters:
                y = kernel.mul(x, g)
                k = kernel.key(y)
                if k not in packed:
                    packed[k] = y
                    nxt.append(y)
                    if len(packed) > cap:
                        raise ResourceLimitError(
                            f"ball exceeds {cap} distinct elements (length {L})")
        sphere_sizes.append(len(nxt))
        frontier = nxt
        if not frontier:
            break
    return Ball(spec, L, kernel, packed, sphere_sizes,
                None if kernel.exact else tolerance)


# ---------------------------------------------------------------------------
# trace sets


@dataclass(frozen=True)
class TraceSet:
    """Sorted distinct trace values with multiplicities and enumeration metadata."""

    values: tuple
    multiplicity: tuple
    exact: bool = True
    tolerance: float | None = None
    L: int | None = None
    n_elements: int | None = None

    @classmethod
    def from_values(cls, values: Iterable, exact: bool = True,
                    tolerance: float | None = None, **meta) -> TraceSet:
        """Literal trace set; values are taken as given (no sign closure)."""
        counts = Counter(values)
        vals = sorted(counts)
        return cls(tuple(vals), tuple(counts[v] for v in vals), exact, tolerance, **meta)

    def __len__(self) -> int:
        return len(self.values)

    def abs_values(self) -> list:
        """Distinct absolute values (the sign-free view)."""
        return sorted({abs(v) for v in self.values})

    def restrict(self, lo, hi) -> TraceSet:
        i = bisect.bisect_left(self.values, lo)
        j = bisect.bisect_right(self.values, hi)
        return TraceSet(self.values[i:j], self.multiplicity[i:j], self.exact,
                        self.tolerance, self.L, self.n_elements)

    def meta(self) -> dict:
        return {"L": self.L, "element_count": self.n_elements,
                "mode": "exact" if self.exact else "float", "tolerance": self.tolerance}


def trace_set(ball: Ball, signed: bool = True) -> TraceSet:
    """Trace set of a ball.

    With ``signed`` (default) both +t and -t are stored for each element, the
    traces of both SL(2) preimages.
    """
    counts: Counter = Counter()
    tol = ball.tolerance
    for t in ball.traces():
        if tol is not None:
            t = round(t / tol) * tol
        counts[t] += 1
        if signed:
            counts[-t] += 1
            if t == 0:
                counts[t] -= 1
    vals = sorted(counts)
    return TraceSet(tuple(vals), tuple(counts[v] for v in vals), tol is None, tol,
                    ball.L, len(ball))


def trace_counts(ts: TraceSet, n) -> int:
    """Number of distinct trace values t with |t| <= n."""
    if n < 0:
        return 0
    return bisect.bisect_right(ts.values, n) - bisect.bisect_left(ts.values, -n)


def counting_function(ts: TraceSet, ns: Iterable) -> list[tuple]:
    return [(n, trace_counts(ts, n)) for n in ns]


@dataclass(frozen=True)
class TraceStatistics:
    gap: object
    max_bc: int
    bc_window: int | None


def trace_statistics(ts: TraceSet) -> TraceStatistics:
    """Minimal spacing of distinct values and max count in a unit window [n, n+1]."""
    vals = ts.values
    if len(vals) < 2:
        raise GapUndefinedError("gap needs at least two distinct values")
    gap = min(y - x for x, y in zip(vals, vals[1:]))
    windows: Counter = Counter()
    for v in vals:
        fl = math.floor(v)
        windows[fl] += 1
        if v == fl:
            windows[fl - 1] += 1
    n, best = max(windows.items(), key=lambda kv: (kv[1], -kv[0]))
    return TraceStatistics(gap, best, n)


# ---------------------------------------------------------------------------
# growth classification

GROWTH_CLASSES = ("constant", "logarithmic", "linear", "superlinear")
SUPERLINEAR_SLOPE = 1.2


@dataclass(frozen=True)
class GrowthFit:
    growth_class: str
    residual: float
    residuals: dict
    loglog_slope: float


def growth_classify(samples: Sequence[tuple[float, float]]) -> GrowthFit:
    """Classify a sampled counting function as constant, logarithmic, linear or superlinear.

    Each model ``alpha + beta*g(n)`` (g = 1, log n, n; alpha, beta >= 0) is fitted
    by non-negative least squares and scored by the RMS misfit of log f.  The
    lowest misfit wins, ties going to the slower class; a log-log slope above
    ``SUPERLINEAR_SLOPE`` overrides to superlinear.
    """
    pts = sorted((float(n), float(f)) for n, f in samples)
    if len(pts) < 4:
        raise InsufficientSamplesError("growth classification needs at least 4 samples")
    n = np.array([p[0] for p in pts])
    f = np.array([p[1] for p in pts])
    if np.any(n < 1) or np.any(f <= 0):
        raise PreconditionError("samples need n >= 1 and f(n) > 0")
    logf = np.log(f)
    models = {
        "constant": np.ones_like(n),
        "logarithmic": np.log(n),
        "linear": n,
    }
    residuals = {}
    for name, g in models.items():
        design = np.column_stack([np.ones_like(n), g])
        coef, _ = nnls(design, f)
        pred = design @ coef
        if np.any(pred <= 0):
            residuals[name] = math.inf
            continue
        residuals[name] = float(np.sqrt(np.mean((logf - np.log(pred)) ** 2)))
    slope = float(np.polyfit(np.log(n), logf, 1)[0]) if np.ptp(n) > 0 else 0.0
    best = min(residuals.values())
    tie_tol = 1e-9 + 1e-6 * best
    cls = next(name for name in ("constant", "logarithmic", "linear")
               if residuals[name] <= best + tie_tol)
    if slope > SUPERLINEAR_SLOPE:
        cls = "superlinear"
    return GrowthFit(cls, residuals.get(cls, best), residuals, slope)


def geometric_samples(n_max: int, n_min: int = 1, per_octave: int = 2) -> list[int]:
    """Distinct integers spaced geometrically in [n_min, n_max], endpoints included."""
    out = set()
    k = 0
    while True:
        x = n_min * 2 ** (k / per_octave)
        if x > n_max:
            break
        out.add(int(round(x)))
        k += 1
    out.add(n_max)
    return sorted(v for v in out if n_min <= v <= n_max)


# ---------------------------------------------------------------------------
# trace families Theta and Phi


@dataclass(frozen=True)
class ThetaPoint:
    """Lattice triple (k*l, k, l) with optional value k*l*b2a + k*b2b + l*c."""

    kl: int
    k: int
    l: int
    value: object = None

    def __post_init__(self):
        if self.kl != self.k * self.l:
            raise PreconditionError("first coordinate must equal k*l")

    @property
    def triple(self) -> tuple[int, int, int]:
        return (self.kl, self.k, self.l)


@dataclass(frozen=True)
class ThetaFamily:
    points: tuple
    lattice_size: int
    distinct_size: int
    collisions: tuple = dc_field(default=())


def theta_family(a=None, b=None, c=None, beta2=None, K: Iterable[int] = (), L: Iterable[int] = (),
                 symbolic: bool = False, skip_zero: bool = False) -> ThetaFamily:
    """Points Theta(k, l) = k*l*beta2*a + k*beta2*b + l*c for k in K, l in L.

    In symbolic mode only the lattice triples are formed (the independent
    coefficient model) and deduplication is by triple.  In evaluated mode
    values are compared exactly and colliding index pairs are reported.
    """
    K = list(K)
    L = list(L)
    pts = []
    for k in K:
        for l in L:
            if skip_zero and k * l == 0:
                continue
            val = None
            if not symbolic:
                val = k * l * beta2 * a + k * beta2 * b + l * c
            pts.append(ThetaPoint(k * l, k, l, val))
    if symbolic:
        distinct = len({p.triple for p in pts})
        return ThetaFamily(tuple(pts), len(pts), distinct)
    groups: dict = {}
    for p in pts:
        groups.setdefault(p.value, []).append((p.k, p.l))
    collisions = tuple((v, tuple(ks)) for v, ks in groups.items() if len(ks) > 1)
    return ThetaFamily(tuple(pts), len(pts), len(groups), collisions)


@dataclass(frozen=True)
class PhiFiberReport:
    s: Fraction
    t: Fraction
    R: int
    max_fiber: int
    two_fibers: int
    partner_checked: int
    partner_failures: tuple
    witnesses: tuple


def phi_fiber(s, t, R: int, max_witnesses: int = 10) -> PhiFiberReport:
    """Fibers of Phi(k, l) = (s*k*l + k, t*k*l + l) over [-R, R]^2.

    Every 2-element fiber is checked against the closed-form partner
    k' = -(s*l + 1)/t, l' = (t/s)(k' - k) + l when s*t != 0.
    """
    s = Fraction(s)
    t = Fraction(t)
    if R < 0:
        raise PreconditionError("R must be non-negative")
    sn, sd = s.numerator, s.denominator
    tn, td = t.numerator, t.denominator
    fibers: dict = {}
    rng = range(-R, R + 1)
    for k in rng:
        for l in rng:
            kl = k * l
            key = (sn * kl + sd * k, tn * kl + td * l)  # scaled image, exact
            fibers.setdefault(key, []).append((k, l))
    max_fiber = max(len(v) for v in fibers.values())
    two = [v for v in fibers.values() if len(v) == 2]
    failures = []
    checked = 0
    if s != 0 and t != 0:
        for (k, l), (k2, l2) in two:
            checked += 1
            kp = -(s * l + 1) / t
            lp = (t / s) * (kp - k) + l
            if (kp, lp) != (k2, l2):
                failures.append(((k, l), (k2, l2), (kp, lp)))
    witnesses = tuple(tuple(v) for v in two[:max_witnesses])
    return PhiFiberReport(s, t, R, max_fiber, len(two), checked, tuple(failures), witnesses)


def dn_lower_bound(N: int) -> tuple[int, float]:
    """Lattice-point count sum_{j<=N} floor(N/j) and the bound N ln N - N."""
    if N < 1:
        raise PreconditionError("N must be >= 1")
    count = sum(N // j for j in range(1, N + 1))
    bound = N * math.log(N) - N
    if count < bound:
        raise VerificationError(f"D_N count {count} below N ln N - N = {bound}")
    return count, bound
