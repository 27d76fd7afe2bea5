"""Fricke-coordinate embeddings of closed surface groups and orbit statistics.

Matrices here are floating point ``numpy`` 2x2 arrays.  The commutator
convention is [x, y] = x y x^-1 y^-1 and the fundamental relation is
prod_{i=1..g} [eta_{2i-1}, eta_{2i}] = I.
"""
from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from scipy.optimize import least_squares

from .errors import (ConvergenceError, DegenerateError, InsufficientSamplesError,
                     PreconditionError, VerificationError)

DET_TOL = 1e-12
SOLVE_TOL = 1e-9
DEFAULT_KAPPA = 10  # stand-in for Buser's existential constant; not a derived value


def mat(a, b, c, d) -> np.ndarray:
    return np.array([[a, b], [c, d]], dtype=float)


def inv2(m: np.ndarray) -> np.ndarray:
    """Inverse of a determinant-one matrix (the adjugate)."""
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


def commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y @ inv2(x) @ inv2(y)


def fricke_matrix(a: float, c: float, d: float) -> np.ndarray:
    if not c > 0:
        raise PreconditionError(f"Fricke coordinate c must be positive, got {c}")
    return mat(a, (a * d - 1) / c, c, d)


@dataclass(frozen=True)
class Tail:
    a: float
    b: float
    c: float
    d: float
    nu: float
    residual: float = float("nan")

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        return mat(self.a, self.b, self.c, self.d), mat(self.nu, 0.0, 0.0, 1 / self.nu)

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("a", "b", "c", "d", "nu", "residual")}


@dataclass(frozen=True)
class FrickeCoords:
    g: int
    triples: tuple
    tail: Tail | None = None

    def __post_init__(self):
        if self.g < 3:
            raise PreconditionError(f"genus must be >= 3, got {self.g}")
        triples = tuple(tuple(float(x) for x in t) for t in self.triples)
        if len(triples) != 2 * self.g - 2 or any(len(t) != 3 for t in triples):
            raise PreconditionError(f"need {2 * self.g - 2} triples (a, c, d)")
        if any(not t[1] > 0 for t in triples):
            raise PreconditionError("every c_i must be positive")
        object.__setattr__(self, "triples", triples)

    @classmethod
    def from_json(cls, obj: dict) -> FrickeCoords:
        unknown = set(obj) - {"g", "triples", "tail"}
        if unknown:
            raise PreconditionError(f"unknown keys in coordinates: {sorted(unknown)}")
        tail = None
        if obj.get("tail") is not None:
            t = obj["tail"]
            a, d, nu = float(t["a"]), float(t["d"]), float(t["nu"])
            b, c = _tail_bc(a, d)[0]
            tail = Tail(a, b, c, d, nu)
        return cls(int(obj["g"]), tuple(obj["triples"]), tail)

    def head(self) -> list[np.ndarray]:
        return [fricke_matrix(*t) for t in self.triples]


def embed_generators(fc: FrickeCoords) -> list[np.ndarray]:
    """The 2g matrices psi(eta_1), ..., psi(eta_2g), each of determinant 1."""
    if fc.tail is None:
        raise PreconditionError("tail (a, b, c, d, nu) not solved; call solve_tail first")
    mats = fc.head() + list(fc.tail.matrices())
    for i, m in enumerate(mats, 1):
        if abs(np.linalg.det(m) - 1) > DET_TOL * max(1.0, float(np.abs(m).max()) ** 2):
            raise VerificationError(f"eta_{i} has determinant {np.linalg.det(m)!r}")
    return mats


def relation_product(mats: list[np.ndarray]) -> np.ndarray:
    out = np.eye(2)
    for i in range(0, len(mats), 2):
        out = out @ commutator(mats[i], mats[i + 1])
    return out


def relation_residual(mats: list[np.ndarray]) -> float:
    return float(np.abs(relation_product(mats) - np.eye(2)).max())


def _tail_bc(a: float, d: float) -> list[tuple[float, float]]:
    """Both (b, c) with b + c = a + d and bc = ad - 1 (discriminant (a-d)^2 + 4 > 0)."""
    s = a + d
    r = math.sqrt((a - d) ** 2 + 4)
    hi, lo = (s + r) / 2, (s - r) / 2
    return [(hi, lo), (lo, hi)]


def solve_tail(fc: FrickeCoords, starts: int = 64, seed: int = 0,
               tol: float = SOLVE_TOL) -> Tail:
    """Solve the fundamental relation for (a, b, c, d, nu).

    Damped least squares over (a, d, log nu) on both (b, c) branches, from
    seeded multi-starts.  Returns the branch with a + d > 0 and nu > 1.
    """
    head = fc.head()
    target = inv2(relation_product(head))  # last commutator must equal this
    rng = np.random.default_rng(seed)
    scale = max(1.0, float(np.abs(target).max()))
    best: tuple[float, Tail | None] = (float("inf"), None)

    for k in range(starts):
        x0 = np.array([rng.normal(0, 2), rng.normal(0, 2), rng.uniform(0.05, 3.0)])
        for branch in (0, 1):
            def resid(x, branch=branch):
                a, d, s = x
                b, c = _tail_bc(a, d)[branch]
                X = mat(a, b, c, d)
                Y = mat(math.exp(s), 0.0, 0.0, math.exp(-s))
                return (commutator(X, Y) - target).ravel() / scale
            try:
                sol = least_squares(resid, x0, method="lm", xtol=1e-15, ftol=1e-15,
                                    gtol=1e-15, max_nfev=2000)
            except (ValueError, OverflowError, FloatingPointError):
                continue
            a, d, s = sol.x
            if not np.all(np.isfinite(sol.x)):
                continue
            if s < 0:  # only the nu > 1 branch is admissible
                continue
            b, c = _tail_bc(a, d)[branch]
            if a + d < 0:
                a, b, c, d = -a, -b, -c, -d
            tail = Tail(a, b, c, d, math.exp(s))
            r = relation_residual(head + list(tail.matrices()))
            ok = a + d > 0 and tail.nu > 1
            if ok and r < best[0]:
                best = (r, replace(tail, residual=r))
            if best[0] <= tol * 1e-3:
                return best[1]
    if best[1] is None or best[0] > tol:
        raise ConvergenceError("tail solve did not converge on the a+d>0, nu>1 branch",
                               best[0])
    return best[1]


def solve_coords(fc: FrickeCoords, **kw) -> FrickeCoords:
    return replace(fc, tail=solve_tail(fc, **kw))


# ---------------------------------------------------------------------------
# orbit counting


def hyperbolic_distance(m) -> float:
    """d(i, m i) in the upper half-plane for m in SL(2, R)."""
    m = np.asarray(m, dtype=float)
    s = float((m * m).sum()) / 2
    return math.acosh(max(s, 1.0))


@dataclass
class OrbitCount:
    radii: tuple
    counts: tuple
    n_words: int
    truncated: bool
    ambiguous: int = 0
    elements: list = field(default_factory=list, repr=False)  # (distance, matrix)

    def __post_init__(self):
        if any(b < a for a, b in zip(self.counts, self.counts[1:])):
            raise VerificationError("orbit counts must be non-decreasing")


def _dedup_key(m: np.ndarray, tolerance: float) -> tuple:
    flat = m.ravel()
    lead = next((x for x in flat if abs(x) > tolerance), 1.0)
    if lead < 0:
        flat = -flat
    return tuple(int(round(x / tolerance)) for x in flat)


def enumerate_orbit(gens, R_max: float, cap: int = 10**4, margin: float = 2.0,
                    tolerance: float = 1e-9):
    """Breadth-first reduced words in the free group on ``gens``.

    Words whose displacement exceeds ``R_max + margin`` are not extended.
    Returns (elements, n_words, truncated, ambiguous) where elements is a list
    of (distance, matrix) after deduplication up to sign.
    """
    letters = []
    for g in gens:
        g = np.asarray(g, dtype=float)
        letters.append(g)
        letters.append(inv2(g))
    inverse_of = [i ^ 1 for i in range(len(letters))]
    seen: dict = {}
    ambiguous = 0
    ident = np.eye(2)
    seen[_dedup_key(ident, tolerance)] = (0.0, ident)
    queue = deque([(ident, -1)])
    n_words, truncated = 1, False
    bound = R_max + margin
    while queue:
        m, last = queue.popleft()
        for j, h in enumerate(letters):
            if last >= 0 and j == inverse_of[last]:
                continue
            if n_words >= cap:
                truncated = True
                queue.clear()
                break
            w = m @ h
            dist = hyperbolic_distance(w)
            if dist > bound:
                continue
            n_words += 1
            key = _dedup_key(w, tolerance)
            if key in seen:
                ambiguous += 1
            else:
                seen[key] = (dist, w)
            queue.append((w, j))
    if ambiguous:
        warnings.warn(f"{ambiguous} distinct words coincided within tolerance {tolerance}",
                      RuntimeWarning, stacklevel=2)
    return list(seen.values()), n_words, truncated, ambiguous


def orbit_count(gens, R_max: float, cap: int = 10**4, radii=None, margin: float = 2.0,
                tolerance: float = 1e-9, n_radii: int = 41) -> OrbitCount:
    """N(R) = #{orbit points within distance R of i} for R on a grid up to R_max."""
    if R_max < 0:
        raise PreconditionError("R_max must be non-negative")
    elements, n_words, truncated, amb = enumerate_orbit(gens, R_max, cap, margin, tolerance)
    if radii is None:
        radii = np.linspace(0.0, R_max, n_radii) if R_max > 0 else np.array([0.0])
    radii = tuple(float(r) for r in sorted(radii))
    dists = np.sort(np.array([d for d, _ in elements]))
    eps = 1e-12 * max(1.0, R_max)
    counts = tuple(int(np.searchsorted(dists, r + eps, side="right")) for r in radii)
    return OrbitCount(radii, counts, n_words, truncated, amb, elements)


@dataclass(frozen=True)
class DeltaEstimate:
    delta: float
    ci: tuple
    window: tuple  # (R_start, R_end)
    n_points: int
    rms: float
    raw_slope: float

    def to_json(self) -> dict:
        return {"delta_hat": self.delta, "ci": list(self.ci), "window": list(self.window),
                "n_points": self.n_points, "rms": self.rms, "raw_slope": self.raw_slope}


def estimate_delta(oc_or_radii, counts=None, threshold: float = 0.05,
                   min_points: int = 5) -> DeltaEstimate:
    """Slope of log N(R) against R over the largest suffix window with a good fit.

    The window starts as early as possible subject to RMS log-residual below
    ``threshold``; the estimate is clamped to [0, 1] and the interval is
    slope +- 1.96 standard errors (also clamped).
    """
    if counts is None:
        R, N = np.asarray(oc_or_radii.radii, float), np.asarray(oc_or_radii.counts, float)
    else:
        R, N = np.asarray(oc_or_radii, float), np.asarray(counts, float)
    if np.any(np.diff(N) < 0):
        raise DegenerateError("counts are not non-decreasing")
    keep = N > 0
    R, N = R[keep], N[keep]
    if len(R) < min_points:
        raise InsufficientSamplesError(f"need at least {min_points} radii with N > 0")
    if N[-1] <= N[0]:
        raise DegenerateError("counts do not increase")
    y = np.log(N)
    chosen = None
    for start in range(0, len(R) - min_points + 1):
        x, yy = R[start:], y[start:]
        A = np.vstack([x, np.ones_like(x)]).T
        coef, *_ = np.linalg.lstsq(A, yy, rcond=None)
        res = yy - A @ coef
        rms = float(np.sqrt(np.mean(res**2)))
        if rms < threshold:
            chosen = (start, coef, res, rms)
            break
    if chosen is None:
        start = len(R) - min_points
        x, yy = R[start:], y[start:]
        A = np.vstack([x, np.ones_like(x)]).T
        coef, *_ = np.linalg.lstsq(A, yy, rcond=None)
        res = yy - A @ coef
        chosen = (start, coef, res, float(np.sqrt(np.mean(res**2))))
    start, coef, res, rms = chosen
    x = R[start:]
    n = len(x)
    sxx = float(((x - x.mean()) ** 2).sum())
    se = math.sqrt(float((res**2).sum()) / max(n - 2, 1) / sxx) if sxx > 0 else float("inf")
    slope = float(coef[0])
    clamp = lambda v: min(1.0, max(0.0, v))  # noqa: E731
    return DeltaEstimate(clamp(slope), (clamp(slope - 1.96 * se), clamp(slope + 1.96 * se)),
                         (float(x[0]), float(x[-1])), n, rms, slope)


def trace_bound_violations(elements, special=None, slack: float = 1e-9) -> list:
    """Elements m (optionally special @ m) with |tr| > 2 cosh(d/2) + slack."""
    bad = []
    for _, m in elements:
        w = m if special is None else np.asarray(special) @ m
        d = hyperbolic_distance(w)
        if abs(np.trace(w)) > 2 * math.cosh(d / 2) + slack:
            bad.append(w)
    return bad


# ---------------------------------------------------------------------------
# Cheeger -> lambda_1 -> delta


@dataclass(frozen=True)
class DeltaBounds:
    ell: object
    g: int
    kappa: object
    eps: object
    h_upper: object
    lambda1_upper: object
    delta_lower: object
    target: object  # max{3/4, 1 - 2 eps / (3 (4g - 8))}, or None without eps
    precondition: bool
    pi_units: bool

    def to_json(self) -> dict:
        conv = lambda v: None if v is None else (str(v) if isinstance(v, Fraction) else v)  # noqa: E731
        return {k: conv(getattr(self, k)) for k in self.__dataclass_fields__}


def cheeger_delta_pipeline(ell, g: int, kappa=DEFAULT_KAPPA, eps=None,
                           pi_units: bool = False) -> DeltaBounds:
    """h <= ell/((4g-8) pi), lambda_1 <= kappa h, and delta >= 1 - 2 lambda_1.

    With ``pi_units`` the length is given as a multiple of pi, so rational
    inputs propagate exactly.  When ``eps`` is given and
    ell <= min(pi/(2 kappa), eps pi/(3 kappa)), the lower bound is checked
    against max{3/4, 1 - 2 eps/(3(4g-8))}.
    """
    if g < 3:
        raise PreconditionError("genus must be >= 3")
    if not ell > 0 or not kappa > 0:
        raise PreconditionError("ell and kappa must be positive")
    exact = pi_units and all(isinstance(v, (int, Fraction)) for v in (ell, kappa)) and (
        eps is None or isinstance(eps, (int, Fraction)))
    four = 4 * g - 8
    if pi_units:
        h = (Fraction(ell) if exact else float(ell)) / four
    else:
        h = float(ell) / (four * math.pi)
    lam = kappa * h
    if lam >= Fraction(1, 4):
        raise DegenerateError(f"lambda_1 bound {lam} >= 1/4: the delta >= 1/2 branch is unavailable")
    delta = 1 - 2 * lam
    target, pre = None, False
    if eps is not None:
        eps_v = Fraction(eps) if exact else float(eps)
        target = max(Fraction(3, 4) if exact else 0.75, 1 - 2 * eps_v / (3 * four))
        ell_pi = ell if pi_units else float(ell) / math.pi
        pre = ell_pi <= min(Fraction(1) / (2 * kappa) if exact else 1 / (2 * kappa),
                            eps_v / (3 * kappa))
        if pre and delta < target - (0 if exact else 1e-12):
            raise VerificationError(f"delta lower bound {delta} below {target}")
    return DeltaBounds(ell, g, kappa, eps, h, lam, delta, target, pre, pi_units)


# ---------------------------------------------------------------------------
# trace collisions


@dataclass(frozen=True)
class Collision:
    trace_a: float
    trace_b: float
    a: np.ndarray
    b: np.ndarray
    word_a: tuple
    word_b: tuple


def trace_collision_scan(gens, special, cap: int = 500, tolerance: float = 1e-9,
                         dedup_tolerance: float = 1e-9) -> list[Collision]:
    """Pairs a != b among the first ``cap`` non-identity words with tr(special a) ~ tr(special b)."""
    letters = []
    for g in gens:
        g = np.asarray(g, dtype=float)
        letters += [g, inv2(g)]
    special = np.asarray(special, dtype=float)
    ident = np.eye(2)
    elems = [((), ident)]
    seen = {_dedup_key(ident, dedup_tolerance)}
    queue = deque([((), ident, -1)])
    while queue and len(elems) <= cap:
        word, m, last = queue.popleft()
        for j, h in enumerate(letters):
            if last >= 0 and j == last ^ 1:
                continue
            if len(elems) > cap:
                break
            w = m @ h
            key = _dedup_key(w, dedup_tolerance)
            if key in seen:
                continue
            seen.add(key)
            elems.append((word + (j,), w))
            queue.append((word + (j,), w, j))
    traced = sorted((float(np.trace(special @ m)), word, m) for word, m in elems)
    out = []
    for i in range(len(traced)):
        t1, w1, m1 = traced[i]
        for k in range(i + 1, len(traced)):
            t2, w2, m2 = traced[k]
            if t2 - t1 >= tolerance:
                break
            out.append(Collision(t1, t2, m1, m2, w1, w2))
    return out


# ---------------------------------------------------------------------------
# planted fixtures


def _commutator_root(Q: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray] | None:
    """Fricke matrices (e1, e2) with [e1, e2] = Q, or None if this draw fails."""
    M = inv2(Q)  # need e2 e1 e2^-1 = M e1
    a1, c1 = rng.normal(0, 1.5), rng.uniform(0.5, 2.0)
    coef = M[1, 0] * a1 / c1 + M[1, 1] - 1
    if abs(coef) < 1e-3:
        return None
    d1 = (-(M[0, 0] - 1) * a1 - M[0, 1] * c1 + M[1, 0] / c1) / coef
    e1 = fricke_matrix(a1, c1, d1)
    if abs(np.trace(e1)) <= 2.05:
        return None
    # Z e1 - (M e1) Z = 0, row-major vec(Z)
    B = M @ e1
    K = np.kron(np.eye(2), e1.T) - np.kron(B, np.eye(2))
    _, s, vt = np.linalg.svd(K)
    null = vt[-2:]
    if s[-3] < 1e-8 * s[0]:
        return None
    u, v = rng.normal(size=2)
    Z = (u * null[0] + v * null[1]).reshape(2, 2)
    det = np.linalg.det(Z)
    if det <= 1e-6:
        Z = (u * null[0] - v * null[1]).reshape(2, 2)
        det = np.linalg.det(Z)
        if det <= 1e-6:
            return None
    Z = Z / math.sqrt(det)
    if Z[1, 0] < 0:
        Z = -Z
    if Z[1, 0] < 1e-3:
        return None
    return e1, Z


def planted_coords(seed: int, g: int = 3) -> tuple[FrickeCoords, Tail]:
    """Random coordinates whose fundamental relation holds at a known tail.

    The tail (a, d, nu) is drawn first, the middle commutators at random, and
    the first pair is solved so that the relation closes.  Returns the
    coordinates (without tail) and the planted tail.
    """
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        a, d = rng.normal(0, 1, size=2)
        if a + d < 0.2:
            continue
        b, c = _tail_bc(a, d)[int(rng.integers(2))]
        nu = float(rng.uniform(1.3, 3.0))
        tail = Tail(a, b, c, d, nu)
        X, Y = tail.matrices()
        mids = [(rng.normal(0, 1), rng.uniform(0.5, 2.0), rng.normal(0, 1))
                for _ in range(2 * g - 4)]
        P = np.eye(2)
        for i in range(0, len(mids), 2):
            P = P @ commutator(fricke_matrix(*mids[i]), fricke_matrix(*mids[i + 1]))
        Q = inv2(P @ commutator(X, Y))
        root = _commutator_root(Q, rng)
        if root is None:
            continue
        e1, e2 = root
        first = [(e1[0, 0], e1[1, 0], e1[1, 1]), (e2[0, 0], e2[1, 0], e2[1, 1])]
        fc = FrickeCoords(g, tuple(first + mids))
        r = relation_residual(fc.head() + [X, Y])
        if r < 1e-11 and np.abs(fc.head()).max() < 1e3:
            return fc, replace(tail, residual=r)
    raise ConvergenceError("could not build a planted fixture")
