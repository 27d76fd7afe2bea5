"""Exact coefficient fields: the rationals and real quadratic fields Q(sqrt D).

Rational elements are plain :class:`fractions.Fraction` values.  Elements of
Q(sqrt D) are :class:`QuadElem` instances ``u + v*sqrt(D)``; a ``QuadElem``
with ``v == 0`` compares and hashes equal to the corresponding Fraction.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Rational = Union[int, Fraction]


def is_squarefree(n: int) -> bool:
    if n < 1:
        return False
    k = 2
    while k * k <= n:
        if n % (k * k) == 0:
            return False
        k += 1
    return True


def squarefree_part(x: Rational) -> int:
    """Square-free positive integer D with |x| = D * (rational)^2."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("square-free part of 0 is undefined")
    n = abs(x.numerator) * x.denominator
    out = 1
    k = 2
    while k * k <= n:
        e = 0
        while n % k == 0:
            n //= k
            e += 1
        if e % 2:
            out *= k
        k += 1
    return out * n


class QuadElem:
    """Element u + v*sqrt(d) of the real quadratic field Q(sqrt d)."""

    __slots__ = ("u", "v", "d")

    def __init__(self, u: Rational, v: Rational = 0, d: int = 2) -> None:
        if d < 2 or not is_squarefree(d):
            raise ValueError(f"d must be a square-free integer >= 2, got {d}")
        self.u = Fraction(u)
        self.v = Fraction(v)
        self.d = d

    def _coerce(self, other) -> QuadElem | None:
        if isinstance(other, QuadElem):
            if other.d != self.d:
                raise ValueError(f"mixed fields Q(sqrt {self.d}) and Q(sqrt {other.d})")
            return other
        if isinstance(other, (int, Fraction)):
            return QuadElem(other, 0, self.d)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadElem(self.u + o.u, self.v + o.v, self.d)

    __radd__ = __add__

    def __neg__(self) -> QuadElem:
        return QuadElem(-self.u, -self.v, self.d)

    def __pos__(self) -> QuadElem:
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadElem(self.u - o.u, self.v - o.v, self.d)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadElem(self.u * o.u + self.d * self.v * o.v,
                        self.u * o.v + self.v * o.u, self.d)

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        return self.u * self.u - self.d * self.v * self.v

    def conj(self) -> QuadElem:
        return QuadElem(self.u, -self.v, self.d)

    def trace(self) -> Fraction:
        return 2 * self.u

    def inverse(self) -> QuadElem:
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        return QuadElem(self.u / n, -self.v / n, self.d)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, k: int) -> QuadElem:
        if k < 0:
            return self.inverse() ** (-k)
        out = QuadElem(1, 0, self.d)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def is_rational(self) -> bool:
        return self.v == 0

    def sign(self) -> int:
        su = (self.u > 0) - (self.u < 0)
        sv = (self.v > 0) - (self.v < 0)
        if sv == 0:
            return su
        if su == 0 or su == sv:
            return sv
        # opposite signs: compare u^2 with d v^2 (never equal, d square-free)
        return su if self.u * self.u > self.d * self.v * self.v else sv

    def __eq__(self, other) -> bool:
        if isinstance(other, QuadElem):
            return self.d == other.d and self.u == other.u and self.v == other.v
        if isinstance(other, (int, Fraction)):
            return self.v == 0 and self.u == other
        return NotImplemented

    def __hash__(self) -> int:
        if self.v == 0:
            return hash(self.u)
        return hash((self.u, self.v, self.d))

    def _cmp(self, other) -> int:
        o = self._coerce(other)
        if o is None:
            raise TypeError(f"cannot compare QuadElem with {type(other).__name__}")
        return (self - o).sign()

    def __lt__(self, other):
        if isinstance(other, float):
            return float(self) < other
        return self._cmp(other) < 0

    def __le__(self, other):
        if isinstance(other, float):
            return float(self) <= other
        return self._cmp(other) <= 0

    def __gt__(self, other):
        if isinstance(other, float):
            return float(self) > other
        return self._cmp(other) > 0

    def __ge__(self, other):
        if isinstance(other, float):
            return float(self) >= other
        return self._cmp(other) >= 0

    def __abs__(self) -> QuadElem:
        return -self if self.sign() < 0 else self

    def __float__(self) -> float:
        return float(self.approx(64))

    def approx(self, bits: int = 64) -> Fraction:
        """Rational approximation with absolute error below 2**-bits."""
        if self.v == 0:
            return self.u
        w2 = self.v * self.v * self.d
        scale = 4 ** bits
        root = Fraction(math.isqrt(w2.numerator * scale * w2.denominator), w2.denominator * 2 ** bits)
        return self.u + (root if self.v > 0 else -root)

    def __floor__(self) -> int:
        n = math.floor(self.approx(64))
        while self < n:
            n -= 1
        while self >= n + 1:
            n += 1
        return n

    def __ceil__(self) -> int:
        return -math.floor(-self)

    def __repr__(self) -> str:
        return f"QuadElem({self.u}, {self.v}, d={self.d})"

    def __str__(self) -> str:
        if self.v == 0:
            return str(self.u)
        return f"{self.u}+{self.v}*r"


FieldElem = Union[Fraction, QuadElem]


@dataclass(frozen=True)
class Field:
    """Coefficient field descriptor: ``rational``, ``quadratic`` (with d) or ``float``."""

    kind: str = "rational"
    d: int | None = None

    def __post_init__(self):
        if self.kind not in ("rational", "quadratic", "float"):
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind == "quadratic" and (self.d is None or self.d < 2 or not is_squarefree(self.d)):
            raise ValueError(f"quadratic field needs square-free d >= 2, got {self.d}")

    @property
    def exact(self) -> bool:
        return self.kind != "float"

    def elem(self, x):
        """Coerce ``x`` (int, Fraction, QuadElem, float or string) into this field."""
        if isinstance(x, str):
            return parse_elem(x, self)
        if self.kind == "float":
            return float(x)
        if self.kind == "rational":
            if isinstance(x, QuadElem):
                if not x.is_rational():
                    raise ValueError(f"{x} is not rational")
                return x.u
            if isinstance(x, float):
                raise TypeError("floats are not exact field elements")
            return Fraction(x)
        if isinstance(x, QuadElem):
            if x.d != self.d:
                raise ValueError(f"element of Q(sqrt {x.d}) in Q(sqrt {self.d})")
            return x
        if isinstance(x, float):
            raise TypeError("floats are not exact field elements")
        return QuadElem(x, 0, self.d)

    def to_json(self) -> dict:
        if self.kind == "quadratic":
            return {"kind": "quadratic", "d": self.d}
        return {"kind": self.kind}

    @classmethod
    def from_json(cls, obj: dict) -> Field:
        return cls(obj["kind"], obj.get("d"))


_QUAD_RE = re.compile(
    r"^\s*(?P<u>[+-]?\d+(?:/\d+)?)?\s*(?:(?P<sign>[+-])\s*(?:(?P<v>\d+(?:/\d+)?)\s*\*\s*)?r)?\s*$"
)


def parse_elem(s: str, field: Field):
    """Parse ``"p/q"``, ``"n"`` or ``"u+v*r"`` (r = sqrt d) into ``field``."""
    s = s.strip()
    if field.kind == "float":
        return float(Fraction(s)) if "/" in s else float(s)
    if "r" not in s:
        return field.elem(Fraction(s))
    if field.kind != "quadratic":
        raise ValueError(f"{s!r} uses r but the field is {field.kind}")
    if s.startswith("r") or s.startswith("-r") or s.startswith("+r"):
        s = "0" + (s if s[0] in "+-" else "+" + s)
    m = _QUAD_RE.match(s)
    if m is None or m.group("sign") is None:
        raise ValueError(f"cannot parse quadratic element {s!r}")
    u = Fraction(m.group("u") or 0)
    v = Fraction(m.group("v") or 1)
    if m.group("sign") == "-":
        v = -v
    return QuadElem(u, v, field.d)


def format_elem(x) -> str:
    if isinstance(x, QuadElem):
        if x.v == 0:
            return str(x.u)
        sign = "+" if x.v > 0 else "-"
        return f"{x.u}{sign}{abs(x.v)}*r"
    if isinstance(x, float):
        return repr(x)
    return str(Fraction(x))
