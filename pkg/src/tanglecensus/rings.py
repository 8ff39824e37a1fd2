"""Exact coefficient rings.

Three rings cover every pipeline:

* plain rationals (``fractions.Fraction``), used for the oriented census;
* ``NPoly`` -- polynomials in the loop-count marker n over the rationals,
  used by the general census and the diagram oracle;
* ``ThetaElem`` -- elements P(x) + sin(theta)*Q(x) with x = cos(theta),
  the coefficient ring of the six-vertex series.

All arithmetic is exact; floating point only enters through the explicit
high-precision evaluation helpers (mpmath).
"""

from __future__ import annotations

from fractions import Fraction

import mpmath as mp

__all__ = [
    "Rational",
    "NPoly",
    "ThetaElem",
    "NotDivisible",
    "rat_to_str",
    "rat_from_str",
    "poly_add",
    "poly_mul",
    "poly_scale",
    "poly_diff",
    "cheb_t",
    "cheb_u",
]

Rational = Fraction


class NotDivisible(ArithmeticError):
    """Raised when an exact ring division does not exist."""


def rat_to_str(r: Fraction) -> str:
    """Canonical "num/den" form, '-' on the numerator only."""
    r = Fraction(r)
    return f"{r.numerator}/{r.denominator}"


def rat_from_str(s: str) -> Fraction:
    return Fraction(s)


# ----------------------------------------------------------------------
# dense univariate polynomials over Fraction, as tuples (ascending powers)
# ----------------------------------------------------------------------

def _trim(c):
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def poly_add(a, b):
    n = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)
                  for i in range(n)])


def poly_scale(a, c):
    if c == 0:
        return ()
    return _trim([c * x for x in a])


def poly_mul(a, b):
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return _trim(out)


def poly_diff(a):
    return _trim([i * a[i] for i in range(1, len(a))])


def _poly_divexact(a, b):
    """a // b when the division is exact, else NotDivisible."""
    if not a:
        return ()
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    out = [Fraction(0)] * (len(a) - len(b) + 1)
    for k in range(len(out) - 1, -1, -1):
        c = a[k + len(b) - 1] / b[-1]
        out[k] = c
        if c != 0:
            for j, y in enumerate(b):
                a[k + j] -= c * y
    if any(x != 0 for x in a):
        raise NotDivisible("inexact polynomial division")
    return _trim(out)


def _poly_eval_mp(a, x):
    acc = mp.mpf(0)
    for c in reversed(a):
        acc = acc * x + mp.mpf(c.numerator) / mp.mpf(c.denominator)
    return acc


def cheb_t(k: int):
    """Coefficient tuple of the Chebyshev polynomial T_k (cos k*theta = T_k(cos theta))."""
    a, b = (Fraction(1),), (Fraction(0), Fraction(1))
    if k == 0:
        return a
    for _ in range(k - 1):
        a, b = b, poly_add(poly_scale(poly_mul((Fraction(0), Fraction(1)), b), 2),
                           poly_scale(a, -1))
    return b


def cheb_u(k: int):
    """Coefficient tuple of U_k (sin((k+1)theta) = sin(theta) U_k(cos theta))."""
    if k < 0:
        return ()
    a, b = (Fraction(1),), (Fraction(0), Fraction(2))
    if k == 0:
        return a
    for _ in range(k - 1):
        a, b = b, poly_add(poly_scale(poly_mul((Fraction(0), Fraction(1)), b), 2),
                           poly_scale(a, -1))
    return b


# ----------------------------------------------------------------------
# NPoly
# ----------------------------------------------------------------------

class NPoly:
    """Sparse polynomial in the color marker n with Fraction coefficients.

    The exponent of n grades tangles by their number of closed loops, so
    census entries are NPoly values like 6 + 3n.  No zero coefficients are
    stored.
    """

    __slots__ = ("c",)

    def __init__(self, c=None):
        if c is None:
            self.c = {}
        elif isinstance(c, NPoly):
            self.c = dict(c.c)
        elif isinstance(c, dict):
            self.c = {k: Fraction(v) for k, v in c.items() if v != 0}
        else:
            v = Fraction(c)
            self.c = {0: v} if v != 0 else {}

    @staticmethod
    def n(k: int = 1):
        return NPoly({k: 1})

    def degree(self):
        return max(self.c) if self.c else -1

    def __bool__(self):
        return bool(self.c)

    def __eq__(self, other):
        if not isinstance(other, NPoly):
            other = NPoly(other)
        return self.c == other.c

    def __hash__(self):
        return hash(frozenset(self.c.items()))

    def __add__(self, other):
        if not isinstance(other, NPoly):
            other = NPoly(other)
        out = dict(self.c)
        for k, v in other.c.items():
            w = out.get(k, Fraction(0)) + v
            if w == 0:
                out.pop(k, None)
            else:
                out[k] = w
        r = NPoly()
        r.c = out
        return r

    __radd__ = __add__

    def __neg__(self):
        r = NPoly()
        r.c = {k: -v for k, v in self.c.items()}
        return r

    def __sub__(self, other):
        return self + (-(other if isinstance(other, NPoly) else NPoly(other)))

    def __rsub__(self, other):
        return NPoly(other) - self

    def __mul__(self, other):
        if not isinstance(other, NPoly):
            other = NPoly(other)
        out = {}
        for i, x in self.c.items():
            for j, y in other.c.items():
                k = i + j
                w = out.get(k, Fraction(0)) + x * y
                if w == 0:
                    out.pop(k, None)
                else:
                    out[k] = w
        r = NPoly()
        r.c = out
        return r

    __rmul__ = __mul__

    def divexact_n(self):
        """Exact division by n; NotDivisible if a constant term remains."""
        if self.c.get(0, 0) != 0:
            raise NotDivisible("NPoly has a nonzero n^0 term")
        r = NPoly()
        r.c = {k - 1: v for k, v in self.c.items()}
        return r

    def subs(self, value):
        """Evaluate at a numeric n (Fraction arithmetic)."""
        v = Fraction(value)
        return sum((c * v ** k for k, c in self.c.items()), Fraction(0))

    def is_nonneg_integer(self):
        return all(v.denominator == 1 and v >= 0 for v in self.c.values())

    def to_json(self):
        return {str(k): rat_to_str(v) for k, v in sorted(self.c.items())}

    @staticmethod
    def from_json(d):
        return NPoly({int(k): rat_from_str(v) for k, v in d.items()})

    def text(self):
        """Human form matching census tables: '62+40n+2n^2'."""
        if not self.c:
            return "0"
        parts = []
        for k in sorted(self.c):
            v = self.c[k]
            s = str(v) if v.denominator > 1 else str(v.numerator)
            if k == 0:
                parts.append(s)
            else:
                if s == "1":
                    s = ""
                elif s == "-1":
                    s = "-"
                parts.append(f"{s}n" if k == 1 else f"{s}n^{k}")
        out = parts[0]
        for p in parts[1:]:
            out += p if p.startswith("-") else "+" + p
        return out

    def __repr__(self):
        return f"NPoly({self.text()})"


# ----------------------------------------------------------------------
# ThetaElem
# ----------------------------------------------------------------------

class ThetaElem:
    """P(x) + s*Q(x) with x = cos(theta), s = sin(theta), s^2 == 1 - x^2.

    The canonical form keeps even/odd parity in theta explicit: elements even
    in theta have odd == (), odd elements have even == ().  Division by s is
    exact whenever the element lies in s * (ring), which is what makes the
    H*cot(theta) and H/sin(theta) steps of the six-vertex chain mechanical.
    """

    __slots__ = ("even", "odd")

    _ONE_MINUS_X2 = (Fraction(1), Fraction(0), Fraction(-1))

    def __init__(self, even=(), odd=()):
        self.even = _trim(Fraction(c) for c in even)
        self.odd = _trim(Fraction(c) for c in odd)

    @staticmethod
    def const(v):
        v = Fraction(v)
        return ThetaElem((v,) if v else ())

    @staticmethod
    def x():
        return ThetaElem((0, 1))

    @staticmethod
    def sin():
        return ThetaElem((), (1,))

    @staticmethod
    def cos_multiple(k: int):
        """cos(k*theta) as a ThetaElem."""
        return ThetaElem(cheb_t(k))

    @staticmethod
    def sin_multiple(k: int):
        """sin(k*theta) as a ThetaElem."""
        if k == 0:
            return ThetaElem()
        return ThetaElem((), cheb_u(k - 1))

    def __bool__(self):
        return bool(self.even or self.odd)

    def __eq__(self, other):
        if not isinstance(other, ThetaElem):
            other = ThetaElem.const(other)
        return self.even == other.even and self.odd == other.odd

    def __hash__(self):
        return hash((self.even, self.odd))

    def __add__(self, other):
        if not isinstance(other, ThetaElem):
            other = ThetaElem.const(other)
        return ThetaElem(poly_add(self.even, other.even),
                         poly_add(self.odd, other.odd))

    __radd__ = __add__

    def __neg__(self):
        return ThetaElem(poly_scale(self.even, -1), poly_scale(self.odd, -1))

    def __sub__(self, other):
        return self + (-(other if isinstance(other, ThetaElem) else ThetaElem.const(other)))

    def __rsub__(self, other):
        return ThetaElem.const(other) - self

    def __mul__(self, other):
        if not isinstance(other, ThetaElem):
            other = ThetaElem.const(other)
        # (P1 + s Q1)(P2 + s Q2) = P1P2 + (1-x^2) Q1Q2 + s (P1Q2 + P2Q1)
        even = poly_add(poly_mul(self.even, other.even),
                        poly_mul(self._ONE_MINUS_X2, poly_mul(self.odd, other.odd)))
        odd = poly_add(poly_mul(self.even, other.odd),
                       poly_mul(self.odd, other.even))
        return ThetaElem(even, odd)

    __rmul__ = __mul__

    def dtheta(self):
        """d/dtheta: (P, Q) -> (x Q - (1-x^2) Q', -P')."""
        xq = poly_mul((Fraction(0), Fraction(1)), self.odd)
        even = poly_add(xq, poly_scale(poly_mul(self._ONE_MINUS_X2, poly_diff(self.odd)), -1))
        odd = poly_scale(poly_diff(self.even), -1)
        return ThetaElem(even, odd)

    def div_sin(self):
        """Exact division by sin(theta): (P + sQ)/s = Q + s*P/(1-x^2)."""
        if not self.even:
            return ThetaElem(self.odd, ())
        new_odd = _poly_divexact(self.even, self._ONE_MINUS_X2)
        return ThetaElem(self.odd, new_odd)

    def eval(self, theta):
        """High-precision value at a numeric theta in (0, pi)."""
        x = mp.cos(theta)
        return _poly_eval_mp(self.even, x) + mp.sin(theta) * _poly_eval_mp(self.odd, x)

    def subs_series(self, x_series, s_series):
        """Evaluate with x and s replaced by elements of any commutative ring.

        Used by the oriented pipeline, where x = -sin(dtheta(g)) and
        s = cos(dtheta(g)) are exact power series in g.
        """
        acc = None

        def horner(coeffs):
            r = None
            for c in reversed(coeffs):
                r = (r * x_series if r is not None else 0 * x_series) + c
            return r

        if self.even:
            acc = horner(self.even)
        if self.odd:
            o = horner(self.odd) * s_series
            acc = o if acc is None else acc + o
        if acc is None:
            acc = 0 * x_series
        return acc

    def cos_expansion(self):
        """Rewrite as {k: coefficient} with value sum_k a_k cos(k th) + sum_k b_k sin(k th).

        Returns (cos_part, sin_part) dictionaries; inverse of building from
        cos_multiple/sin_multiple.  Handy for comparing against reference
        expressions written in multiple angles.
        """
        cos_part = {}
        rem = list(self.even)
        for k in range(len(rem) - 1, -1, -1):
            t = cheb_t(k)
            c = rem[k] / t[k]
            if c != 0:
                cos_part[k] = c
                for j, v in enumerate(t):
                    rem[j] -= c * v
        assert all(v == 0 for v in rem)
        sin_part = {}
        rem = list(self.odd)
        for k in range(len(rem) - 1, -1, -1):
            u = cheb_u(k)
            c = rem[k] / u[k]
            if c != 0:
                sin_part[k + 1] = c
                for j, v in enumerate(u):
                    rem[j] -= c * v
        assert all(v == 0 for v in rem)
        return cos_part, sin_part

    def to_json(self):
        return {"even": [rat_to_str(c) for c in self.even],
                "odd": [rat_to_str(c) for c in self.odd]}

    @staticmethod
    def from_json(d):
        return ThetaElem([rat_from_str(c) for c in d["even"]],
                         [rat_from_str(c) for c in d["odd"]])

    def __repr__(self):
        def side(coeffs, tag):
            return "+".join(f"{c}{tag}^{k}" if k else f"{c}"
                            for k, c in enumerate(coeffs) if c != 0) or "0"
        if not self.odd:
            return f"ThetaElem({side(self.even, 'x')})"
        return f"ThetaElem({side(self.even, 'x')} + s*({side(self.odd, 'x')}))"
