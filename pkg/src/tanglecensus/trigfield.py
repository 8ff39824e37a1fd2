"""Exact arithmetic for the six-vertex engine internals.

Every quantity in the engine's elliptic expansion is built from the unit
lambda = exp(i(pi - theta)/2) (the square of the parametrization's pole
phase).  The engine therefore works in the field Q(i)(lambda):

* ``GQ`` -- Gaussian rationals a + b*i over ``Fraction``;
* ``LaurentL`` -- Laurent polynomials in lambda over GQ (the cheap layer
  that all theta-series data live in);
* ``QL`` -- the rational-function field, needed once inverses appear.

Conversion back to the trigonometric ring uses mu = lambda^2 = -exp(-i theta):
x = cos(theta) = -(mu + 1/mu)/2 and sin(theta) = (mu - 1/mu)/(2i), so the
final Laurent polynomials in mu reduce to Chebyshev combinations.
"""

from __future__ import annotations

from fractions import Fraction

try:                                    # fast exact rationals when available
    from gmpy2 import mpq as _Q
except ImportError:                     # pragma: no cover
    _Q = Fraction

from .rings import ThetaElem, cheb_t, cheb_u

__all__ = ["GQ", "GQ_ZERO", "GQ_ONE", "GQ_I", "LaurentL", "QL", "QL_ZERO",
           "QL_ONE", "laurent_to_ql", "ql_to_theta_elem"]


class GQ:
    """Gaussian rational a + b i (components are gmpy2.mpq when available)."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, Fraction):
            re = _Q(re.numerator, re.denominator)
        if isinstance(im, Fraction):
            im = _Q(im.numerator, im.denominator)
        self.re = _Q(re)
        self.im = _Q(im)

    @staticmethod
    def _make(re, im):
        r = GQ.__new__(GQ)
        r.re = re
        r.im = im
        return r

    def re_fraction(self):
        return Fraction(int(self.re.numerator), int(self.re.denominator))

    def im_fraction(self):
        return Fraction(int(self.im.numerator), int(self.im.denominator))

    def __bool__(self):
        return bool(self.re or self.im)

    def __eq__(self, other):
        if not isinstance(other, GQ):
            other = GQ(other)
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __add__(self, other):
        if not isinstance(other, GQ):
            other = GQ(other)
        return GQ._make(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return GQ._make(-self.re, -self.im)

    def __sub__(self, other):
        if not isinstance(other, GQ):
            other = GQ(other)
        return GQ._make(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return GQ(other) - self

    def __mul__(self, other):
        if not isinstance(other, GQ):
            other = GQ(other)
        a, b = self.re, self.im
        c, d = other.re, other.im
        if not b and not d:
            return GQ._make(a * c, b)
        return GQ._make(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def inv(self):
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("1/0 in GQ")
        return GQ._make(self.re / n, -self.im / n)

    def __truediv__(self, other):
        if not isinstance(other, GQ):
            other = GQ(other)
        return self * other.inv()

    def conj(self):
        return GQ._make(self.re, -self.im)

    def __repr__(self):
        return f"GQ({self.re}, {self.im})"


GQ_ZERO = GQ(0)
GQ_ONE = GQ(1)
GQ_I = GQ(0, 1)


class LaurentL:
    """Laurent polynomial in lambda over GQ; sparse dict power -> GQ."""

    __slots__ = ("c",)

    def __init__(self, c=None):
        if c is None:
            self.c = {}
        elif isinstance(c, LaurentL):
            self.c = dict(c.c)
        elif isinstance(c, dict):
            self.c = {k: (v if isinstance(v, GQ) else GQ(v)) for k, v in c.items() if v}
        else:
            v = c if isinstance(c, GQ) else GQ(c)
            self.c = {0: v} if v else {}

    @staticmethod
    def lam(k=1, coef=GQ_ONE):
        return LaurentL({k: coef})

    def __bool__(self):
        return bool(self.c)

    def __eq__(self, other):
        if not isinstance(other, LaurentL):
            other = LaurentL(other)
        return self.c == other.c

    def __add__(self, other):
        if not isinstance(other, LaurentL):
            other = LaurentL(other)
        out = dict(self.c)
        for k, v in other.c.items():
            w = out.get(k, GQ_ZERO) + v
            if w:
                out[k] = w
            else:
                out.pop(k, None)
        r = LaurentL()
        r.c = out
        return r

    __radd__ = __add__

    def __neg__(self):
        r = LaurentL()
        r.c = {k: -v for k, v in self.c.items()}
        return r

    def __sub__(self, other):
        return self + (-(other if isinstance(other, LaurentL) else LaurentL(other)))

    def __mul__(self, other):
        if not isinstance(other, LaurentL):
            other = LaurentL(other)
        out = {}
        for i, x in self.c.items():
            for j, y in other.c.items():
                k = i + j
                w = out.get(k, GQ_ZERO) + x * y
                if w:
                    out[k] = w
                else:
                    out.pop(k, None)
        r = LaurentL()
        r.c = out
        return r

    __rmul__ = __mul__

    def scale(self, coef):
        if not isinstance(coef, GQ):
            coef = GQ(coef)
        r = LaurentL()
        r.c = {k: coef * v for k, v in self.c.items()} if coef else {}
        return r

    def __repr__(self):
        return f"LaurentL({self.c!r})"


# ----------------------------------------------------------------------
# rational-function field over lambda
# ----------------------------------------------------------------------

def _ptrim(p):
    p = list(p)
    while p and not p[-1]:
        p.pop()
    return p


def _padd(a, b):
    n = max(len(a), len(b))
    return _ptrim([(a[i] if i < len(a) else GQ_ZERO) + (b[i] if i < len(b) else GQ_ZERO)
                   for i in range(n)])


def _pmul(a, b):
    if not a or not b:
        return []
    out = [GQ_ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in enumerate(b):
            if y:
                out[i + j] = out[i + j] + x * y
    return _ptrim(out)


def _pscale(a, c):
    return _ptrim([c * x for x in a]) if c else []


def _pdivmod(a, b):
    if not b:
        raise ZeroDivisionError("poly division by zero")
    a = list(a)
    binv = b[-1].inv()
    q = [GQ_ZERO] * max(0, len(a) - len(b) + 1)
    for k in range(len(q) - 1, -1, -1):
        c = a[k + len(b) - 1] * binv
        q[k] = c
        if c:
            for j, y in enumerate(b):
                a[k + j] = a[k + j] - c * y
    return _ptrim(q), _ptrim(a)


# --- gcd via primitive PRS over Gaussian integers (no fraction blowup) ---

def _zi_gcd(u, v):
    """gcd of Gaussian integers (a, b) ~ a + b i, by rounded-division Euclid."""
    while v != (0, 0):
        a, b = u
        c, d = v
        n = c * c + d * d
        # u * conj(v) / |v|^2, rounded componentwise
        re = a * c + b * d
        im = b * c - a * d
        qr = (2 * re + n) // (2 * n)
        qi = (2 * im + n) // (2 * n)
        u, v = v, (a - (qr * c - qi * d), b - (qr * d + qi * c))
    return u


def _zi_content(p):
    g = (0, 0)
    for c in p:
        if c != (0, 0):
            g = c if g == (0, 0) else _zi_gcd(g, c)
            if g in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                return (1, 0)
    return g if g != (0, 0) else (1, 0)


def _zi_divexact(u, g):
    a, b = u
    c, d = g
    n = c * c + d * d
    re = a * c + b * d
    im = b * c - a * d
    assert re % n == 0 and im % n == 0
    return (re // n, im // n)


def _zi_mul(u, v):
    a, b = u
    c, d = v
    return (a * c - b * d, a * d + b * c)


def _zi_primpart(p):
    g = _zi_content(p)
    if g == (1, 0):
        return list(p)
    return [_zi_divexact(c, g) for c in p]


def _to_zi(p):
    """GQ-poly -> (primitive Gaussian-integer poly)."""
    den = 1
    for c in p:
        den = den * c.re.denominator // _igcd(den, c.re.denominator)
        den = den * c.im.denominator // _igcd(den, c.im.denominator)
    zi = [(int(c.re * den), int(c.im * den)) for c in p]
    return _zi_primpart(zi)


def _igcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _zi_prem(a, b):
    """Pseudo-remainder of Gaussian-integer polys."""
    a = list(a)
    lb = b[-1]
    k = len(a) - len(b) + 1
    for _ in range(k):
        if len(a) < len(b):
            break
        la = a[-1]
        a = [_zi_mul(c, lb) for c in a]
        shift = len(a) - len(b)
        for j, c in enumerate(b):
            m = _zi_mul(la, c)
            a[shift + j] = (a[shift + j][0] - m[0], a[shift + j][1] - m[1])
        while a and a[-1] == (0, 0):
            a.pop()
    return a


def _pgcd(a, b):
    a, b = _ptrim(a), _ptrim(b)
    if not a or not b:
        g = a or b
        return _pscale(g, g[-1].inv()) if g else []
    u, v = _to_zi(a), _to_zi(b)
    if len(u) < len(v):
        u, v = v, u
    while v:
        r = _zi_prem(u, v)
        u, v = v, _zi_primpart(r)
    # back to a monic GQ poly
    lead = u[-1]
    n = lead[0] * lead[0] + lead[1] * lead[1]
    out = []
    for (x, y) in u:
        out.append(GQ._make(_Q(x * lead[0] + y * lead[1], n),
                            _Q(y * lead[0] - x * lead[1], n)))
    return out


class QL:
    """Element of Q(i)(lambda): num/den with monic den, gcd-reduced."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, reduce=True):
        if isinstance(num, LaurentL):
            kmin = min(num.c) if num.c else 0
            p = [GQ_ZERO] * (max(num.c) - kmin + 1) if num.c else []
            for k, v in num.c.items():
                p[k - kmin] = v
            num = p
            base = den if den is not None else []
            den = _pmul([GQ_ZERO] * (-kmin) + [GQ_ONE], base or [GQ_ONE]) if kmin < 0 \
                else (base or [GQ_ONE])
            if kmin > 0:
                num = [GQ_ZERO] * kmin + num
        if den is None:
            den = [GQ_ONE]
        self.num = _ptrim(num)
        self.den = _ptrim(den)
        if not self.den:
            raise ZeroDivisionError("zero denominator")
        if reduce:
            self._reduce()

    def _reduce(self):
        if not self.num:
            self.den = [GQ_ONE]
            return
        # strip common lambda powers
        zn = next(i for i, c in enumerate(self.num) if c)
        zd = next(i for i, c in enumerate(self.den) if c)
        z = min(zn, zd)
        if z:
            self.num = self.num[z:]
            self.den = self.den[z:]
        g = _pgcd(self.num, self.den)
        if len(g) > 1:
            self.num = _pdivmod(self.num, g)[0]
            self.den = _pdivmod(self.den, g)[0]
        lead = self.den[-1]
        if lead != GQ_ONE:
            li = lead.inv()
            self.num = _pscale(self.num, li)
            self.den = _pscale(self.den, li)

    @staticmethod
    def const(v):
        return QL([v if isinstance(v, GQ) else GQ(v)])

    def __bool__(self):
        return bool(self.num)

    def __eq__(self, other):
        if not isinstance(other, QL):
            other = QL.const(other)
        return _ptrim(_padd(_pmul(self.num, other.den),
                            _pscale(_pmul(other.num, self.den), GQ(-1)))) == []

    def __add__(self, other):
        if not isinstance(other, QL):
            other = QL.const(other)
        return QL(_padd(_pmul(self.num, other.den), _pmul(other.num, self.den)),
                  _pmul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self):
        r = QL(self.num, self.den, reduce=False)
        r.num = _pscale(r.num, GQ(-1))
        return r

    def __sub__(self, other):
        return self + (-(other if isinstance(other, QL) else QL.const(other)))

    def __rsub__(self, other):
        return QL.const(other) - self

    def __mul__(self, other):
        if not isinstance(other, QL):
            other = QL.const(other)
        return QL(_pmul(self.num, other.num), _pmul(self.den, other.den))

    __rmul__ = __mul__

    def inv(self):
        if not self.num:
            raise ZeroDivisionError("1/0 in QL")
        return QL(self.den, self.num)

    def unit_inverse(self):
        """Series-layer hook: every nonzero field element is a unit."""
        return self.inv() if self.num else None

    def __truediv__(self, other):
        if not isinstance(other, QL):
            other = QL.const(other)
        return self * other.inv()

    def __repr__(self):
        return f"QL({self.num!r}/{self.den!r})"


QL_ZERO = QL.const(0)
QL_ONE = QL.const(1)


def laurent_to_ql(p: LaurentL) -> QL:
    return QL(p)


def ql_to_theta_elem(v: QL) -> ThetaElem:
    """Reduce an element known to lie in the trig ring to P(x) + s Q(x).

    The element must simplify to a Laurent polynomial in lambda supported on
    even powers (i.e. a Laurent polynomial in mu = lambda^2 = -e^{-i theta});
    symmetric/antisymmetric parts in mu <-> 1/mu become Chebyshev combinations:
    mu^k + mu^-k = 2(-1)^k T_k(x), mu^k - mu^-k = (-1)^(k+1) 2i sin(th) U_{k-1}(x).
    """
    num, den = v.num, v.den
    nz = [i for i, c in enumerate(den) if c]
    if len(nz) != 1:
        raise ValueError(f"not a Laurent polynomial in lambda: den={den!r}")
    shift = nz[0]
    scale = den[shift].inv()
    terms = {}
    for i, c in enumerate(num):
        if c:
            k = i - shift
            if k % 2:
                raise ValueError("odd lambda power; not in the trig ring")
            terms[k // 2] = c * scale
    even = ()
    odd = ()
    half = Fraction(1, 2)
    for k in sorted({abs(k) for k in terms}):
        a = terms.get(k, GQ_ZERO)
        b = terms.get(-k, GQ_ZERO) if k else GQ_ZERO
        if k == 0:
            if a.im:
                raise ValueError("imaginary residue in trig conversion")
            even = _tuple_add(even, _tuple_scale(cheb_t(0), a.re_fraction()))
            continue
        sym = (a + b) * GQ(half)        # coefficient of mu^k + mu^-k
        anti = (a - b) * GQ(half)       # coefficient of mu^k - mu^-k
        # mu^k + mu^-k = 2 (-1)^k T_k(x)
        if sym:
            if sym.im:
                raise ValueError("imaginary part in symmetric trig component")
            even = _tuple_add(even, _tuple_scale(cheb_t(k), 2 * sym.re_fraction() * (-1) ** k))
        # mu^k - mu^-k = (-1)^(k+1) 2 i s U_{k-1}(x)
        if anti:
            if anti.re:
                raise ValueError("real part in antisymmetric trig component")
            odd = _tuple_add(odd, _tuple_scale(cheb_u(k - 1), 2 * anti.im_fraction() * (-1) ** k))
    return ThetaElem(even, odd)


def _tuple_add(a, b):
    n = max(len(a), len(b))
    return tuple((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n))


def _tuple_scale(a, c):
    return tuple(c * x for x in a)
