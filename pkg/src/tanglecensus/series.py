"""Truncated power series over an exact ring.

The census pipelines only ever manipulate truncated series: a coefficient
beyond the tracked order is an error, never a silent zero.  Orders propagate
through every operation (multiplication and composition gain trust from the
valuations of the operands).

``TruncSeries`` is univariate; ``BiSeries`` covers the two-coupling model
with a weighted total-degree cutoff.  ``implicit_solve`` is the order-by-order
Newton solver behind both census fixed points.
"""

from __future__ import annotations

from fractions import Fraction

from .rings import NPoly, ThetaElem

__all__ = [
    "TruncSeries",
    "BiSeries",
    "OrderError",
    "NonzeroConstantTerm",
    "NonUnitLeadingCoefficient",
    "SingularLinearization",
    "series_geom",
    "series_igeom",
    "implicit_solve",
]


class OrderError(IndexError):
    """Coefficient requested beyond the trusted truncation order."""


class NonzeroConstantTerm(ValueError):
    pass


class NonUnitLeadingCoefficient(ValueError):
    pass


class SingularLinearization(ArithmeticError):
    def __init__(self, order, detail=""):
        super().__init__(f"singular linearization at order {order}" +
                         (f": {detail}" if detail else ""))
        self.order = order


def _unit_inv(c):
    """Inverse of a unit coefficient; None when not a unit."""
    if isinstance(c, Fraction):
        return Fraction(1) / c if c != 0 else None
    if isinstance(c, int):
        return Fraction(1, c) if c != 0 else None
    if isinstance(c, NPoly):
        if set(c.c) == {0}:
            return NPoly(Fraction(1) / c.c[0])
        return None
    if isinstance(c, ThetaElem):
        if not c.odd and len(c.even) == 1:
            return ThetaElem.const(Fraction(1) / c.even[0])
        return None
    inv = getattr(c, "unit_inverse", None)
    return inv() if inv is not None else None


class TruncSeries:
    """Series sum_{k<=order} c_k var^k, trusted exactly through ``order``."""

    __slots__ = ("var", "coeffs", "order", "zero")

    def __init__(self, var, coeffs, order, zero):
        self.var = var
        self.zero = zero
        self.order = order
        c = list(coeffs[:order + 1])
        while len(c) < order + 1:
            c.append(zero)
        self.coeffs = c

    @staticmethod
    def zero_series(var, order, zero):
        return TruncSeries(var, [], order, zero)

    @staticmethod
    def monomial(var, k, order, zero, one):
        c = [zero] * (order + 1)
        if k <= order:
            c[k] = one
        return TruncSeries(var, c, order, zero)

    def coeff(self, k):
        if k < 0:
            return self.zero
        if k > self.order:
            raise OrderError(f"coefficient {self.var}^{k} beyond trusted order {self.order}")
        return self.coeffs[k]

    def valuation(self):
        for k, c in enumerate(self.coeffs):
            if c != self.zero:
                return k
        return self.order + 1

    def truncate(self, order):
        if order > self.order:
            raise OrderError(f"cannot extend truncation {self.order} -> {order}")
        return TruncSeries(self.var, self.coeffs[:order + 1], order, self.zero)

    def _check(self, other):
        if self.var != other.var:
            raise ValueError(f"variable mismatch: {self.var} vs {other.var}")

    def __add__(self, other):
        if not isinstance(other, TruncSeries):
            c = list(self.coeffs)
            c[0] = c[0] + other
            return TruncSeries(self.var, c, self.order, self.zero)
        self._check(other)
        order = min(self.order, other.order)
        return TruncSeries(self.var,
                           [self.coeffs[k] + other.coeffs[k] for k in range(order + 1)],
                           order, self.zero)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        return TruncSeries(self.var, [c * x for x in self.coeffs], self.order, self.zero)

    def __mul__(self, other):
        if not isinstance(other, TruncSeries):
            return self.scale(other)
        self._check(other)
        va, vb = self.valuation(), other.valuation()
        order = min(self.order + vb, other.order + va, self.order + other.order)
        out = [self.zero] * (order + 1)
        for i, x in enumerate(self.coeffs):
            if x == self.zero:
                continue
            jmax = min(other.order, order - i)
            for j in range(jmax + 1):
                y = other.coeffs[j]
                if y != self.zero:
                    out[i + j] = out[i + j] + x * y
        return TruncSeries(self.var, out, order, self.zero)

    __rmul__ = __mul__

    def shift(self, k):
        """Multiply by var^k (k may be negative when the valuation allows)."""
        if k >= 0:
            return TruncSeries(self.var, [self.zero] * k + self.coeffs,
                               self.order + k, self.zero)
        if self.valuation() < -k:
            raise ValueError("negative shift below valuation")
        return TruncSeries(self.var, self.coeffs[-k:], self.order + k, self.zero)

    def inverse(self, one):
        """1/self for unit constant term."""
        c0 = self.coeffs[0]
        inv0 = _unit_inv(c0)
        if inv0 is None:
            raise NonUnitLeadingCoefficient("inverse needs a unit constant term")
        out = [self.zero] * (self.order + 1)
        out[0] = one * inv0
        for k in range(1, self.order + 1):
            acc = self.zero
            for j in range(1, k + 1):
                acc = acc + self.coeffs[j] * out[k - j]
            out[k] = -(inv0 * acc)
        return TruncSeries(self.var, out, self.order, self.zero)

    def divide(self, other, one):
        """self/other with exact valuation cancellation."""
        vb = other.valuation()
        if vb == 0:
            return self * other.inverse(one)
        num = self.shift(-vb) if self.valuation() >= vb else None
        if num is None:
            raise ValueError("division would produce a pole")
        return num * other.shift(-vb).inverse(one)

    def compose(self, u):
        """self(u); u must have zero constant term unless self is short."""
        self._check(u)
        vu = u.valuation()
        if vu == 0:
            raise NonzeroConstantTerm("inner series has a nonzero constant term")
        vf = self.valuation()
        order = min((self.order + 1) * vu - 1,
                    u.order + max(vf - 1, 0) * vu)
        out = TruncSeries.zero_series(self.var, order, self.zero) + self.coeffs[0]
        upow = None
        for k in range(1, min(self.order, order // vu) + 1):
            upow = u if upow is None else upow * u
            if upow.order > order:
                upow = upow.truncate(order)
            c = self.coeffs[k]
            if c != self.zero:
                out = out + upow.scale(c)
        return out

    def revert(self, one):
        """Compositional inverse of a series with valuation exactly 1."""
        if self.valuation() != 1:
            raise NonUnitLeadingCoefficient("reversion needs valuation 1")
        c1inv = _unit_inv(self.coeffs[1])
        if c1inv is None:
            raise NonUnitLeadingCoefficient("leading coefficient is not a unit")
        order = self.order
        g = [self.zero] * (order + 1)
        g[1] = one * c1inv
        gs = TruncSeries(self.var, g, order, self.zero)
        for k in range(2, order + 1):
            comp = self.compose(gs)
            g[k] = -(c1inv * comp.coeffs[k])
            gs = TruncSeries(self.var, g, order, self.zero)
        return gs

    def differentiate(self):
        return TruncSeries(self.var,
                           [(k + 1) * self.coeffs[k + 1] for k in range(self.order)],
                           self.order - 1, self.zero)

    def integrate(self):
        """Antiderivative with zero constant term (coefficients divided by k)."""
        out = [self.zero]
        for k, c in enumerate(self.coeffs):
            out.append(c * Fraction(1, k + 1))
        return TruncSeries(self.var, out, self.order + 1, self.zero)

    def map_coeffs(self, f, zero=None):
        z = self.zero if zero is None else zero
        return TruncSeries(self.var, [f(c) for c in self.coeffs], self.order, z)

    def pad_zero(self, order):
        """Extend with genuine zeros (use only when higher terms vanish identically)."""
        if order <= self.order:
            return self.truncate(order)
        return TruncSeries(self.var, self.coeffs + [self.zero] * (order - self.order),
                           order, self.zero)

    def to_json(self, ser):
        return {"var": self.var, "order": self.order,
                "coeffs": [ser(c) for c in self.coeffs]}

    def __eq__(self, other):
        return (isinstance(other, TruncSeries) and self.var == other.var
                and self.order == other.order and self.coeffs == other.coeffs)

    def __repr__(self):
        return f"TruncSeries({self.var}; {self.coeffs!r}; O({self.var}^{self.order + 1}))"


def series_geom(h, one=None):
    """h/(1-h) = sum_{m>=1} h^m for a series with zero constant term."""
    if h.valuation() == 0:
        raise NonzeroConstantTerm("geometric sum needs valuation >= 1")
    acc = h
    power = h
    v = h.valuation()
    m = 1
    while (m + 1) * v <= _order_of(h):
        power = power * h
        acc = acc + power
        m += 1
    return acc


def series_igeom(g, one=None):
    """g/(1+g): the exact inverse of series_geom."""
    if g.valuation() == 0:
        raise NonzeroConstantTerm("inverse geometric sum needs valuation >= 1")
    acc = g
    power = g
    v = g.valuation()
    m = 1
    while (m + 1) * v <= _order_of(g):
        power = power * g
        acc = acc + (power if (m + 1) % 2 else power.scale(-1))
        m += 1
    return acc


def _order_of(s):
    return s.order


class BiSeries:
    """Bivariate series with a weighted total-degree truncation.

    ``weights`` assigns each variable its weight in the truncation functional;
    coefficient (j, k) is trusted when w1*j + w2*k <= order.  The census rule
    "Gamma_1 ~ g, Gamma_2 ~ g^2" is the weight vector (1, 2).
    """

    __slots__ = ("vars", "weights", "coeffs", "order", "zero")

    def __init__(self, vars, weights, coeffs, order, zero):
        self.vars = tuple(vars)
        self.weights = tuple(weights)
        self.order = order
        self.zero = zero
        self.coeffs = {jk: v for jk, v in coeffs.items()
                       if v != zero and self._wdeg(jk) <= order}

    def _wdeg(self, jk):
        return self.weights[0] * jk[0] + self.weights[1] * jk[1]

    @staticmethod
    def zero_series(vars, weights, order, zero):
        return BiSeries(vars, weights, {}, order, zero)

    @staticmethod
    def coordinate(vars, weights, idx, order, zero, one):
        jk = (1, 0) if idx == 0 else (0, 1)
        return BiSeries(vars, weights, {jk: one}, order, zero)

    def coeff(self, j, k):
        if self._wdeg((j, k)) > self.order:
            raise OrderError(f"coefficient ({j},{k}) beyond weighted order {self.order}")
        return self.coeffs.get((j, k), self.zero)

    def valuation(self):
        if not self.coeffs:
            return self.order + 1
        return min(self._wdeg(jk) for jk in self.coeffs)

    def truncate(self, order):
        if order > self.order:
            raise OrderError("cannot extend truncation")
        return BiSeries(self.vars, self.weights, self.coeffs, order, self.zero)

    def __add__(self, other):
        if not isinstance(other, BiSeries):
            out = dict(self.coeffs)
            out[(0, 0)] = out.get((0, 0), self.zero) + other
            return BiSeries(self.vars, self.weights, out, self.order, self.zero)
        order = min(self.order, other.order)
        out = dict(self.coeffs)
        for jk, v in other.coeffs.items():
            out[jk] = out.get(jk, self.zero) + v
        return BiSeries(self.vars, self.weights, out, order, self.zero)

    __radd__ = __add__

    def scale(self, c):
        return BiSeries(self.vars, self.weights,
                        {jk: c * v for jk, v in self.coeffs.items()},
                        self.order, self.zero)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, BiSeries):
            return self.scale(other)
        order = min(self.order + other.valuation(),
                    other.order + self.valuation(),
                    self.order + other.order)
        out = {}
        for (j1, k1), x in self.coeffs.items():
            for (j2, k2), y in other.coeffs.items():
                jk = (j1 + j2, k1 + k2)
                if self._wdeg(jk) > order:
                    continue
                out[jk] = out.get(jk, self.zero) + x * y
        return BiSeries(self.vars, self.weights, out, order, self.zero)

    __rmul__ = __mul__

    def substitute(self, a, b, one):
        """Evaluate at var1 = a, var2 = b (both BiSeries with valuation >= 1)."""
        order = min(self.order, a.order, b.order)
        acc = BiSeries.zero_series(a.vars, a.weights, order, self.zero)
        apow = {0: None}
        bpow = {0: None}

        def power(base, cache, m):
            if m == 0:
                return None
            if m not in cache:
                cache[m] = power(base, cache, m - 1) * base if m > 1 else base
            return cache[m]

        for (j, k), c in sorted(self.coeffs.items()):
            term = None
            if j:
                term = power(a, apow, j)
            if k:
                bk = power(b, bpow, k)
                term = bk if term is None else term * bk
            if term is None:
                acc = acc + c
            else:
                acc = acc + term.scale(c)
        return acc

    def subs_univariate(self, g1, g2):
        """Evaluate at univariate TruncSeries (g1, g2); returns a TruncSeries."""
        order = min(g1.order, g2.order)
        acc = TruncSeries.zero_series(g1.var, order, self.zero)
        for (j, k), c in sorted(self.coeffs.items()):
            term = None
            for _ in range(j):
                term = g1 if term is None else term * g1
            for _ in range(k):
                term = g2 if term is None else term * g2
            if term is None:
                acc = acc + c
            else:
                if term.order > order:
                    term = term.truncate(order)
                acc = acc + term.scale(c)
        return acc

    def __eq__(self, other):
        return (isinstance(other, BiSeries) and self.order == other.order
                and self.coeffs == other.coeffs)

    def __repr__(self):
        items = ", ".join(f"{jk}:{v!r}" for jk, v in sorted(self.coeffs.items()))
        return f"BiSeries({self.vars}, w={self.weights}, O_w({self.order + 1}); {items})"


def implicit_solve(residuals, unknowns, order, var, zero, one, offsets=None):
    """Solve residuals(u_1..u_m) = 0 order by order in ``var``.

    ``residuals``: callable taking the list of current unknown TruncSeries and
    returning the list of residual TruncSeries (same length m).
    ``unknowns``: list of declared leading valuations; unknown j pairs with
    residual j.  ``offsets``: per-residual equation offsets (residual j's
    coefficient at order offsets[j] + step - 1 determines unknown j's
    coefficient at order unknowns[j] + step - 1); probed when omitted.

    Within a step the unknowns are updated sequentially (Gauss-Seidel), which
    resolves staggered linearizations exactly; a vanishing or non-unit pivot
    raises SingularLinearization (never silently regularized).  The solved
    series are verified by back-substitution through the full order.
    """
    m = len(unknowns)
    vals = list(unknowns)
    cur = [TruncSeries.zero_series(var, order, zero) for _ in range(m)]
    determined = [vals[j] - 1 for j in range(m)]

    def with_coeff(series, k, value):
        c = list(series.coeffs)
        c[k] = value
        return TruncSeries(var, c, order, zero)

    det_offsets = list(offsets) if offsets is not None else [None] * m
    if any(o is None for o in det_offsets):
        # probe each unknown's leading sensitivity at the zero state;
        # adequate for diagonal systems (staggered ones pass offsets)
        base0 = residuals(cur)
        for j in range(m):
            if det_offsets[j] is not None:
                continue
            probe = list(cur)
            probe[j] = with_coeff(cur[j], vals[j], one)
            col = residuals(probe)[j] - base0[j]
            sens = next((o for o in range(col.order + 1) if col.coeffs[o] != zero), None)
            if sens is None:
                raise SingularLinearization(vals[j], f"residual {j} insensitive to unknown {j}")
            det_offsets[j] = sens

    # one coefficient per (equation order, unknown), swept in ascending
    # equation order so every dependency is already resolved when read
    schedule = sorted((det_offsets[j] + (uord - vals[j]), j, uord)
                      for j in range(m) for uord in range(vals[j], order + 1))
    for eord, j, uord in schedule:
        base = residuals(cur)
        if eord > base[j].order:
            continue        # beyond residual trust; coefficient stays undetermined
        probe = list(cur)
        probe[j] = with_coeff(cur[j], uord, cur[j].coeffs[uord] + one)
        pert = residuals(probe)
        col = pert[j] - base[j]
        pivot = col.coeffs[eord] if eord <= col.order else zero
        pinv = _unit_inv(pivot)
        if pinv is None:
            raise SingularLinearization(eord, f"pivot for unknown {j} is not a unit")
        delta = pinv * (-base[j].coeffs[eord])
        if delta != zero:
            cur[j] = with_coeff(cur[j], uord, cur[j].coeffs[uord] + delta)
        determined[j] = uord

    final = residuals(cur)
    for i, r in enumerate(final):
        upper = min(r.order, det_offsets[i] + (determined[i] - vals[i]))
        for k in range(upper + 1):
            if r.coeffs[k] != zero:
                raise SingularLinearization(k, f"residual {i} does not vanish after solve")
    return [cur[j].truncate(determined[j]) for j in range(m)]


def _ring_linsolve(A, rhs, zero, one, order):
    """Gaussian elimination over the coefficient ring with unit pivots."""
    n = len(A)
    M = [row[:] + [rhs[i]] for i, row in enumerate(A)]
    perm = list(range(n))
    for col in range(n):
        piv, pinv = None, None
        for r in range(col, n):
            inv = _unit_inv(M[r][col])
            if inv is not None:
                piv, pinv = r, inv
                break
        if piv is None:
            raise SingularLinearization(order, "no unit pivot in linearization")
        M[col], M[piv] = M[piv], M[col]
        M[col] = [pinv * v for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != zero:
                f = M[r][col]
                M[r] = [M[r][c] - f * M[col][c] for c in range(n + 1)]
    return [M[i][n] for i in range(n)]
