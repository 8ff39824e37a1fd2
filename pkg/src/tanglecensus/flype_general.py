"""General-n census of prime alternating tangles.

The pipeline: two-particle-irreducible data D'_1, D'_2 as polynomials in the
renormalized 4-point functions (exact through weighted degree 8), the
channel decompositions with and without the flype correction, and the
order-by-order solve of the implicit census equations.  Counts come out as
polynomials in the loop marker n, one table row per crossing number.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .rings import NPoly, rat_to_str
from .series import (BiSeries, SingularLinearization, TruncSeries,
                     implicit_solve, series_geom, series_igeom)

__all__ = [
    "DPrimeModel",
    "CensusTable",
    "PAPER_DPRIME",
    "flyped_to_dprime",
    "unflyped_to_dprime",
    "renormalize",
    "solve_census",
    "solve_unflyped_census",
    "DivisibilityFailure",
]

_ZERO = NPoly()
_ONE = NPoly(1)


class DivisibilityFailure(ArithmeticError):
    """The 1/n step hit a series that is not divisible by n (upstream bug)."""


@dataclass(frozen=True)
class DPrimeModel:
    """Two polynomials in the formal pair (Gamma_1, Gamma_2) over NPoly.

    ``terms1``/``terms2`` map exponent pairs (a, b) to NPoly coefficients of
    Gamma_1^a Gamma_2^b.  ``order`` is the weighted validity degree with
    weights (1, 2): all terms of weighted degree <= order are exact, higher
    ones unknown.
    """

    terms1: dict
    terms2: dict
    order: int

    def __post_init__(self):
        for terms in (self.terms1, self.terms2):
            for (a, b) in terms:
                wd = a + 2 * b
                if wd < 5:
                    raise ValueError("2PI skeletons start at five crossings")

    def evaluate(self, g1, g2):
        """Evaluate both polynomials at series (works for TruncSeries/BiSeries)."""
        out = []
        for terms in (self.terms1, self.terms2):
            acc = None
            for (a, b), c in sorted(terms.items()):
                term = None
                for _ in range(a):
                    term = g1 if term is None else term * g1
                for _ in range(b):
                    term = g2 if term is None else term * g2
                term = term.scale(c)
                acc = term if acc is None else acc + term
            if acc is None:
                acc = g1.scale(_ZERO)
            out.append(acc)
        return out[0], out[1]


def _n_plus(k):
    return NPoly({1: 1, 0: k})


#: Exact 2PI data through weighted degree 8 (weights: Gamma_1 -> 1, Gamma_2 -> 2).
PAPER_DPRIME = DPrimeModel(
    terms1={
        (5, 0): NPoly.n(),
        (4, 1): NPoly(8),
        (3, 2): NPoly({1: 4, 0: 4}),
        (2, 3): NPoly(24),
        (6, 1): NPoly(16),
    },
    terms2={
        (4, 1): NPoly.n(),
        (7, 0): NPoly(2),
        (3, 2): NPoly(16),
        (2, 3): NPoly({1: 8, 0: 20}),
        (6, 1): NPoly({1: 6, 0: 14}),
        (8, 0): NPoly(3),
    },
    order=8,
)


def _div_n(series):
    """Coefficient-wise exact division by the marker n."""
    def f(c):
        try:
            return c.divexact_n()
        except Exception as exc:
            raise DivisibilityFailure(str(exc)) from exc
    if isinstance(series, TruncSeries):
        return series.map_coeffs(f)
    return BiSeries(series.vars, series.weights,
                    {jk: f(v) for jk, v in series.coeffs.items()},
                    series.order, series.zero)


def unflyped_to_dprime(gamma1, gamma2, g1, g2):
    """2PI data from the channel decompositions without the flype correction.

    gamma_i and the coupling series g_i live in the same series algebra; the
    result is (D'_1, D'_2) = (H_1 + V_1 - Gamma_1 - g_1, H_2 + V_2 - Gamma_2 - g_2).
    """
    gp = gamma2 + gamma1
    gm = gamma2 - gamma1
    g0 = gamma1 + gamma2.scale(_n_plus(1))
    hp = series_igeom(gp)
    hm = series_igeom(gm)
    h0 = series_igeom(g0)
    h1 = (hp - hm).scale(Fraction(1, 2))
    h2 = (hp + hm).scale(Fraction(1, 2))
    v2 = _div_n(h0 - hp)
    d1 = h1.scale(2) - gamma1 - g1
    d2 = h2 + v2 - gamma2 - g2
    return d1, d2


def flyped_to_dprime(gamma1, gamma2, g):
    """2PI data from the flype-corrected channel decompositions.

    ``g`` is the renormalized-coupling series (g itself for the census solve).
    The inversion uses the index convention consistent with the chained
    relations and the definitional form D~'_i = H~_i + V~_i - Gamma~_i - g_i
    with (g_1, g_2) = (g, 0); it reproduces the census tables exactly.
    """
    gp = gamma2 + gamma1
    gm = gamma2 - gamma1
    g0 = gamma1 + gamma2.scale(_n_plus(1))
    yp = gp - g * gp - g
    ym = gm + g * gm + g
    y0 = g0 - g * g0 - g
    hp = series_igeom(yp)   # H~'_+ = H~_2 + H~'_1
    hm = series_igeom(ym)   # H~'_- = H~_2 - H~'_1
    h0 = series_igeom(y0)   # H~'_0 = H~_0 - g
    h1p = (hp - hm).scale(Fraction(1, 2))   # H~'_1 = H~_1 - g
    h2 = (hp + hm).scale(Fraction(1, 2))    # H~_2
    v2 = _div_n(h0 - hp)                    # V~_2
    d1 = h1p.scale(2) - gamma1 + g          # 2 H~_1 - Gamma~_1 - g
    d2 = h2 + v2 - gamma2
    return d1, d2


@dataclass
class CensusTable:
    """Flype-class counts per crossing number, as polynomials in n."""

    max_crossings: int
    type1: list = field(default_factory=list)   # index p-1 -> NPoly
    type2: list = field(default_factory=list)
    t_series: object = None                      # TruncSeries over NPoly or None
    flyped: bool = True

    def check_invariants(self):
        assert len(self.type1) == self.max_crossings
        assert len(self.type2) == self.max_crossings
        for p, (a, b) in enumerate(zip(self.type1, self.type2), start=1):
            for v in (a, b):
                if not v.is_nonneg_integer():
                    raise AssertionError(f"negative/fractional census entry at p={p}")
                if v.degree() > p - 1:
                    raise AssertionError(f"loop degree exceeds p-1 at p={p}")
        if self.type1[1]:
            raise AssertionError("type-1 entry at p=2 must vanish")
        if self.t_series is not None and self.t_series.coeffs[0] != _ONE:
            raise AssertionError("t(g) must have constant term 1")

    def observed_degree_bound(self):
        """Report (not assert) the tightest k with deg <= floor((p-k)/?) pattern."""
        worst = 0
        for p in range(1, self.max_crossings + 1):
            d = max(self.type1[p - 1].degree(), self.type2[p - 1].degree(), 0)
            if p > 1:
                worst = max(worst, Fraction(d, p - 1))
        return worst

    def to_json(self):
        doc = {
            "max_crossings": self.max_crossings,
            "flyped": self.flyped,
            "type1": [{"p": p + 1, "npoly": v.to_json()} for p, v in enumerate(self.type1)],
            "type2": [{"p": p + 1, "npoly": v.to_json()} for p, v in enumerate(self.type2)],
            "t_series": (self.t_series.to_json(lambda c: c.to_json())
                         if self.t_series is not None else None),
        }
        return doc

    def to_csv(self):
        lines = ["p,type,k,count"]
        for typ, col in ((1, self.type1), (2, self.type2)):
            for p, v in enumerate(col, start=1):
                for k in sorted(v.c):
                    lines.append(f"{p},{typ},{k},{rat_to_str(v.c[k])}")
        return "\n".join(lines) + "\n"

    def to_text(self):
        head = ["       "] + [f"g^{p}" for p in range(1, self.max_crossings + 1)]
        row1 = ["type 1 "] + [v.text() if v else "" for v in self.type1]
        row2 = ["type 2 "] + [v.text() if v else "" for v in self.type2]
        widths = [max(len(r[i]) for r in (head, row1, row2)) for i in range(len(head))]
        out = []
        for r in (head, row1, row2):
            out.append("  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip())
        return "\n".join(out) + "\n"


def _g_monomial(order):
    return TruncSeries.monomial("g", 1, order, _ZERO, _ONE)


def solve_census(dp: DPrimeModel, max_crossings: int, t_series=None) -> CensusTable:
    """Solve the flype-corrected implicit census equations through g^P."""
    if max_crossings > dp.order:
        raise ValueError(f"requested order {max_crossings} beyond 2PI validity {dp.order}")
    g = _g_monomial(max_crossings)

    def residuals(unknowns):
        g1t, g2t = unknowns
        d1, d2 = flyped_to_dprime(g1t, g2t, g)
        p1, p2 = dp.evaluate(g1t, g2t)
        return [d1 - p1, d2 - p2]

    g1t, g2t = implicit_solve(residuals, [1, 2], max_crossings, "g",
                              _ZERO, _ONE, offsets=[1, 2])
    table = CensusTable(
        max_crossings,
        type1=[g1t.coeffs[p] for p in range(1, max_crossings + 1)],
        type2=[g2t.coeffs[p] for p in range(1, max_crossings + 1)],
        t_series=t_series,
        flyped=True,
    )
    table.check_invariants()
    return table


def solve_unflyped_census(dp: DPrimeModel, max_crossings: int) -> CensusTable:
    """Diagram counts (flype correction disabled): D_i - g_i = D'_i[Gamma]."""
    if max_crossings > dp.order:
        raise ValueError(f"requested order {max_crossings} beyond 2PI validity {dp.order}")
    g = _g_monomial(max_crossings)
    zero_series = TruncSeries.zero_series("g", max_crossings, _ZERO)

    def residuals(unknowns):
        g1t, g2t = unknowns
        d1, d2 = unflyped_to_dprime(g1t, g2t, g, zero_series)
        p1, p2 = dp.evaluate(g1t, g2t)
        return [d1 - p1, d2 - p2]

    g1t, g2t = implicit_solve(residuals, [1, 2], max_crossings, "g",
                              _ZERO, _ONE, offsets=[1, 2])
    table = CensusTable(
        max_crossings,
        type1=[g1t.coeffs[p] for p in range(1, max_crossings + 1)],
        type2=[g2t.coeffs[p] for p in range(1, max_crossings + 1)],
        flyped=False,
    )
    return table


def renormalize(family: dict, two_point: str = "G", iterations=None):
    """Renormalize a bare two-coupling family so the two-point function is 1.

    ``family`` maps names to BiSeries in the bare couplings at t = 1; the
    entry ``two_point`` is G.  Returns (renormalized family, t) where
    t(g1, g2) solves t = G(g1/t^2, g2/t^2) and every other entry X is replaced
    by t^{-2} X(g1/t^2, g2/t^2) (4-point scaling; both couplings scale by
    t^{-2}).
    """
    G = family[two_point]
    if G.coeff(0, 0) != _ONE:
        raise ValueError("Gaussian normalization G(0,0) = 1 required")
    order = G.order
    vars_, weights = G.vars, G.weights
    x1 = BiSeries.coordinate(vars_, weights, 0, order, _ZERO, _ONE)
    x2 = BiSeries.coordinate(vars_, weights, 1, order, _ZERO, _ONE)
    t = BiSeries(vars_, weights, {(0, 0): _ONE}, order, _ZERO)
    rounds = iterations if iterations is not None else order + 1
    for _ in range(rounds):
        tm2 = _bi_inverse(t * t)
        t = G.substitute(x1 * tm2, x2 * tm2, _ONE)
    tm2 = _bi_inverse(t * t)
    a1, a2 = x1 * tm2, x2 * tm2
    out = {}
    for name, X in family.items():
        sub = X.substitute(a1, a2, _ONE)
        out[name] = sub * tm2 if name != two_point else sub * _bi_inverse(t)
    return out, t


def _bi_inverse(b):
    """1/b for a BiSeries with unit constant term."""
    c0 = b.coeff(0, 0)
    if c0 != _ONE:
        raise ValueError("inverse needs constant term 1")
    h = b - _ONE
    if not h.coeffs:
        return b
    acc = BiSeries(b.vars, b.weights, {(0, 0): _ONE}, b.order, b.zero)
    power = None
    sign = -1
    v = h.valuation()
    m = 1
    while m * v <= b.order:
        power = h if power is None else power * h
        acc = acc + (power.scale(-1) if sign < 0 else power)
        sign = -sign
        m += 1
    return acc
