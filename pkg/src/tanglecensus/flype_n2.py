"""Oriented (n = 2) census of prime alternating tangles.

Solves the flype-corrected six-vertex relations order by order in the
renormalized coupling g: the two unknown series are tau(g) = q^2(g) and
dtheta(g) = theta(g) - pi/2, determined so that the flyped 2PI data computed
from Gamma~_b, Gamma~_c coincide with the bare bundle's D'_b, D'_c along the
curve.  Everything here is exact rational arithmetic; the bundle's ThetaElem
coefficients are evaluated at x = -sin(dtheta), s = cos(dtheta) as exact
power series in g.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .rings import rat_to_str, rat_from_str, ThetaElem
from .series import TruncSeries, implicit_solve, series_igeom
from .sixvertex import BareSeriesBundle

__all__ = ["OrientedCensus", "tilde_relations_n2", "solve_oriented"]

_F0 = Fraction(0)
_F1 = Fraction(1)

ROW_NAMES = ("q2", "dtheta", "b", "c", "g1", "g2",
             "gamma_b", "gamma_c", "gamma_1", "gamma_2")


def tilde_relations_n2(gamma_b, gamma_c, g):
    """Flyped 2PI data (D~'_b, D~'_c) from the oriented channel relations.

    H~'_b = igeom(Gamma~_b - g(1+Gamma~_b));
    V~_c +- V~'_b = igeom((1 -+ g)(Gamma~_c +- Gamma~_b) -+ g);
    closure H~_c = V~_c;
    D~'_b = H~'_b + V~'_b - Gamma~_b + g,  D~'_c = 2 V~_c - Gamma~_c.
    """
    hbp = series_igeom(gamma_b - g * (gamma_b + 1))
    sp = gamma_c + gamma_b
    sm = gamma_c - gamma_b
    vp = series_igeom(sp - g * sp - g)
    vm = series_igeom(sm + g * sm + g)
    vbp = (vp - vm).scale(Fraction(1, 2))
    vc = (vp + vm).scale(Fraction(1, 2))
    dpb = hbp + vbp - gamma_b + g
    dpc = vc.scale(2) - gamma_c
    return dpb, dpc


def _sin_cos_of(series):
    """Exact (sin, cos) Taylor series of a series with zero constant term."""
    order = series.order
    zero, one = series.zero, _F1
    sin_acc = TruncSeries.zero_series(series.var, order, zero)
    cos_acc = TruncSeries.zero_series(series.var, order, zero) + one
    power = None
    fact = Fraction(1)
    for k in range(1, order + 1):
        power = series if power is None else power * series
        if power.order > order:
            power = power.truncate(order)
        fact *= k
        if k % 2 == 1:
            term = power.scale(Fraction((-1) ** ((k - 1) // 2), 1) / fact)
            sin_acc = sin_acc + term
        else:
            term = power.scale(Fraction((-1) ** (k // 2), 1) / fact)
            cos_acc = cos_acc + term
    return sin_acc, cos_acc


class _BundleEvaluator:
    """Evaluates bundle tau-series along (tau(g), dtheta(g)) curves."""

    def __init__(self, bundle: BareSeriesBundle, names):
        self.series = {n: getattr(bundle, n) for n in names}

    def __call__(self, name, tau_g, x_g, s_g):
        src = self.series[name]
        order = tau_g.order
        acc = TruncSeries.zero_series(tau_g.var, order, _F0)
        tpow = None
        for k in range(0, src.order + 1):
            if k > 0:
                tpow = tau_g if tpow is None else tpow * tau_g
                if tpow.order > order:
                    tpow = tpow.truncate(order)
                if tpow.valuation() > order:
                    break
            c = src.coeffs[k]
            if not c:
                continue
            if not c.odd and len(c.even) <= 1:
                # constant coefficient: no theta dependence to compose
                const = c.even[0] if c.even else _F0
                acc = acc + (tpow.scale(const) if k else const)
                continue
            cf = c.subs_series(x_g, s_g)
            if k == 0:
                acc = acc + cf
            else:
                acc = acc + tpow * cf
        return acc


@dataclass
class OrientedCensus:
    """Rows of the oriented census through g^order (exact rationals)."""

    order: int
    rows: dict = field(default_factory=dict)

    def gamma_b_coeffs(self):
        return self.rows["gamma_b"]

    def check_invariants(self):
        r = self.rows
        for name in ROW_NAMES:
            assert name in r, name
            want = self.order if name != "dtheta" else (self.order, self.order - 1)
            if name == "dtheta":
                assert len(r[name]) in want, name
            else:
                assert len(r[name]) == self.order, name
        for name in ("gamma_b", "gamma_c"):
            for v in r[name]:
                if v.denominator != 1 or v < 0:
                    raise AssertionError(f"{name} entry {v} is not a nonnegative integer")
        for p in range(self.order):
            if r["gamma_1"][p] != r["gamma_b"][p] - r["gamma_c"][p] / 2:
                raise AssertionError("gamma_1 != gamma_b - gamma_c/2")
            if r["gamma_2"][p] != r["gamma_c"][p] / 2:
                raise AssertionError("gamma_2 != gamma_c/2")
            if r["g1"][p] + r["g2"][p] != r["b"][p]:
                raise AssertionError("g1 + g2 != b")
            if 2 * r["g2"][p] != r["c"][p]:
                raise AssertionError("2*g2 != c")

    def to_json(self):
        return {"order": self.order,
                "rows": {k: [rat_to_str(v) for v in vs] for k, vs in self.rows.items()}}

    @staticmethod
    def from_json(doc):
        rows = {k: [rat_from_str(v) for v in vs] for k, vs in doc["rows"].items()}
        return OrientedCensus(order=doc["order"], rows=rows)

    def to_csv(self):
        lines = ["row," + ",".join(f"g^{p}" for p in range(1, self.order + 1))]
        for name in ROW_NAMES:
            vals = [rat_to_str(v) for v in self.rows[name]]
            vals += [""] * (self.order - len(vals))
            lines.append(name + "," + ",".join(vals))
        return "\n".join(lines) + "\n"

    def to_text(self):
        def fmt(v):
            return str(v.numerator) if v.denominator == 1 else str(v)
        cols = ["order"] + [str(p) for p in range(1, self.order + 1)]
        table = [cols]
        for name in ROW_NAMES:
            vals = [fmt(v) for v in self.rows[name]]
            vals += [""] * (self.order - len(vals))
            table.append([name] + vals)
        widths = [max(len(row[i]) for row in table) for i in range(len(cols))]
        return "\n".join("  ".join(s.rjust(w) for s, w in zip(row, widths))
                         for row in table) + "\n"


def solve_oriented(max_crossings: int, bundle: BareSeriesBundle) -> OrientedCensus:
    """Determine tau(g), dtheta(g) and assemble the census rows."""
    if bundle.order < max_crossings:
        raise ValueError(f"bundle order {bundle.order} < requested {max_crossings}")
    bundle.anchor_check()
    P = max_crossings
    # One extra working order (when the bundle supplies it) pins dtheta at g^P,
    # whose determining equation sits one order above dtheta itself.
    W = min(bundle.order, P + 1)
    g = TruncSeries.monomial("g", 1, W, _F0, _F1)
    ev = _BundleEvaluator(bundle, ("gamma_b", "gamma_c", "dprime_b", "dprime_c",
                                   "b0", "G", "b"))

    def curve(unknowns):
        tau_g, dth_g = unknowns
        sin_d, cos_d = _sin_cos_of(dth_g)
        return tau_g, sin_d.scale(-1), cos_d   # x = -sin(dth), s = cos(dth)

    def residuals(unknowns):
        tau_g, x_g, s_g = curve(unknowns)
        gb = ev("gamma_b", tau_g, x_g, s_g)
        gc = ev("gamma_c", tau_g, x_g, s_g)
        dpb, dpc = tilde_relations_n2(gb, gc, g)
        rb = dpb - ev("dprime_b", tau_g, x_g, s_g)
        rc = dpc - ev("dprime_c", tau_g, x_g, s_g)
        return [rb, rc]

    tau_g, dth_g = implicit_solve(residuals, [1, 2], W, "g", _F0, _F1,
                                  offsets=[1, 3])
    tau_s, x_g, s_g = curve([tau_g.pad_zero(W) if tau_g.order < W else tau_g,
                             dth_g.pad_zero(W) if dth_g.order < W else dth_g])
    gb = ev("gamma_b", tau_s, x_g, s_g)
    gc = ev("gamma_c", tau_s, x_g, s_g)
    b_g = ev("b", tau_s, x_g, s_g)
    if b_g.order > P:
        b_g = b_g.truncate(P)
    g2_g = b_g * x_g              # g_2 = cos(theta) b
    if g2_g.order > P:
        g2_g = g2_g.truncate(P)
    g1_g = b_g - g2_g             # g_1 = (1 - cos(theta)) b
    c_g = g2_g.scale(2)           # c = 2 g_2 = 2 b cos(theta)

    def coeffs(s, upto=P):
        return [s.coeffs[p] for p in range(1, min(upto, s.order) + 1)]

    half = Fraction(1, 2)
    rows = {
        "q2": coeffs(tau_g),
        "dtheta": coeffs(dth_g),
        "b": coeffs(b_g),
        "c": coeffs(c_g),
        "g1": coeffs(g1_g),
        "g2": coeffs(g2_g),
        "gamma_b": coeffs(gb),
        "gamma_c": coeffs(gc),
        "gamma_1": [x - y * half for x, y in zip(coeffs(gb), coeffs(gc))],
        "gamma_2": [y * half for y in coeffs(gc)],
    }
    census = OrientedCensus(order=P, rows=rows)
    census.check_invariants()
    return census
