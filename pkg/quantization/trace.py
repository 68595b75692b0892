"""
Canonical supertrace: the matrix supertrace over the base algebra and the
Berezin density rho with sigma(f) = integral of f rho dz dzb dtheta dthetabar.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

from exceptions import NotAdmissibleError
from quantization.berezin import SuperBerezin
from quantization.coeff import INF, CRat, Jet, JetSpace, NuSeries
from quantization.grassmann import (
    SuperCoeff,
    SuperFunction,
    all_masks,
    complement,
    full_mask,
    lam,
    mask_of,
    popcount,
)
from quantization.linalg import determinant, invert_matrix, sympy_determinant
from quantization.starprod import StarProduct, TraceData, flat_antiwick, integrate_series, trivial_point
from quantization.superstar import IdentityReport, NilpotentPotentialY, SuperStarProduct

logger = logging.getLogger(__name__)


@dataclass
class SupertraceDensity:
    tau: SuperFunction
    rho: SuperFunction
    base_density: NuSeries


def supertrace_density(S: SuperStarProduct, trace: TraceData) -> SupertraceDensity:
    """tau_KQ = (-1)^(|K'| + lam(K', Q')) I^-1 v^(Q'K') with primes for complements; rho = u tau rho_base."""
    d, space = S.d, S.space
    comps: Dict = {}
    for K in all_masks(d):
        for Q in all_masks(d):
            Kc, Qc = complement(K, d), complement(Q, d)
            entry = S.v.entry(Qc, Kc)
            if not entry.terms:
                continue
            value = S.base.berezin_inverse(entry)
            comps[(K, Q)] = -value if (popcount(Kc) + lam(Kc, Qc, d)) % 2 else value
    tau = SuperFunction.from_components(d, comps, space.zero())
    rho = S.u * tau * SuperFunction.lift(trace.density, d)
    logger.info(f"Supertrace density computed (d={d}, m={space.m})")
    return SupertraceDensity(tau, rho, trace.density)


class StrFunctional:
    """
    sigma evaluated two ways: the matrix supertrace sum_I (-1)^|I| of the
    base integral of F_I^I rho_base, and the Berezin integral of f rho.
    """

    def __init__(self, S: SuperStarProduct, density: SupertraceDensity):
        self.S = S
        self.density = density

    @property
    def mode(self) -> str:
        return "point" if self.S.space.m == 0 else "gaussian"

    def via_matrix(self, f: SuperFunction) -> NuSeries:
        F = self.S.decompose(f)
        total = NuSeries({}, INF, CRat(0))
        for I in all_masks(self.S.d):
            entry = F.entry(I, I)
            if not entry.terms:
                total = total.truncate(entry.high)
                continue
            value = integrate_series(entry * self.density.base_density)
            total = total - value if popcount(I) % 2 else total + value
        return total

    def via_density(self, f: SuperFunction) -> NuSeries:
        return integrate_series((f * self.density.rho).berezin_integral())

    def __call__(self, f: SuperFunction) -> NuSeries:
        return self.via_density(f)


def supertrace(S: SuperStarProduct, density: SupertraceDensity, f: SuperFunction) -> NuSeries:
    return StrFunctional(S, density)(f)


def supertrace_defect(sigma: StrFunctional, f: SuperFunction, g: SuperFunction) -> NuSeries:
    """sigma(f * g) - (-1)^(|f||g|) sigma(g * f) over homogeneous parts."""
    S = sigma.S
    total = NuSeries({}, INF, CRat(0))
    for p, fp in f.graded_parts().items():
        for q, gq in g.graded_parts().items():
            back = sigma(S.mul(gq, fp))
            forth = sigma(S.mul(fp, gq))
            total = total + (forth + back if p * q else forth - back)
    return total


def _is_polynomial(f: SuperFunction) -> bool:
    return isinstance(f.zero.zero, Jet)


@dataclass
class BertReport:
    """Residuals of the two Berezin-trace identities; None where the class was not evaluable."""
    weighted_left: Optional[NuSeries] = None
    weighted_right: Optional[NuSeries] = None

    @property
    def passed(self) -> bool:
        return all(r is None or r.vanishes() for r in (self.weighted_left, self.weighted_right))


def verify_bert_identities(S: SuperStarProduct, density: SupertraceDensity, B: SuperBerezin,
                           f: SuperFunction, g: SuperFunction) -> BertReport:
    """
    Integral of f * g against rho equals that of f I^-1 g and that of (I^-1 f) g.
    I^-1 is applied only to polynomial arguments.
    """
    sigma = StrFunctional(S, density)
    lhs = sigma(S.mul(f, g))
    report = BertReport()
    if _is_polynomial(g):
        report.weighted_left = lhs - sigma(f * B.inverse(g))
    if _is_polynomial(f):
        report.weighted_right = lhs - sigma(B.inverse(f) * g)
    return report


def _lift_entry(space: Optional[JetSpace], x):
    """Scalars stay CRat without a jet space; otherwise every entry becomes a jet of ``space``."""
    if space is None:
        if isinstance(x, Jet):
            raise NotAdmissibleError("Jet-valued entries need the jet space they live in")
        return CRat.coerce(x)
    if isinstance(x, Jet):
        space.check(x.space)
        return x
    return space.const(x)


def _lift_matrix(space: Optional[JetSpace], rows: Sequence[Sequence]) -> list:
    return [[_lift_entry(space, x) for x in row] for row in rows]


def _det(space: Optional[JetSpace], rows: Sequence[Sequence]):
    if space is None:
        return sympy_determinant(rows)
    return determinant(rows, space.one())


def _quadratic_form(d: int, a, b, c, zero) -> SuperCoeff:
    """Z = 1/2 a theta theta + b theta thetabar + 1/2 c thetabar thetabar; entries are already lifted."""
    comps: Dict = {}
    for x in range(d):
        for y in range(d):
            if not b[x][y].is_exact_zero():
                comps[(1 << x, 1 << y)] = b[x][y]
    for mat, holomorphic in ((a, True), (c, False)):
        if mat is None:
            continue
        for x in range(d):
            for y in range(x + 1, d):
                value = mat[x][y]
                if not value.is_exact_zero():
                    key = (mask_of([x + 1, y + 1]), 0) if holomorphic else (0, mask_of([x + 1, y + 1]))
                    comps[key] = value
    return SuperCoeff(d, comps, zero)


def _leading_base(space: Optional[JetSpace], order: int) -> StarProduct:
    if space is None:
        return trivial_point(order)
    if space.m == 0:
        return trivial_point(order, space.D)
    return flat_antiwick(space, order)


def _sign(d: int) -> int:
    return -1 if (d * (d - 1) // 2) % 2 else 1


def verify_leading_theorems(d: int, b: Optional[Sequence[Sequence]] = None, h: Optional[Sequence[Sequence]] = None,
                            a: Optional[Sequence[Sequence]] = None, c: Optional[Sequence[Sequence]] = None,
                            order: int = 2, space: Optional[JetSpace] = None) -> IdentityReport:
    """
    For w = e^Z: det w != 0 and t^([d][d]) = (-1)^(d(d-1)/2) / det b.
    For u = exp(nu^-1 h theta thetabar): block diagonal, u_[d][d] = nu^-d (-1)^(d(d-1)/2) det h,
    u_[d][d] * v^[d][d] = 1 and v^[d][d] has leading term (-1)^(d(d-1)/2) det(h^-1) nu^d.

    Entries are scalars, or jets of ``space`` when it is given. Over a space
    with m > 0 the inverse v is taken with respect to the flat product.
    """
    report = IdentityReport()
    full = full_mask(d)
    masks = all_masks(d)
    top = masks.index(full)
    one = CRat(1) if space is None else space.one()
    zero = CRat(0) if space is None else space.zero()
    sign = _sign(d)
    if b is not None:
        b_rows = _lift_matrix(space, b)
        det_b = _det(space, b_rows)
        if not det_b.constant():
            logger.error("b-matrix singular at base point")
            raise NotAdmissibleError("b-matrix singular at base point; u is not admissible")
        a_rows = None if a is None else _lift_matrix(space, a)
        c_rows = None if c is None else _lift_matrix(space, c)
        w = _quadratic_form(d, a_rows, b_rows, c_rows, zero).exp()
        w_matrix = [[w.component(I, J) for J in masks] for I in masks]
        report.checks["w nondegenerate"] = bool(sympy_determinant([[x.constant() for x in row] for row in w_matrix]))
        t = invert_matrix(w_matrix, one, zero)
        report.checks["t[d][d]"] = (t[top][top] - det_b.invert() * sign).vanishes()
    if h is not None:
        h_rows = _lift_matrix(space, h)
        det_h = _det(space, h_rows)
        if not det_h.constant():
            logger.error("h-matrix singular at base point")
            raise NotAdmissibleError("h-matrix singular at base point; u is not admissible")
        jets = JetSpace(0, 0) if space is None else space
        h_jets = h_rows if space is not None else [[jets.const(x) for x in row] for row in h_rows]
        terms = {(1 << x, 1 << y): NuSeries({-1: h_jets[x][y]}, INF, jets.zero())
                 for x in range(d) for y in range(d) if not h_jets[x][y].is_exact_zero()}
        Y = NilpotentPotentialY(SuperFunction.from_components(d, terms, jets.zero()))
        u = Y.exp()
        report.checks["block diagonal"] = all(
            u.component(I, J).vanishes() for I in masks for J in masks if popcount(I) != popcount(J))
        u_top = u.component(full, full)
        det_jet = determinant(h_jets, jets.one())
        report.checks["u[d][d]"] = u_top.agrees_with(NuSeries({-d: det_jet * sign}, INF, jets.zero()))
        S = SuperStarProduct(_leading_base(space, order + 2 * d + 1), u, order)
        v_top = S.v.entry(full, full)
        product = S.base.star_mul(u_top, v_top)
        report.checks["u[d][d] * v[d][d]"] = product.agrees_with(NuSeries({0: jets.one()}, INF, jets.zero()))
        report.checks["v[d][d] leading"] = (
            v_top.leading_power() == d and (v_top.coeff(d) - det_jet.invert() * sign).vanishes())
    for name, ok in report.checks.items():
        logger.debug(f"{name}: {ok}")
    return report


def density_leading_term(S: SuperStarProduct, density: SupertraceDensity) -> IdentityReport:
    """rho_00 starts at nu^(d-m) with a coefficient invertible at the base point."""
    report = IdentityReport()
    body = density.rho.body()
    lead = body.leading_power()
    expected = S.d - S.space.m
    report.checks["rho leading power"] = lead == expected
    report.checks["psi(0) != 0"] = lead is not None and bool(body.coeff(lead).constant())
    return report
