"""
Star products with separation of variables on a domain in C^m.

The product is stored as a table of bidifferential coefficients:
C_r(f, g) = sum K[r][(beta, alpha)] * dbar^beta f * d^alpha g, so f is
differentiated only in z-bar and g only in z.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Dict, List, Optional, Sequence, Tuple

from exceptions import (
    ConsistencyError,
    DimensionError,
    DivergentIntegralError,
    NondegeneracyError,
    NotInvertibleError,
    ValidationError,
)
from quantization.coeff import (
    INF,
    CRat,
    Jet,
    JetSpace,
    LogAtom,
    NuSeries,
    WeightedJet,
    gaussian_moment,
    gradient_is_closed,
    integrate_gradient,
)
from quantization.diffop import FormalOp, SuperDiffOp
from quantization.grassmann import SuperCoeff, SuperFunction
from quantization.linalg import determinant, invert_matrix

logger = logging.getLogger(__name__)

Multi = Tuple[int, ...]
Table = Dict[int, Dict[Tuple[Multi, Multi], Jet]]


def multi_indices(m: int, n: int) -> List[Multi]:
    """All multi-indices of length m and total degree n."""
    if m == 0:
        return [()] if n == 0 else []
    if m == 1:
        return [(n,)]
    out = []
    for first in range(n, -1, -1):
        for rest in multi_indices(m - 1, n - first):
            out.append((first,) + rest)
    return out


def unit_multi(m: int, k: int) -> Multi:
    return tuple(1 if i == k else 0 for i in range(m))


def add_multi(a: Multi, b: Multi) -> Multi:
    return tuple(x + y for x, y in zip(a, b))


def sub_multi(a: Multi, b: Multi) -> Multi:
    return tuple(x - y for x, y in zip(a, b))


def dominates(a: Multi, b: Multi) -> bool:
    return all(x >= y for x, y in zip(a, b))


def binom_multi(a: Multi, b: Multi) -> int:
    result = 1
    for x, y in zip(a, b):
        result *= comb(x, y)
    return result


def multi_factorial(a: Multi) -> int:
    result = 1
    for x in a:
        result *= factorial(x)
    return result


def derivative_table(f, multis, offset: int) -> Dict[Multi, object]:
    """Derivatives of f indexed by multi-indices, in variables offset..offset+m-1."""
    table: Dict[Multi, object] = {}

    def get(mi: Multi):
        if mi in table:
            return table[mi]
        k = next((i for i, x in enumerate(mi) if x), None)
        if k is None:
            table[mi] = f
            return f
        value = get(sub_multi(mi, unit_multi(len(mi), k))).derivative(offset + k)
        table[mi] = value
        return value

    for mi in multis:
        get(mi)
    return table


def _holo_derivative(jet: Jet, gamma: Multi) -> Jet:
    for k, n in enumerate(gamma):
        for _ in range(n):
            jet = jet.derivative(k)
    return jet


class Potential:
    """Formal potential Phi = nu^-1 Phi_-1 + Phi_0 + nu Phi_1 + ... with jet coefficients."""

    def __init__(self, phi: NuSeries):
        if not isinstance(phi.zero, Jet):
            raise ValidationError("Potential coefficients must be jets")
        if phi.terms and min(phi.terms) < -1:
            raise ValidationError(f"Potential has a nu^{min(phi.terms)} term; the lowest allowed power is -1")
        self.phi = phi
        self.space: JetSpace = phi.zero.space

    @property
    def m(self) -> int:
        return self.space.m

    def coeff(self, s: int) -> Jet:
        return self.phi.coeff(s)

    def metric(self) -> List[List[Jet]]:
        """g_kl = d^2 Phi_-1 / dz^k dzbar^l."""
        top = self.coeff(-1)
        m = self.m
        return [[top.derivative(m + l).derivative(k) for l in range(m)] for k in range(m)]

    def metric_inverse(self) -> List[List[Jet]]:
        """Inverse metric as a matrix indexed [l][k]."""
        try:
            return invert_matrix(self.metric(), self.space.one(), self.space.zero())
        except NotInvertibleError as e:
            raise NondegeneracyError(f"Hessian of Phi_-1 is singular at the base point: {e}")

    def metric_determinant(self) -> Jet:
        return determinant(self.metric(), self.space.one())


class StarProduct:
    """Star product with separation of variables of anti-Wick type, truncated at nu^order."""

    def __init__(self, space: JetSpace, order: int, table: Table, potential: Optional[Potential] = None,
                 kind: str = "potential"):
        self.space = space
        self.order = order
        self.table = table
        self.potential = potential
        self.kind = kind
        self._betas = sorted({b for r in table for (b, a) in table[r]}, key=sum)
        self._alphas = sorted({a for r in table for (b, a) in table[r]}, key=sum)
        self._mixed = sorted({a + b for r in table for (b, a) in table[r]}, key=sum)

    @property
    def m(self) -> int:
        return self.space.m

    def _check_series(self, f: NuSeries) -> None:
        zero = f.zero
        space = getattr(zero, "space", None)
        if space is not None and space != self.space:
            raise DimensionError(f"Series lives in {space}, star product in {self.space}")

    def cochain(self, r: int, f, g):
        """C_r(f, g) for single jets (or weighted jets)."""
        m = self.m
        fb = derivative_table(f, self._betas, m)
        ga = derivative_table(g, self._alphas, 0)
        acc = None
        for (beta, alpha), K in self.table.get(r, {}).items():
            term = K * (fb[beta] * ga[alpha])
            acc = term if acc is None else acc + term
        return (f * g).zero_like() if acc is None else acc

    def star_mul(self, f: NuSeries, g: NuSeries) -> NuSeries:
        self._check_series(f)
        self._check_series(g)
        vf, vg = f.valuation(), g.valuation()
        high = min(f.high + vg, g.high + vf, vf + vg + self.order)
        m = self.m
        fb = {i: derivative_table(c, self._betas, m) for i, c in f.terms.items()}
        ga = {j: derivative_table(c, self._alphas, 0) for j, c in g.terms.items()}
        out: Dict[int, object] = {}
        for i in f.terms:
            for j in g.terms:
                for r in range(self.order + 1):
                    k = i + j + r
                    if k > high:
                        break
                    for (beta, alpha), K in self.table.get(r, {}).items():
                        term = K * (fb[i][beta] * ga[j][alpha])
                        out[k] = out[k] + term if k in out else term
        return NuSeries(out, high, f.zero * g.zero)

    def left_operator(self, f: NuSeries, d: int = 0) -> FormalOp:
        """L_f = sum nu^r (sum_beta K dbar^beta f) d^alpha, acting on super functions of odd dimension d."""
        m = self.m
        zeros = (0,) * m
        high = min(f.high, f.valuation() + self.order)
        ops: Dict[int, Dict] = {}
        for j, c in f.terms.items():
            fb = derivative_table(c, self._betas, m)
            for r in range(self.order + 1):
                k = j + r
                if k > high:
                    break
                for (beta, alpha), K in self.table.get(r, {}).items():
                    coeff = SuperCoeff.scalar(d, K * fb[beta])
                    key = (alpha + zeros, 0, 0)
                    bucket = ops.setdefault(k, {})
                    bucket[key] = bucket[key] + coeff if key in bucket else coeff
        return FormalOp({k: SuperDiffOp(self.space, d, t) for k, t in ops.items()}, high,
                        SuperDiffOp.zero(self.space, d))

    def right_operator(self, g: NuSeries, d: int = 0) -> FormalOp:
        """R_g f = f * g as a formal operator with antiholomorphic derivatives."""
        m = self.m
        zeros = (0,) * m
        high = min(g.high, g.valuation() + self.order)
        ops: Dict[int, Dict] = {}
        for j, c in g.terms.items():
            ga = derivative_table(c, self._alphas, 0)
            for r in range(self.order + 1):
                k = j + r
                if k > high:
                    break
                for (beta, alpha), K in self.table.get(r, {}).items():
                    coeff = SuperCoeff.scalar(d, K * ga[alpha])
                    key = (zeros + beta, 0, 0)
                    bucket = ops.setdefault(k, {})
                    bucket[key] = bucket[key] + coeff if key in bucket else coeff
        return FormalOp({k: SuperDiffOp(self.space, d, t) for k, t in ops.items()}, high,
                        SuperDiffOp.zero(self.space, d))

    def berezin_operator(self, d: int = 0) -> FormalOp:
        """The formal Berezin transform sum nu^r K d^alpha dbar^beta."""
        ops = {}
        for r, entries in self.table.items():
            terms = {}
            for (beta, alpha), K in entries.items():
                terms[(alpha + beta, 0, 0)] = SuperCoeff.scalar(d, K)
            ops[r] = SuperDiffOp(self.space, d, terms)
        return FormalOp(ops, self.order, SuperDiffOp.zero(self.space, d))

    def _berezin_part(self, h: NuSeries, start: int) -> NuSeries:
        m = self.m
        high = min(h.high, h.valuation() + self.order)
        out: Dict[int, object] = {}
        for j, c in h.terms.items():
            table = derivative_table(c, self._mixed, 0)
            for r in range(start, self.order + 1):
                k = j + r
                if k > high:
                    break
                for (beta, alpha), K in self.table.get(r, {}).items():
                    term = K * table[alpha + beta]
                    out[k] = out[k] + term if k in out else term
        return NuSeries(out, high, h.zero)

    def berezin(self, h: NuSeries) -> NuSeries:
        """Formal Berezin transform: I(z^a zb^b) = zb^b * z^a, extended linearly."""
        return self._berezin_part(h, 0)

    def berezin_inverse(self, h: NuSeries) -> NuSeries:
        """Inverse transform by the fixed point x = h - (I x - x)."""
        x = h
        for _ in range(self.order + 1):
            x = h - self._berezin_part(x, 1)
        return x

    def dual_mul(self, f: NuSeries, g: NuSeries) -> NuSeries:
        """The dual product I^-1(I g * I f), of Wick type."""
        return self.berezin_inverse(self.star_mul(self.berezin(g), self.berezin(f)))

    def poisson_tensor(self) -> List[List[Jet]]:
        """g^lk read off from C_1, indexed [l][k]."""
        m = self.m
        entries = self.table.get(1, {})
        return [[entries.get((unit_multi(m, l), unit_multi(m, k)), self.space.zero()) for k in range(m)]
                for l in range(m)]

    def lift(self, jet: Jet, power: int = 0) -> NuSeries:
        return NuSeries({power: jet}, INF, self.space.zero())

    def monomial(self, z_exps: Sequence[int], zbar_exps: Sequence[int], c=1, power: int = 0) -> NuSeries:
        return self.lift(self.space.monomial(z_exps, zbar_exps, c), power)

    def equivalent_product(self, transform: FormalOp, f: NuSeries, g: NuSeries) -> NuSeries:
        """T^-1(T f * T g) for an equivalence T = 1 + nu T_1 + ... acting on even functions."""
        def act(h: NuSeries) -> NuSeries:
            return transform.apply(SuperFunction.lift(h, transform.d)).body()

        target = self.star_mul(act(f), act(g))
        x = target
        for _ in range(self.order + 1):
            x = target - (act(x) - x)
        return x


def build_star(potential: Potential, order: int) -> StarProduct:
    """
    Construct the star product of a nondegenerate potential.

    Each A_k of L_f = sum nu^k A_k is a holomorphic differential operator
    whose coefficients are themselves operators in dbar acting on f. They
    follow from [L_f, dPhi/dzbar^l + dbar_l] = 0 solved top degree down.
    """
    space = potential.space
    m = space.m
    if m == 0:
        return trivial_point(order, space.D, potential)
    ginv = potential.metric_inverse()
    phis = {s: [potential.coeff(s).derivative(m + l) for l in range(m)] for s in range(-1, order)}
    zero_m = (0,) * m
    coeffs: Dict[int, Dict[Multi, Dict[Multi, Jet]]] = {0: {zero_m: {zero_m: space.one()}}}
    dphi_cache: Dict[Tuple[int, int, Multi], Jet] = {}

    def dphi(s: int, l: int, gamma: Multi) -> Jet:
        key = (s, l, gamma)
        if key not in dphi_cache:
            dphi_cache[key] = _holo_derivative(phis[s][l], gamma)
        return dphi_cache[key]

    def accumulate(target: Dict[Multi, Jet], fop: Dict[Multi, Jet], jet: Optional[Jet] = None, factor=1) -> None:
        for beta, K in fop.items():
            value = K if jet is None else K * jet
            if factor != 1:
                value = value.scale(factor)
            target[beta] = target[beta] + value if beta in target else value

    for k in range(1, order + 1):
        rhs: List[Dict[Multi, Dict[Multi, Jet]]] = [{} for _ in range(m)]
        for l in range(m):
            el = unit_multi(m, l)
            for alpha, fop in coeffs[k - 1].items():
                slot = rhs[l].setdefault(alpha, {})
                for beta, K in fop.items():
                    accumulate(slot, {beta: K.derivative(m + l)})
                    accumulate(slot, {add_multi(beta, el): K})
            for s in range(0, k):
                for alpha, fop in coeffs[k - 1 - s].items():
                    for n in range(1, sum(alpha) + 1):
                        for gamma in multi_indices(m, n):
                            if not dominates(alpha, gamma):
                                continue
                            slot = rhs[l].setdefault(sub_multi(alpha, gamma), {})
                            accumulate(slot, fop, dphi(s, l, gamma), -binom_multi(alpha, gamma))

        current: Dict[Multi, Dict[Multi, Jet]] = {}
        for n in range(k, 0, -1):
            reduced: Dict[Tuple[int, Multi], Dict[Multi, Jet]] = {}
            for alpha in multi_indices(m, n):
                j = next(i for i, x in enumerate(alpha) if x)
                delta = sub_multi(alpha, unit_multi(m, j))
                solved: Dict[Multi, Jet] = {}
                for l in range(m):
                    key = (l, delta)
                    if key not in reduced:
                        t = dict(rhs[l].get(delta, {}))
                        for higher, fop in current.items():
                            if sum(higher) - sum(delta) < 2 or not dominates(higher, delta):
                                continue
                            gap = sub_multi(higher, delta)
                            accumulate(t, fop, dphi(-1, l, gap), -binom_multi(higher, gap))
                        reduced[key] = t
                    accumulate(solved, reduced[key], ginv[l][j])
                solved = {b: K.scale(Fraction(1, delta[j] + 1)) for b, K in solved.items() if not K.is_exact_zero()}
                if solved:
                    current[alpha] = solved
        coeffs[k] = current
        logger.debug(f"Star product order {k}: {sum(len(v) for v in current.values())} coefficients")

    table: Table = {}
    for r, by_alpha in coeffs.items():
        table[r] = {(beta, alpha): K for alpha, fop in by_alpha.items() for beta, K in fop.items()}
    logger.info(f"Built star product for m={m} through nu^{order}")
    return StarProduct(space, order, table, potential, kind="potential")


def flat_potential(space: JetSpace) -> Potential:
    terms = space.zero()
    for k in range(space.m):
        terms = terms + space.z(k) * space.zbar(k)
    return Potential(NuSeries({-1: terms}, INF, space.zero()))


def flat_antiwick(space: JetSpace, order: int) -> StarProduct:
    """Closed form f * g = sum_alpha nu^|alpha| / alpha! dbar^alpha f d^alpha g."""
    table: Table = {}
    for r in range(order + 1):
        table[r] = {(alpha, alpha): space.const(Fraction(1, multi_factorial(alpha)))
                    for alpha in multi_indices(space.m, r)}
    return StarProduct(space, order, table, flat_potential(space), kind="flat")


def trivial_point(order: int, D: int = 0, potential: Optional[Potential] = None) -> StarProduct:
    """The base point (m = 0): the product is ordinary multiplication of nu-series."""
    space = JetSpace(0, D)
    table: Table = {0: {((), ()): space.one()}}
    for r in range(1, order + 1):
        table[r] = {}
    if potential is None:
        potential = Potential(NuSeries({}, INF, space.zero()))
    return StarProduct(space, order, table, potential, kind="point")


@dataclass
class TraceData:
    """Dual potential Psi, the exponent kappa and the trace density rho = nu^-m g e^kappa."""
    psi: NuSeries
    psi_log: LogAtom
    kappa: NuSeries
    density: NuSeries
    metric_det: Jet
    log_metric: Jet
    normalization_residual: NuSeries


def dual_potential(star: StarProduct) -> TraceData:
    if star.potential is None:
        raise ValidationError("Trace density needs a star product built from a potential")
    space, m = star.space, star.space.m
    phi = star.potential.phi
    grads = [-star.berezin_inverse(phi.derivative(i)) for i in range(2 * m)]
    high = min((g.high for g in grads), default=star.order)

    psi_terms: Dict[int, Jet] = {}
    for j in range(-1, high + 1):
        layer = [g.coeff(j) for g in grads]
        if not gradient_is_closed(layer):
            logger.error(f"Dual potential gradients are not closed at nu^{j}")
            raise ConsistencyError(f"Gradient system for the dual potential is not closed at nu^{j}")
        psi_terms[j] = integrate_gradient(space, layer)

    metric_det = star.potential.metric_determinant()
    g0 = metric_det.constant()
    if not g0:
        raise NondegeneracyError("Metric determinant vanishes at the base point")
    psi_log = LogAtom(g0)
    log_metric = metric_det.scale(g0.inverse()).log()

    psi_terms[-1] = psi_terms[-1] - phi.coeff(-1).constant()
    psi_terms[0] = psi_terms[0] - phi.coeff(0).constant()
    psi = NuSeries(psi_terms, high, space.zero())
    residual = phi.nu_derivative() + star.berezin(psi.nu_derivative())
    for j in range(1, high + 1):
        psi_terms[j] = psi_terms[j] - residual.coeff(j - 1).constant() / j
    psi = NuSeries(psi_terms, high, space.zero())

    normalization = phi.nu_derivative() + star.berezin(psi.nu_derivative()) - star.lift(space.const(m), -1)
    kappa_full = phi + psi - star.lift(log_metric)
    for k, c in kappa_full.terms.items():
        if k <= 0 and not c.vanishes():
            raise ConsistencyError(f"kappa has a non-vanishing nu^{k} term: {c}")
    kappa = NuSeries({k: c for k, c in kappa_full.terms.items() if k > 0}, kappa_full.high, space.zero())
    density = (star.lift(metric_det) * kappa.exp()).shift(-m)
    logger.info(f"Dual potential computed through nu^{high}")
    return TraceData(psi, psi_log, kappa, density, metric_det, log_metric, normalization)


def integrate_series(series: NuSeries) -> NuSeries:
    """Integrate each coefficient over the base: evaluation at m = 0, Gaussian moments otherwise."""
    def integrate(c) -> CRat:
        space = c.space
        if space.m == 0:
            return c.constant()
        return gaussian_moment(c)

    return NuSeries({k: integrate(c) for k, c in series.terms.items()}, series.high, CRat(0))


@dataclass
class TraceCheck:
    commutator: NuSeries
    berezin_pairing: NuSeries

    @property
    def passed(self) -> bool:
        return self.commutator.vanishes() and self.berezin_pairing.vanishes()


def verify_trace_property(star: StarProduct, trace: TraceData, f: NuSeries, g: NuSeries) -> TraceCheck:
    """
    Check that the density is a trace density: the integral of f*g - g*f
    vanishes and the integral of f g equals that of f * I(g).
    """
    weights = [getattr(s.zero, "w", 0) for s in (f, g)]
    if star.m and not any(weights):
        raise DivergentIntegralError("At least one argument needs a Gaussian weight")
    rho = trace.density
    commutator = star.star_mul(f, g) - star.star_mul(g, f)
    lhs = f * g
    rhs = star.star_mul(f, star.berezin(g))
    return TraceCheck(
        integrate_series(commutator * rho),
        integrate_series((lhs - rhs) * rho),
    )


def weighted(series: NuSeries, w: int) -> NuSeries:
    """Attach the Gaussian envelope exp(-w |z|^2) to every coefficient."""
    space = series.zero.space
    return NuSeries({k: WeightedJet(c, w) for k, c in series.terms.items()}, series.high,
                    WeightedJet(space.zero(), w))
