"""
Super formal Berezin transform I = 1 + nu I_1 + ... of a super star product,
the Wick-type dual product and the dual potential X'.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from exceptions import ConsistencyError, DomainError
from quantization.coeff import INF, CRat, LogAtom
from quantization.grassmann import Mask, SuperCoeff, SuperFunction, popcount
from quantization.starprod import Potential
from quantization.superstar import NilpotentPotentialY, SuperStarProduct

logger = logging.getLogger(__name__)

BasisKey = Tuple[Tuple[int, ...], Mask, Mask]


class SuperBerezin:
    """
    I(z^a zb^b theta^I thetabar^J) = (-1)^(|I||J|) (zb^b thetabar^J) * (z^a theta^I).

    Images of basis monomials are tabulated on first use.
    """

    def __init__(self, S: SuperStarProduct):
        self.S = S
        self.table: Dict[BasisKey, SuperFunction] = {}

    @property
    def space(self):
        return self.S.space

    @property
    def d(self) -> int:
        return self.S.d

    def basis_image(self, key: Tuple[int, ...], I: Mask, J: Mask) -> SuperFunction:
        entry = (key, I, J)
        if entry not in self.table:
            m = self.space.m
            zeros = [0] * m
            anti = SuperFunction.monomial(self.space, self.d, zeros, key[m:], 0, J)
            holo = SuperFunction.monomial(self.space, self.d, key[:m], zeros, I, 0)
            image = self.S.mul(anti, holo)
            self.table[entry] = -image if (popcount(I) * popcount(J)) % 2 else image
        return self.table[entry]

    def apply(self, f: SuperFunction, start: int = 0) -> SuperFunction:
        """
        I f, or (I - 1) f when ``start`` is 1. A coefficient known through jet
        degree p contributes at relative order r only through degree p - 2r.
        """
        result = SuperFunction({}, f.high, f.zero)
        caps: Dict[int, float] = {}
        for k, coeff in f.terms.items():
            for (I, J), jet in coeff.comps.items():
                for key, c in jet.terms.items():
                    image = self.basis_image(key, I, J)
                    if start:
                        image = image - SuperFunction.monomial(
                            self.space, self.d, key[:self.space.m], key[self.space.m:], I, J)
                    result = result + image.shift(k) * c
                if jet.prec != INF:
                    for r in range(start, self.S.order + 1):
                        caps[k + r] = min(caps.get(k + r, INF), jet.prec - 2 * r)
        if caps:
            result = _apply_caps(result, caps)
        return result.truncate(f.high)

    def inverse(self, f: SuperFunction) -> SuperFunction:
        """I^-1 f by the fixed point x = f - (I - 1) x."""
        iterations = self.S.order + 2 - min(f.valuation(), 0) if f.terms else 1
        x = f
        for _ in range(iterations):
            x = f - self.apply(x, start=1)
        return x

    def dual_wick_product(self, f: SuperFunction, g: SuperFunction) -> SuperFunction:
        """f *' g = I^-1(I f * I g), a product of Wick type."""
        return self.inverse(self.S.mul(self.apply(f), self.apply(g)))

    def opposite_dual(self, f: SuperFunction, g: SuperFunction) -> SuperFunction:
        """f *~ g = (-1)^(|f||g|) I^-1(I g * I f), of anti-Wick type with Berezin transform I^-1."""
        result = SuperFunction.zero_function(self.space, self.d)
        for p, fp in f.graded_parts().items():
            for q, gq in g.graded_parts().items():
                term = self.inverse(self.S.mul(self.apply(gq), self.apply(fp)))
                result = result + (-term if p * q else term)
        return result


def _apply_caps(f: SuperFunction, caps: Dict[int, float]) -> SuperFunction:
    space = f.space
    terms = dict(f.terms)
    for k, cap in caps.items():
        if k > f.high:
            continue
        coeff = terms.get(k, f.zero)
        capped = coeff.map(lambda jet: jet.truncated(cap))
        if (0, 0) not in capped.comps:
            capped = capped + space.zero().truncated(cap)
        terms[k] = capped
    return SuperFunction(terms, f.high, f.zero)


def build_super_berezin(S: SuperStarProduct) -> SuperBerezin:
    return SuperBerezin(S)


def dual_wick_product(B: SuperBerezin, f: SuperFunction, g: SuperFunction) -> SuperFunction:
    return B.dual_wick_product(f, g)


@dataclass
class XPrime:
    """Dual potential X' with its gradients; ``log_atom`` is the formal log constant at nu^0."""
    Xp: SuperFunction
    gradients: List[SuperFunction]
    log_atom: Optional[LogAtom] = None
    constants: Dict[int, CRat] = field(default_factory=dict)


def _parities(m: int, d: int) -> List[int]:
    return [0] * (2 * m) + [1] * (2 * d)


def _left_gradient(f: SuperFunction) -> List[SuperFunction]:
    """Left derivatives in z, zb, theta, thetabar order."""
    m, d = f.space.m, f.d
    grads = [f.derivative(i) for i in range(2 * m)]
    grads += [f.left_theta_deriv(a) for a in range(1, d + 1)]
    grads += [f.left_thetabar_deriv(b) for b in range(1, d + 1)]
    return grads


def _coordinate(space, d: int, i: int) -> SuperCoeff:
    m = space.m
    if i < 2 * m:
        return SuperCoeff.scalar(d, space.variable(i))
    alpha = i - 2 * m
    if alpha < d:
        return SuperCoeff.basis(d, 1 << alpha, 0, space.one())
    return SuperCoeff.basis(d, 0, 1 << (alpha - d), space.one())


def super_gradient_is_closed(grads: List[SuperCoeff], m: int, d: int) -> bool:
    """d_i G_j = (-1)^(p_i p_j) d_j G_i for left derivatives."""
    parities = _parities(m, d)

    def deriv(c: SuperCoeff, i: int) -> SuperCoeff:
        if i < 2 * m:
            return c.derivative(i)
        if i < 2 * m + d:
            return c.left_theta_deriv(i - 2 * m + 1)
        return c.left_thetabar_deriv(i - 2 * m - d + 1)

    for i in range(len(grads)):
        for j in range(i + 1, len(grads)):
            lhs = deriv(grads[j], i)
            rhs = deriv(grads[i], j)
            if parities[i] * parities[j]:
                rhs = -rhs
            if not (lhs - rhs).vanishes():
                return False
    return True


def super_integrate_gradient(grads: List[SuperCoeff], space, d: int) -> SuperCoeff:
    """Euler homotopy: sum_i x^i G_i divided monomialwise by total degree, constant term zero."""
    acc = None
    for i, g in enumerate(grads):
        term = _coordinate(space, d, i) * g
        acc = term if acc is None else acc + term
    if acc is None:
        return SuperCoeff(d, {}, space.zero())
    return SuperCoeff(d, {
        (I, J): jet.euler_divide(popcount(I) + popcount(J)) for (I, J), jet in acc.comps.items()
    }, space.zero())


def density_logarithm(rho: SuperFunction) -> Tuple[LogAtom, SuperFunction]:
    """log(nu^(m-d) rho) split as log psi(0) plus a series."""
    m, d = rho.space.m, rho.d
    scaled = rho.shift(m - d)
    psi0 = scaled.body().coeff(0).constant()
    if not psi0:
        raise DomainError("Density has a vanishing leading coefficient at the base point")
    return LogAtom(psi0), (scaled * psi0.inverse()).log_unipotent()


def compute_X_prime(B: SuperBerezin, X: SuperFunction, density: Optional[SuperFunction] = None) -> XPrime:
    """
    Solve dX'/dx = -I^-1(dX/dx) in all four families of coordinates and
    fix the constants from the supertrace density when it is given.
    """
    space, d, m = B.space, B.d, B.space.m
    grads = [-B.inverse(g) for g in _left_gradient(X)]
    high = min((g.high for g in grads), default=B.S.order)
    low = min((g.valuation() for g in grads if g.terms), default=0)
    zero = SuperCoeff(d, {}, space.zero())
    terms: Dict[int, SuperCoeff] = {}
    for k in range(min(low, -1), high + 1):
        layer = [g.coeff(k) for g in grads]
        if not super_gradient_is_closed(layer, m, d):
            logger.error(f"Gradient system for X' is not closed at nu^{k}")
            raise ConsistencyError(f"Gradient system for X' is not closed at nu^{k}")
        terms[k] = super_integrate_gradient(layer, space, d)

    log_atom = None
    constants: Dict[int, CRat] = {}
    if density is not None:
        log_atom, log_series = density_logarithm(density)
        for k in terms:
            constants[k] = log_series.body().coeff(k).constant() - X.body().coeff(k).constant()
    else:
        for k in terms:
            constants[k] = -X.body().coeff(k).constant()
    for k, c in constants.items():
        terms[k] = terms[k] + c
    Xp = SuperFunction(terms, high, zero)
    logger.info(f"Computed X' through nu^{high}")
    return XPrime(Xp, grads, log_atom, constants)


def gradient_residuals(X: SuperFunction, Xp: XPrime, density: SuperFunction) -> List[SuperFunction]:
    """d rho - rho d(X + X') in every coordinate; each entry vanishes for a consistent density."""
    total = X + Xp.Xp
    return [dr - density * dt for dr, dt in zip(_left_gradient(density), _left_gradient(total))]


def wick_reconstruction(S: SuperStarProduct, Xp: XPrime, order: Optional[int] = None,
                        margin: Optional[int] = None) -> SuperStarProduct:
    """
    Anti-Wick product built from the swapped potential sigma X'. Conjugating it
    by sigma gives back the Wick-type dual product.
    """
    swapped = Xp.Xp.swap()
    potential = Potential(swapped.body())
    nilpotent = swapped.nilpotent_part()
    order = S.order if order is None else order
    return SuperStarProduct.from_potential(potential, NilpotentPotentialY(nilpotent), order, margin)


def reconstructed_product(R: SuperStarProduct, f: SuperFunction, g: SuperFunction) -> SuperFunction:
    """sigma(sigma f o sigma g) for the anti-Wick product o of the swapped potential."""
    return R.mul(f.swap(), g.swap()).swap()
