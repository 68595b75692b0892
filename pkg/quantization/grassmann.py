"""
Exterior algebra in theta^1..theta^d and theta-bar^1..theta-bar^d.

Index sets are bitmasks with bit alpha-1 standing for alpha. Monomials are
kept in the normal form theta^I theta-bar^J: every theta precedes every
theta-bar and each block is ascending.
"""
import logging
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from exceptions import DimensionError, DomainError, NotInvertibleError
from quantization.coeff import INF, CRat, JetSpace, NuSeries

logger = logging.getLogger(__name__)

Mask = int
Pair = Tuple[Mask, Mask]


def popcount(mask: Mask) -> int:
    return bin(mask).count("1")


def mask_of(indices: Iterable[int]) -> Mask:
    mask = 0
    for alpha in indices:
        if alpha < 1:
            raise ValueError(f"Odd indices start at 1, got {alpha}")
        mask |= 1 << (alpha - 1)
    return mask


def indices_of(mask: Mask) -> List[int]:
    out = []
    alpha = 1
    while mask:
        if mask & 1:
            out.append(alpha)
        mask >>= 1
        alpha += 1
    return out


def full_mask(d: int) -> Mask:
    return (1 << d) - 1


def complement(mask: Mask, d: int) -> Mask:
    return full_mask(d) & ~mask


def all_masks(d: int) -> List[Mask]:
    """All index sets of [d], ordered by size and then lexicographically."""
    return sorted(range(1 << d), key=lambda s: (popcount(s), indices_of(s)))


def count_below(mask: Mask, alpha: int) -> int:
    return popcount(mask & ((1 << (alpha - 1)) - 1))


def count_above(mask: Mask, alpha: int) -> int:
    return popcount(mask >> alpha)


def merge_parity(left: Mask, right: Mask) -> int:
    """Parity of the sort bringing theta^left theta^right into ascending order."""
    parity = 0
    for alpha in indices_of(right):
        parity += count_above(left, alpha)
    return parity & 1


def product_sign(I: Mask, J: Mask, K: Mask, L: Mask) -> int:
    """Sign of theta^I tb^J theta^K tb^L = sign * theta^(I+K) tb^(J+L); 0 when it vanishes."""
    if I & K or J & L:
        return 0
    parity = popcount(J) * popcount(K) + merge_parity(I, K) + merge_parity(J, L)
    return -1 if parity & 1 else 1


def eps(I: Mask) -> int:
    """alpha_1 + ... + alpha_k - k(k+1)/2 modulo 2."""
    k = popcount(I)
    return (sum(indices_of(I)) - k * (k + 1) // 2) & 1


def lam(K: Mask, Q: Mask, d: int) -> int:
    return (popcount(complement(K, d)) * popcount(Q) + eps(K) + eps(Q)) & 1


def mask_label(mask: Mask) -> str:
    return "{" + ",".join(str(a) for a in indices_of(mask)) + "}"


class SuperCoeff:
    """
    Element f = f_IJ theta^I theta-bar^J of the exterior algebra over a
    commutative coefficient ring (Jet, WeightedJet or CRat).
    """

    __slots__ = ("d", "comps", "zero")

    def __init__(self, d: int, comps: Optional[Dict[Pair, object]] = None, zero=None):
        clean = {}
        for key, c in (comps or {}).items():
            if not c.is_exact_zero():
                clean[key] = c
        if zero is None:
            if not comps:
                raise ValueError("SuperCoeff needs a zero prototype when it has no components")
            zero = next(iter(comps.values())).zero_like()
        self.d = d
        self.comps = clean
        self.zero = zero

    @classmethod
    def basis(cls, d: int, I: Mask, J: Mask, value) -> "SuperCoeff":
        return cls(d, {(I, J): value}, value.zero_like())

    @classmethod
    def scalar(cls, d: int, value) -> "SuperCoeff":
        return cls(d, {(0, 0): value}, value.zero_like())

    def zero_like(self) -> "SuperCoeff":
        return SuperCoeff(self.d, {}, self.zero)

    def component(self, I: Mask, J: Mask):
        return self.comps.get((I, J), self.zero)

    def body(self):
        return self.component(0, 0)

    def constant(self) -> CRat:
        return self.body().constant()

    def vanishes(self) -> bool:
        return all(c.vanishes() for c in self.comps.values())

    def is_exact_zero(self) -> bool:
        return not self.comps

    def parity(self) -> Optional[int]:
        """0 or 1 for homogeneous elements, None for mixed ones."""
        parities = {(popcount(I) + popcount(J)) & 1 for (I, J), c in self.comps.items() if not c.vanishes()}
        if not parities:
            return 0
        if len(parities) > 1:
            return None
        return parities.pop()

    def graded_parts(self) -> Dict[int, "SuperCoeff"]:
        parts: Dict[int, Dict[Pair, object]] = {0: {}, 1: {}}
        for (I, J), c in self.comps.items():
            parts[(popcount(I) + popcount(J)) & 1][(I, J)] = c
        return {p: SuperCoeff(self.d, comps, self.zero) for p, comps in parts.items() if comps}

    def _check(self, other: "SuperCoeff") -> None:
        if other.d != self.d:
            raise DimensionError(f"Odd dimensions differ: {self.d} vs {other.d}")

    def __add__(self, other):
        if isinstance(other, SuperCoeff):
            self._check(other)
            out = dict(self.comps)
            for key, c in other.comps.items():
                out[key] = out[key] + c if key in out else c
            return SuperCoeff(self.d, out, self.zero)
        if isinstance(other, NuSeries):
            return NotImplemented
        out = dict(self.comps)
        out[(0, 0)] = self.body() + other
        return SuperCoeff(self.d, out, self.zero)

    __radd__ = __add__

    def __neg__(self):
        return SuperCoeff(self.d, {k: -c for k, c in self.comps.items()}, self.zero)

    def __sub__(self, other):
        if isinstance(other, NuSeries):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, SuperCoeff):
            self._check(other)
            return self._wedge(other)
        if isinstance(other, NuSeries):
            return NotImplemented
        if isinstance(other, (int, Fraction)):
            other = CRat(other)
        return SuperCoeff(self.d, {k: c * other for k, c in self.comps.items()}, self.zero * other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = CRat(other)
        return SuperCoeff(self.d, {k: other * c for k, c in self.comps.items()}, other * self.zero)

    def _wedge(self, other: "SuperCoeff") -> "SuperCoeff":
        out: Dict[Pair, object] = {}
        for (I, J), a in self.comps.items():
            for (K, L), b in other.comps.items():
                sign = product_sign(I, J, K, L)
                if not sign:
                    continue
                prod = a * b
                if sign < 0:
                    prod = -prod
                key = (I | K, J | L)
                out[key] = out[key] + prod if key in out else prod
        return SuperCoeff(self.d, out, self.zero * other.zero)

    def map(self, fn: Callable) -> "SuperCoeff":
        return SuperCoeff(self.d, {k: fn(c) for k, c in self.comps.items()}, fn(self.zero))

    def derivative(self, i: int) -> "SuperCoeff":
        """Derivative in the i-th even coordinate."""
        return self.map(lambda c: c.derivative(i))

    def _signed(self, entries: Iterable[Tuple[Pair, int, object]]) -> "SuperCoeff":
        out = {}
        for key, sign, c in entries:
            out[key] = -c if sign & 1 else c
        return SuperCoeff(self.d, out, self.zero)

    def left_theta_deriv(self, alpha: int) -> "SuperCoeff":
        bit = 1 << (alpha - 1)
        return self._signed(
            ((I ^ bit, J), count_below(I, alpha), c) for (I, J), c in self.comps.items() if I & bit
        )

    def left_thetabar_deriv(self, beta: int) -> "SuperCoeff":
        bit = 1 << (beta - 1)
        return self._signed(
            ((I, J ^ bit), popcount(I) + count_below(J, beta), c)
            for (I, J), c in self.comps.items() if J & bit
        )

    def right_thetabar_deriv(self, beta: int) -> "SuperCoeff":
        bit = 1 << (beta - 1)
        return self._signed(
            ((I, J ^ bit), count_above(J, beta), c) for (I, J), c in self.comps.items() if J & bit
        )

    def right_theta_deriv(self, alpha: int) -> "SuperCoeff":
        bit = 1 << (alpha - 1)
        return self._signed(
            ((I ^ bit, J), popcount(J) + count_above(I, alpha), c)
            for (I, J), c in self.comps.items() if I & bit
        )

    def delta(self, K: Mask) -> "SuperCoeff":
        """theta^K-component as a function of theta-bar alone."""
        return SuperCoeff(self.d, {(0, J): c for (I, J), c in self.comps.items() if I == K}, self.zero)

    def delta_bar(self, L: Mask) -> "SuperCoeff":
        return self._signed(
            ((I, 0), popcount(I) * popcount(L), c) for (I, J), c in self.comps.items() if J == L
        )

    def berezin_integral(self):
        full = full_mask(self.d)
        return self.component(full, full)

    def theta_free(self) -> "SuperCoeff":
        return SuperCoeff(self.d, {(I, J): c for (I, J), c in self.comps.items() if not I}, self.zero)

    def thetabar_free(self) -> "SuperCoeff":
        return SuperCoeff(self.d, {(I, J): c for (I, J), c in self.comps.items() if not J}, self.zero)

    def swap(self, inner: Optional[Callable] = None) -> "SuperCoeff":
        """Exchange theta with theta-bar (and z with z-bar through ``inner``)."""
        inner = inner or (lambda c: c)
        return self._signed(
            ((J, I), popcount(I) * popcount(J), inner(c)) for (I, J), c in self.comps.items()
        )

    def invert(self) -> "SuperCoeff":
        body = self.body()
        inv_body = body.invert()
        x = self * inv_body - 1
        result = SuperCoeff.scalar(self.d, self.zero + 1)
        power = result
        for _ in range(2 * self.d):
            power = power * (-x)
            if power.is_exact_zero():
                break
            result = result + power
        return result * inv_body

    def exp(self) -> "SuperCoeff":
        if not self.body().vanishes():
            raise DomainError("Exponential of an element with a nonzero body")
        result = SuperCoeff.scalar(self.d, self.zero + 1)
        power = result
        for k in range(1, 2 * self.d + 1):
            power = power * self * CRat(Fraction(1, k))
            if power.is_exact_zero():
                break
            result = result + power
        return result

    def is_holomorphic(self) -> bool:
        return all(not J and getattr(c, "is_holomorphic", lambda: True)() for (I, J), c in self.comps.items())

    def is_antiholomorphic(self) -> bool:
        return all(not I and getattr(c, "is_antiholomorphic", lambda: True)() for (I, J), c in self.comps.items())

    def __eq__(self, other):
        if not isinstance(other, SuperCoeff):
            return NotImplemented
        return self.d == other.d and self.comps == other.comps

    __hash__ = None

    def __repr__(self):
        return f"SuperCoeff({self})"

    def __str__(self):
        parts = []
        for (I, J) in sorted(self.comps, key=lambda k: (popcount(k[0]) + popcount(k[1]), k)):
            label = "".join(f"th{a}" for a in indices_of(I)) + "".join(f"tb{b}" for b in indices_of(J))
            coeff = str(self.comps[(I, J)])
            parts.append(f"({coeff})*{label}" if label else f"({coeff})")
        return " + ".join(parts) if parts else "0"


class SuperFunction(NuSeries):
    """Formal series in nu whose coefficients are SuperCoeff elements over jets."""

    __slots__ = ()

    @property
    def d(self) -> int:
        return self.zero.d

    @property
    def space(self) -> JetSpace:
        return self.zero.zero.space

    @classmethod
    def zero_function(cls, space: JetSpace, d: int) -> "SuperFunction":
        return cls({}, INF, SuperCoeff(d, {}, space.zero()))

    @classmethod
    def lift(cls, series: NuSeries, d: int) -> "SuperFunction":
        """Embed a series of jets as theta-independent super function."""
        return cls(
            {k: SuperCoeff.scalar(d, c) for k, c in series.terms.items()},
            series.high,
            SuperCoeff(d, {}, series.zero),
        )

    @classmethod
    def from_components(cls, d: int, comps: Dict[Pair, NuSeries], zero_jet) -> "SuperFunction":
        high = min((s.high for s in comps.values()), default=INF)
        by_power: Dict[int, Dict[Pair, object]] = {}
        for key, series in comps.items():
            for k, c in series.terms.items():
                if k <= high:
                    by_power.setdefault(k, {})[key] = c
        zero = SuperCoeff(d, {}, zero_jet)
        return cls({k: SuperCoeff(d, cs, zero_jet) for k, cs in by_power.items()}, high, zero)

    @classmethod
    def monomial(cls, space: JetSpace, d: int, z_exps, zbar_exps, I: Mask = 0, J: Mask = 0,
                 c=1, power: int = 0) -> "SuperFunction":
        jet = space.monomial(z_exps, zbar_exps, c)
        return cls({power: SuperCoeff.basis(d, I, J, jet)}, INF, SuperCoeff(d, {}, space.zero()))

    @classmethod
    def grassmann(cls, space: JetSpace, d: int, I: Mask = 0, J: Mask = 0, c=1, power: int = 0) -> "SuperFunction":
        zeros = [0] * space.m
        return cls.monomial(space, d, zeros, zeros, I, J, c, power)

    def component(self, I: Mask, J: Mask) -> NuSeries:
        return NuSeries({k: c.component(I, J) for k, c in self.terms.items()}, self.high, self.zero.zero)

    def component_keys(self) -> List[Pair]:
        keys = set()
        for c in self.terms.values():
            keys.update(c.comps)
        return sorted(keys, key=lambda k: (popcount(k[0]) + popcount(k[1]), k))

    def body(self) -> NuSeries:
        return self.component(0, 0)

    def nilpotent_part(self) -> "SuperFunction":
        return self - SuperFunction.lift(self.body(), self.d)

    def parity(self) -> Optional[int]:
        parities = {c.parity() for c in self.terms.values() if not c.vanishes()}
        if not parities:
            return 0
        if None in parities or len(parities) > 1:
            return None
        return parities.pop()

    def graded_parts(self) -> Dict[int, "SuperFunction"]:
        out: Dict[int, Dict[int, SuperCoeff]] = {0: {}, 1: {}}
        for k, c in self.terms.items():
            for p, part in c.graded_parts().items():
                out[p][k] = part
        return {p: SuperFunction(terms, self.high, self.zero) for p, terms in out.items() if terms}

    def left_theta_deriv(self, alpha: int) -> "SuperFunction":
        return self.map(lambda c: c.left_theta_deriv(alpha))

    def left_thetabar_deriv(self, beta: int) -> "SuperFunction":
        return self.map(lambda c: c.left_thetabar_deriv(beta))

    def right_theta_deriv(self, alpha: int) -> "SuperFunction":
        return self.map(lambda c: c.right_theta_deriv(alpha))

    def right_thetabar_deriv(self, beta: int) -> "SuperFunction":
        return self.map(lambda c: c.right_thetabar_deriv(beta))

    def berezin_integral(self) -> NuSeries:
        full = full_mask(self.d)
        return self.component(full, full)

    def swap(self) -> "SuperFunction":
        return self.map(lambda c: c.swap(lambda j: j.swap_variables()))

    def is_holomorphic(self) -> bool:
        return all(c.is_holomorphic() for c in self.terms.values())

    def is_antiholomorphic(self) -> bool:
        return all(c.is_antiholomorphic() for c in self.terms.values())

    def nilpotent_powers_vanish(self) -> bool:
        return all(c.body().vanishes() for c in self.terms.values())

    def grassmann_inverse(self, order: Optional[int] = None) -> "SuperFunction":
        """Pointwise inverse: the body is inverted as a nu-series, the rest is nilpotent."""
        body_inv = self.body().nu_invert(order)
        lifted = SuperFunction.lift(body_inv, self.d)
        x = self * lifted - 1
        if not x.nilpotent_powers_vanish():
            raise NotInvertibleError("Body inverse failed to normalize the leading part")
        result = lifted.one_like()
        power = result
        for _ in range(2 * self.d):
            power = power * (-x)
            if power.is_exact_zero() or not power.terms:
                break
            result = result + power
        return result * lifted

    def exp_nilpotent(self) -> "SuperFunction":
        if not self.nilpotent_powers_vanish():
            raise DomainError("Exponential needs a super function without body")
        result = self.one_like()
        power = result
        for k in range(1, 2 * self.d + 1):
            power = power * self * CRat(Fraction(1, k))
            if not power.terms:
                break
            result = result + power
        return result

    def log_unipotent(self, max_terms: Optional[int] = None) -> "SuperFunction":
        """
        log(1 + x) where x is a sum of terms each nilpotent in the Grassmann
        sense, of positive jet degree, or of positive nu order.
        """
        x = self - 1
        limit = max_terms or (2 * self.d + self.space.D + 64)
        result = self.zero_like()
        power = self.one_like()
        for k in range(1, limit + 1):
            power = (power * x).truncate(x.high)
            if power.vanishes():
                return result + power
            result = result + power * CRat(Fraction((-1) ** (k + 1), k))
        raise DomainError("Logarithm of super function did not terminate")
