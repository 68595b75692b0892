"""
Exact coefficient arithmetic: complex rationals, truncated jets in z and z-bar,
formal Laurent series in nu, and jets carrying a Gaussian envelope.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from exceptions import (
    DimensionError,
    DivergentIntegralError,
    DomainError,
    NotInvertibleError,
)

logger = logging.getLogger(__name__)

INF = math.inf

Key = Tuple[int, ...]


def _as_crat(value) -> Optional["CRat"]:
    if isinstance(value, CRat):
        return value
    if isinstance(value, (int, Fraction)):
        return CRat(value)
    return None


class CRat:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def parse(cls, re_text: str, im_text: str = "0") -> "CRat":
        """Parse "p/q" strings into an exact complex rational."""
        try:
            return cls(Fraction(str(re_text).strip()), Fraction(str(im_text).strip()))
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"Invalid rational pair ({re_text!r}, {im_text!r}): {e}")

    @staticmethod
    def coerce(value) -> "CRat":
        c = _as_crat(value)
        if c is None:
            raise TypeError(f"Cannot use {type(value).__name__} as a complex rational")
        return c

    def __add__(self, other):
        o = _as_crat(other)
        if o is None:
            return NotImplemented
        return CRat(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = _as_crat(other)
        if o is None:
            return NotImplemented
        return CRat(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = _as_crat(other)
        if o is None:
            return NotImplemented
        return CRat(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        o = _as_crat(other)
        if o is None:
            return NotImplemented
        if not self.im and not o.im:
            return CRat(self.re * o.re)
        return CRat(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _as_crat(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = _as_crat(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int) -> "CRat":
        if n < 0:
            return self.inverse() ** (-n)
        result = CRat(1)
        for _ in range(n):
            result = result * self
        return result

    def __neg__(self):
        return CRat(-self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = _as_crat(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def inverse(self) -> "CRat":
        if not self:
            raise NotInvertibleError("Division by a zero complex rational")
        if not self.im:
            return CRat(1 / self.re)
        norm = self.re * self.re + self.im * self.im
        return CRat(self.re / norm, -self.im / norm)

    # ring protocol shared with Jet, SuperCoeff and NuSeries coefficients
    def invert(self) -> "CRat":
        return self.inverse()

    def conjugate(self) -> "CRat":
        return CRat(self.re, -self.im)

    def vanishes(self) -> bool:
        return not self

    def is_exact_zero(self) -> bool:
        return not self

    def zero_like(self) -> "CRat":
        return CRat(0)

    def constant(self) -> "CRat":
        return self

    def __repr__(self):
        return f"CRat({self})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"


@dataclass(frozen=True)
class LogAtom:
    """Formal logarithm of a nonzero scalar, kept symbolic inside exponents."""
    base: CRat
    multiplicity: int = 1

    def __post_init__(self):
        if not self.base:
            raise DomainError("Logarithm of zero")

    def exp(self) -> CRat:
        return self.base ** self.multiplicity

    def __neg__(self) -> "LogAtom":
        return LogAtom(self.base, -self.multiplicity)

    def __str__(self):
        prefix = "" if self.multiplicity == 1 else f"{self.multiplicity}*"
        return f"{prefix}log({self.base})"


def combine_logs(atoms: Iterable[LogAtom]) -> Dict[CRat, int]:
    """Collect log atoms by base; bases whose multiplicities cancel are dropped."""
    ledger: Dict[CRat, int] = {}
    for atom in atoms:
        ledger[atom.base] = ledger.get(atom.base, 0) + atom.multiplicity
    return {base: n for base, n in ledger.items() if n and base != CRat(1)}


@dataclass(frozen=True)
class JetSpace:
    """Jets in m holomorphic and m antiholomorphic variables, truncated above degree D."""
    m: int
    D: int

    def __post_init__(self):
        if self.m < 0 or self.D < 0:
            raise ValueError("JetSpace needs m >= 0 and D >= 0")

    @property
    def n_vars(self) -> int:
        return 2 * self.m

    @property
    def origin(self) -> Key:
        return (0,) * (2 * self.m)

    def check(self, other: "JetSpace") -> None:
        if self != other:
            raise DimensionError(f"Jet spaces differ: {self} vs {other}")

    def zero(self) -> "Jet":
        return Jet._raw(self, {}, INF)

    def one(self) -> "Jet":
        return self.const(1)

    def const(self, c) -> "Jet":
        c = CRat.coerce(c)
        return Jet._raw(self, {self.origin: c} if c else {}, INF)

    def monomial(self, z_exps: Sequence[int], zbar_exps: Sequence[int], c=1) -> "Jet":
        if len(z_exps) != self.m or len(zbar_exps) != self.m:
            raise DimensionError(f"Monomial exponents must have length {self.m}")
        if min(itertools.chain(z_exps, zbar_exps, [0])) < 0:
            raise ValueError("Exponents must be non-negative")
        key = tuple(z_exps) + tuple(zbar_exps)
        if sum(key) > self.D:
            raise DimensionError(f"Monomial of degree {sum(key)} exceeds jet degree {self.D}")
        c = CRat.coerce(c)
        return Jet._raw(self, {key: c} if c else {}, INF)

    def variable(self, i: int) -> "Jet":
        """The i-th coordinate: z^1..z^m for i < m, then z-bar^1..z-bar^m."""
        if not 0 <= i < 2 * self.m:
            raise DimensionError(f"Variable index {i} out of range for m={self.m}")
        key = tuple(1 if j == i else 0 for j in range(2 * self.m))
        return Jet(self, {key: CRat(1)})

    def z(self, k: int) -> "Jet":
        return self.variable(k)

    def zbar(self, k: int) -> "Jet":
        return self.variable(self.m + k)

    def basis(self, max_degree: Optional[int] = None) -> List[Key]:
        """Exponent keys of total degree at most max_degree, ordered by degree."""
        top = self.D if max_degree is None else min(max_degree, self.D)
        keys = [k for k in itertools.product(range(top + 1), repeat=2 * self.m) if sum(k) <= top]
        return sorted(keys, key=lambda k: (sum(k), tuple(-x for x in k)))


def _var_name(space: JetSpace, i: int) -> str:
    if i < space.m:
        return f"z{i + 1}"
    return f"zb{i - space.m + 1}"


class Jet:
    """
    Truncated Taylor polynomial in z and z-bar with exact coefficients.

    ``prec`` is the degree through which the jet is known exactly; INF marks
    an exact polynomial. Terms above ``prec`` are never stored.
    """

    __slots__ = ("space", "terms", "prec")

    def __init__(self, space: JetSpace, terms: Optional[Dict[Key, object]] = None, prec=INF):
        limit = space.D if prec == INF else min(prec, space.D)
        dropped = False
        clean = {}
        for key, c in (terms or {}).items():
            if len(key) != 2 * space.m:
                raise DimensionError(f"Key {key} does not match m={space.m}")
            c = CRat.coerce(c)
            if not c:
                continue
            if sum(key) > space.D:
                dropped = True
                continue
            if sum(key) <= limit:
                clean[key] = c
        if dropped:
            prec = min(prec, space.D)
        self.space = space
        self.terms = clean
        self.prec = prec if prec == INF else max(min(prec, space.D), -1)

    @classmethod
    def _raw(cls, space: JetSpace, terms: Dict[Key, CRat], prec) -> "Jet":
        jet = object.__new__(cls)
        jet.space = space
        jet.terms = terms
        jet.prec = prec if prec == INF else max(prec, -1)
        return jet

    # Inspection

    def valuation(self):
        if self.terms:
            return min(sum(k) for k in self.terms)
        return self.prec + 1

    def is_exact(self) -> bool:
        return self.prec == INF

    def vanishes(self) -> bool:
        """True when every known coefficient is zero."""
        return not self.terms

    def is_exact_zero(self) -> bool:
        return not self.terms and self.prec == INF

    def zero_like(self) -> "Jet":
        return self.space.zero()

    def constant(self) -> CRat:
        return self.terms.get(self.space.origin, CRat(0))

    def coefficient(self, z_exps: Sequence[int], zbar_exps: Sequence[int]) -> CRat:
        return self.terms.get(tuple(z_exps) + tuple(zbar_exps), CRat(0))

    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=-1)

    def is_holomorphic(self) -> bool:
        m = self.space.m
        return all(not any(k[m:]) for k in self.terms)

    def is_antiholomorphic(self) -> bool:
        m = self.space.m
        return all(not any(k[:m]) for k in self.terms)

    def truncated(self, prec) -> "Jet":
        if prec >= self.prec:
            return self
        return Jet._raw(self.space, {k: c for k, c in self.terms.items() if sum(k) <= prec}, prec)

    # Arithmetic

    def _check(self, other: "Jet") -> None:
        if other.space is not self.space:
            self.space.check(other.space)

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            prec = min(self.prec, other.prec)
            out = dict(self.terms)
            for key, c in other.terms.items():
                s = out.get(key)
                s = c if s is None else s + c
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
            if prec != INF:
                out = {k: c for k, c in out.items() if sum(k) <= prec}
            return Jet._raw(self.space, out, prec)
        c = _as_crat(other)
        if c is None:
            return NotImplemented
        return self + self.space.const(c)

    __radd__ = __add__

    def __neg__(self):
        return Jet._raw(self.space, {k: -c for k, c in self.terms.items()}, self.prec)

    def __sub__(self, other):
        if isinstance(other, Jet):
            return self + (-other)
        c = _as_crat(other)
        if c is None:
            return NotImplemented
        return self + (-c)

    def __rsub__(self, other):
        c = _as_crat(other)
        if c is None:
            return NotImplemented
        return (-self) + c

    def scale(self, c) -> "Jet":
        c = CRat.coerce(c)
        if not c:
            return self.space.zero()
        return Jet._raw(self.space, {k: v * c for k, v in self.terms.items()}, self.prec)

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return self._mul_jet(other)
        c = _as_crat(other)
        if c is None:
            return NotImplemented
        return self.scale(c)

    def __rmul__(self, other):
        c = _as_crat(other)
        if c is None:
            return NotImplemented
        return self.scale(c)

    def __truediv__(self, other):
        c = _as_crat(other)
        if c is None:
            return NotImplemented
        return self.scale(c.inverse())

    def _mul_jet(self, other: "Jet") -> "Jet":
        if not self.terms or not other.terms:
            prec = min(self.prec + other.valuation(), other.prec + self.valuation())
            prec = prec if prec == INF else min(prec, self.space.D)
            return Jet._raw(self.space, {}, prec)
        D = self.space.D
        prec = min(self.prec + other.valuation(), other.prec + self.valuation())
        limit = D if prec == INF else min(D, prec)
        dropped = False
        out: Dict[Key, CRat] = {}
        right = [(kb, cb, sum(kb)) for kb, cb in other.terms.items()]
        for ka, ca in self.terms.items():
            da = sum(ka)
            for kb, cb, db in right:
                deg = da + db
                if deg > D:
                    dropped = True
                    continue
                if deg > limit:
                    continue
                key = tuple(x + y for x, y in zip(ka, kb))
                s = out.get(key)
                out[key] = ca * cb if s is None else s + ca * cb
        if dropped:
            prec = min(prec, D)
        out = {k: c for k, c in out.items() if c}
        return Jet._raw(self.space, out, prec)

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return self.space == other.space and self.terms == other.terms and self.prec == other.prec

    __hash__ = None

    def agrees_with(self, other: "Jet") -> bool:
        """Equality on the jointly valid range of degrees."""
        return (self - other).vanishes()

    # Calculus

    def derivative(self, i: int) -> "Jet":
        out = {}
        for key, c in self.terms.items():
            e = key[i]
            if e:
                out[key[:i] + (e - 1,) + key[i + 1:]] = c * e
        return Jet._raw(self.space, out, self.prec - 1)

    def antiderivative(self, i: int) -> "Jet":
        """Antiderivative in the i-th variable with zero constant of integration."""
        D = self.space.D
        out = {}
        dropped = False
        for key, c in self.terms.items():
            if sum(key) + 1 > D:
                dropped = True
                continue
            e = key[i]
            out[key[:i] + (e + 1,) + key[i + 1:]] = c / (e + 1)
        prec = self.prec + 1
        if dropped or prec != INF:
            prec = min(prec, D)
        return Jet._raw(self.space, out, prec)

    def multiply_variable(self, i: int) -> "Jet":
        return self.space.variable(i) * self

    def euler_divide(self, shift: int = 0) -> "Jet":
        """Divide the homogeneous part of degree n by n + shift; parts where that vanishes are dropped."""
        out = {key: c / (sum(key) + shift) for key, c in self.terms.items() if sum(key) + shift}
        return Jet._raw(self.space, out, self.prec)

    def invert(self) -> "Jet":
        c0 = self.constant()
        if not c0:
            raise NotInvertibleError("Jet with zero constant term is not invertible")
        inv0 = c0.inverse()
        x = (self - c0).scale(inv0)
        neg_x = -x
        result = self.space.one()
        power = self.space.one()
        for _ in range(self.space.D + 1):
            power = power * neg_x
            result = result + power
            if power.vanishes():
                break
        return result.scale(inv0)

    def exp(self) -> "Jet":
        if self.constant():
            raise DomainError("Jet exponential needs a vanishing constant term")
        result = self.space.one()
        power = self.space.one()
        for k in range(1, self.space.D + 2):
            power = (power * self).scale(Fraction(1, k))
            result = result + power
            if power.vanishes():
                break
        return result

    def log(self) -> "Jet":
        if self.constant() != CRat(1):
            raise DomainError("Jet logarithm needs constant term 1")
        x = self - 1
        result = self.space.zero()
        power = self.space.one()
        for k in range(1, self.space.D + 2):
            power = power * x
            result = result + power.scale(Fraction((-1) ** (k + 1), k))
            if power.vanishes():
                break
        return result

    def swap_variables(self) -> "Jet":
        """Exchange z and z-bar exponents, keeping coefficients."""
        m = self.space.m
        return Jet._raw(self.space, {k[m:] + k[:m]: c for k, c in self.terms.items()}, self.prec)

    def conjugate(self) -> "Jet":
        m = self.space.m
        return Jet._raw(self.space, {k[m:] + k[:m]: c.conjugate() for k, c in self.terms.items()}, self.prec)

    def __repr__(self):
        return f"Jet({self})"

    def __str__(self):
        parts = []
        for key in sorted(self.terms, key=lambda k: (sum(k), tuple(-x for x in k))):
            factors = []
            for i, e in enumerate(key):
                if e == 1:
                    factors.append(_var_name(self.space, i))
                elif e > 1:
                    factors.append(f"{_var_name(self.space, i)}^{e}")
            c = self.terms[key]
            if not factors:
                parts.append(str(c))
            elif c == CRat(1):
                parts.append("*".join(factors))
            else:
                parts.append(f"{c}*" + "*".join(factors))
        text = " + ".join(parts) if parts else "0"
        if self.prec != INF:
            text += f" + O(deg {self.prec + 1})"
        return text


def integrate_gradient(space: JetSpace, grads: Sequence[Jet]) -> Jet:
    """
    Potential F with zero constant term whose gradient is ``grads``.

    Uses the Euler homotopy: on each homogeneous degree n the sum
    sum_i x_i G_i equals n F_n. Closedness must be checked separately.
    """
    if len(grads) != space.n_vars:
        raise DimensionError(f"Expected {space.n_vars} gradient components, got {len(grads)}")
    euler = space.zero()
    for i, g in enumerate(grads):
        euler = euler + g.multiply_variable(i)
    return euler.euler_divide()


def gradient_is_closed(grads: Sequence[Jet]) -> bool:
    for i, gi in enumerate(grads):
        for j in range(i + 1, len(grads)):
            if not gi.derivative(j).agrees_with(grads[j].derivative(i)):
                return False
    return True


class WeightedJet:
    """Jet p times the Gaussian envelope exp(-w * sum_k z^k z-bar^k)."""

    __slots__ = ("p", "w")

    def __init__(self, p: Jet, w: int = 0):
        if w < 0:
            raise ValueError("Gaussian weight must be non-negative")
        self.p = p
        self.w = w

    @property
    def space(self) -> JetSpace:
        return self.p.space

    def zero_like(self) -> "WeightedJet":
        return WeightedJet(self.space.zero(), self.w)

    def vanishes(self) -> bool:
        return self.p.vanishes()

    def is_exact_zero(self) -> bool:
        return self.p.is_exact_zero()

    def constant(self) -> CRat:
        return self.p.constant()

    def derivative(self, i: int) -> "WeightedJet":
        dp = self.p.derivative(i)
        if not self.w:
            return WeightedJet(dp, 0)
        m = self.space.m
        partner = self.space.zbar(i) if i < m else self.space.z(i - m)
        return WeightedJet(dp - (partner * self.p).scale(self.w), self.w)

    def _lift(self, other) -> Optional["WeightedJet"]:
        if isinstance(other, WeightedJet):
            return other
        if isinstance(other, Jet):
            return WeightedJet(other, 0)
        c = _as_crat(other)
        if c is not None:
            return WeightedJet(self.space.const(c), 0)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if o.w == self.w:
            return WeightedJet(self.p + o.p, self.w)
        if o.p.is_exact_zero():
            return self
        if self.p.is_exact_zero():
            return o
        raise DomainError(f"Cannot add functions with Gaussian weights {self.w} and {o.w}")

    __radd__ = __add__

    def __neg__(self):
        return WeightedJet(-self.p, self.w)

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        if isinstance(other, WeightedJet):
            return WeightedJet(self.p * other.p, self.w + other.w)
        if isinstance(other, Jet):
            return WeightedJet(self.p * other, self.w)
        c = _as_crat(other)
        if c is None:
            return NotImplemented
        return WeightedJet(self.p.scale(c), self.w)

    __rmul__ = __mul__

    def scale(self, c) -> "WeightedJet":
        return WeightedJet(self.p.scale(c), self.w)

    def swap_variables(self) -> "WeightedJet":
        return WeightedJet(self.p.swap_variables(), self.w)

    def __eq__(self, other):
        if not isinstance(other, WeightedJet):
            return NotImplemented
        return self.w == other.w and self.p == other.p

    __hash__ = None

    def __repr__(self):
        return f"WeightedJet({self.p}, w={self.w})"


def gaussian_moment(f) -> CRat:
    """
    Integral of f over C^m against Lebesgue measure, in units of pi^m.

    Each monomial z^a z-bar^b contributes prod_k a_k! / w^(a_k+1) when a = b
    and nothing otherwise.
    """
    if isinstance(f, Jet) or (isinstance(f, WeightedJet) and f.w < 1):
        raise DivergentIntegralError("Integrand has no Gaussian decay (weight 0)")
    if not isinstance(f, WeightedJet):
        raise TypeError(f"Cannot integrate {type(f).__name__}")
    if not f.p.is_exact():
        raise DomainError("Moment integration needs an exact polynomial factor; increase the jet degree")
    m = f.space.m
    total = CRat(0)
    for key, c in f.p.terms.items():
        a, b = key[:m], key[m:]
        if a != b:
            continue
        value = Fraction(1)
        for ak in a:
            value *= Fraction(math.factorial(ak), f.w ** (ak + 1))
        total = total + c * value
    return total


def _is_exact_zero(c) -> bool:
    return c.is_exact_zero()


class NuSeries:
    """
    Formal Laurent series in nu with a finite principal part.

    ``terms`` maps powers to coefficients of any ring implementing the
    coefficient protocol (Jet, WeightedJet, CRat, SuperCoeff, SuperDiffOp).
    ``high`` is the power through which the series is known; INF marks an
    exact finite series. Coefficients that vanish only up to jet precision
    are kept so their precision survives.
    """

    __slots__ = ("terms", "high", "zero")

    def __init__(self, terms: Optional[Dict[int, object]] = None, high=INF, zero=None):
        clean = {}
        for k, c in (terms or {}).items():
            if k > high or _is_exact_zero(c):
                continue
            clean[k] = c
        if zero is None:
            if not (terms or {}):
                raise ValueError("NuSeries needs a zero prototype when it has no terms")
            zero = next(iter(terms.values())).zero_like()
        self.terms = clean
        self.high = high
        self.zero = zero

    def _like(self, terms, high, zero=None, other=None) -> "NuSeries":
        cls = type(self)
        if other is not None and issubclass(type(other), cls):
            cls = type(other)
        return cls(terms, high, self.zero if zero is None else zero)

    @classmethod
    def constant(cls, c, high=INF) -> "NuSeries":
        return cls({0: c}, high, c.zero_like())

    @classmethod
    def monomial(cls, power: int, c, high=INF) -> "NuSeries":
        return cls({power: c}, high, c.zero_like())

    def zero_like(self) -> "NuSeries":
        return type(self)({}, INF, self.zero)

    def one_like(self) -> "NuSeries":
        return type(self)({0: self.zero + 1}, INF, self.zero)

    # Inspection

    def valuation(self):
        if self.terms:
            return min(self.terms)
        return self.high + 1

    @property
    def low(self):
        return self.valuation()

    def leading_power(self) -> Optional[int]:
        powers = [k for k, c in self.terms.items() if not c.vanishes()]
        return min(powers) if powers else None

    def coeff(self, k: int):
        return self.terms.get(k, self.zero)

    def powers(self) -> List[int]:
        return sorted(self.terms)

    def vanishes(self) -> bool:
        return all(c.vanishes() for c in self.terms.values())

    def is_exact_zero(self) -> bool:
        return not self.terms and self.high == INF

    def truncate(self, high) -> "NuSeries":
        if high >= self.high:
            return self
        return self._like({k: c for k, c in self.terms.items() if k <= high}, high)

    # Arithmetic

    def __add__(self, other):
        if not isinstance(other, NuSeries):
            if 0 > self.high:
                return self
            terms = dict(self.terms)
            terms[0] = self.coeff(0) + other
            return self._like(terms, self.high)
        high = min(self.high, other.high)
        out = {}
        for k, c in self.terms.items():
            if k <= high:
                out[k] = c
        for k, c in other.terms.items():
            if k <= high:
                out[k] = out[k] + c if k in out else c
        return self._like(out, high, other=other)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return self._like({k: -c for k, c in self.terms.items()}, self.high)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, NuSeries):
            return self._convolve(other)
        if isinstance(other, (int, Fraction)):
            other = CRat(other)
        return self._like({k: c * other for k, c in self.terms.items()}, self.high, self.zero * other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = CRat(other)
        return self._like({k: other * c for k, c in self.terms.items()}, self.high, other * self.zero)

    def _convolve(self, other: "NuSeries") -> "NuSeries":
        va, vb = self.valuation(), other.valuation()
        high = min(self.high + vb, other.high + va)
        out = {}
        for i, a in self.terms.items():
            for j, b in other.terms.items():
                k = i + j
                if k > high:
                    continue
                prod = a * b
                out[k] = out[k] + prod if k in out else prod
        return self._like(out, high, self.zero * other.zero, other)

    def shift(self, k: int) -> "NuSeries":
        """Multiply by nu^k."""
        return self._like({p + k: c for p, c in self.terms.items()}, self.high + k)

    def map(self, fn: Callable) -> "NuSeries":
        return self._like({k: fn(c) for k, c in self.terms.items()}, self.high, fn(self.zero))

    def derivative(self, i: int) -> "NuSeries":
        return self.map(lambda c: c.derivative(i))

    def nu_derivative(self) -> "NuSeries":
        return self._like({k - 1: c * k for k, c in self.terms.items() if k}, self.high - 1)

    def nu_invert(self, order: Optional[int] = None) -> "NuSeries":
        """
        Inverse series. ``order`` is the relative truncation used when the
        input is exact but the inverse is an infinite series.
        """
        lead_power = self.leading_power()
        if lead_power is None:
            raise NotInvertibleError("Series vanishes identically; no inverse")
        inv0 = self.terms[lead_power].invert()
        others = {k: c for k, c in self.terms.items() if k > lead_power}
        if self.high == INF and not others and _exactly_known(inv0):
            return self._like({-lead_power: inv0}, INF, inv0.zero_like())
        if self.high == INF:
            if order is None:
                raise ValueError("Inverting an exact non-monomial series needs an order")
            rel_high = order
        else:
            rel_high = self.high - lead_power
        h = {0: inv0}
        for k in range(1, rel_high + 1):
            acc = None
            for j in range(1, k + 1):
                f = others.get(lead_power + j)
                if f is None:
                    continue
                term = f * h[k - j]
                acc = term if acc is None else acc + term
            h[k] = inv0.zero_like() if acc is None else -(inv0 * acc)
        return self._like({k - lead_power: c for k, c in h.items()}, rel_high - lead_power, inv0.zero_like())

    def invert(self) -> "NuSeries":
        return self.nu_invert()

    def exp(self, max_terms: int = 64) -> "NuSeries":
        """Exponential of a series that is nilpotent or has positive valuation."""
        result = self.one_like()
        power = self.one_like()
        for k in range(1, max_terms + 1):
            power = ((power * self) * CRat(Fraction(1, k))).truncate(self.high)
            result = result + power
            if power.vanishes():
                return result
        raise DomainError("Exponential series did not terminate")

    def log(self, max_terms: int = 64) -> "NuSeries":
        """Logarithm of 1 + x where x is nilpotent or has positive valuation."""
        x = self - 1
        result = self.zero_like()
        power = self.one_like()
        for k in range(1, max_terms + 1):
            power = (power * x).truncate(x.high)
            result = result + power * CRat(Fraction((-1) ** (k + 1), k))
            if power.vanishes():
                return result
        raise DomainError("Logarithm series did not terminate")

    def __eq__(self, other):
        if not isinstance(other, NuSeries):
            return NotImplemented
        return self.high == other.high and self.terms == other.terms

    __hash__ = None

    def agrees_with(self, other: "NuSeries") -> bool:
        return (self - other).vanishes()

    def __repr__(self):
        return f"{type(self).__name__}({self})"

    def __str__(self):
        parts = []
        for k in sorted(self.terms):
            parts.append(f"nu^{k}*[{self.terms[k]}]")
        text = " + ".join(parts) if parts else "0"
        if self.high != INF:
            text += f" + O(nu^{self.high + 1})"
        return text


def _exactly_known(c) -> bool:
    if isinstance(c, Jet):
        return c.is_exact()
    prec = getattr(c, "prec", INF)
    return prec == INF


def jet_series(space: JetSpace, terms: Dict[int, Jet], high=INF) -> NuSeries:
    """Series of jets; the zero prototype is taken from ``space``."""
    return NuSeries(terms, high, space.zero())


def scalar_series(terms: Dict[int, object], high=INF) -> NuSeries:
    return NuSeries({k: CRat.coerce(c) for k, c in terms.items()}, high, CRat(0))

