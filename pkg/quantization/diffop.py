"""
Graded differential operators with super-function coefficients.

A SuperDiffOp is kept in normal form: a finite sum of c * d^e d_theta^S d_thetabar^T
with coefficients on the left. d^e differentiates in the 2m even coordinates,
d_theta^S = d_{s_k} ... d_{s_1} for S = {s_1 < ... < s_k}, likewise for
theta-bar, and the theta-bar block acts first.
"""
import logging
from typing import Dict, Iterable, List, Optional, Tuple

from exceptions import DimensionError
from quantization.coeff import INF, CRat, JetSpace, NuSeries
from quantization.grassmann import (
    SuperCoeff,
    SuperFunction,
    count_above,
    indices_of,
    popcount,
)

logger = logging.getLogger(__name__)

OpKey = Tuple[Tuple[int, ...], int, int]

EVEN = "x"
THETA = "theta"
THETABAR = "thetabar"


class SuperDiffOp:
    """Differential operator in z, z-bar, theta, theta-bar at a single nu order."""

    __slots__ = ("space", "d", "terms")

    def __init__(self, space: JetSpace, d: int, terms: Optional[Dict[OpKey, SuperCoeff]] = None):
        self.space = space
        self.d = d
        self.terms = {k: c for k, c in (terms or {}).items() if not c.is_exact_zero()}

    @classmethod
    def zero(cls, space: JetSpace, d: int) -> "SuperDiffOp":
        return cls(space, d)

    @classmethod
    def multiplication(cls, space: JetSpace, coeff: SuperCoeff) -> "SuperDiffOp":
        return cls(space, coeff.d, {(space.origin, 0, 0): coeff})

    @classmethod
    def identity(cls, space: JetSpace, d: int) -> "SuperDiffOp":
        return cls.multiplication(space, SuperCoeff.scalar(d, space.one()))

    @classmethod
    def partial(cls, space: JetSpace, d: int, kind: str, index: int) -> "SuperDiffOp":
        """Elementary derivative: even coordinate index, or odd index alpha >= 1."""
        one = SuperCoeff.scalar(d, space.one())
        if kind == EVEN:
            e = tuple(1 if j == index else 0 for j in range(space.n_vars))
            return cls(space, d, {(e, 0, 0): one})
        if not 1 <= index <= d:
            raise DimensionError(f"Odd index {index} out of range for d={d}")
        bit = 1 << (index - 1)
        if kind == THETA:
            return cls(space, d, {(space.origin, bit, 0): one})
        if kind == THETABAR:
            return cls(space, d, {(space.origin, 0, bit): one})
        raise ValueError(f"Unknown derivative kind {kind!r}")

    def zero_like(self) -> "SuperDiffOp":
        return SuperDiffOp(self.space, self.d)

    def _check(self, other: "SuperDiffOp") -> None:
        if other.d != self.d:
            raise DimensionError(f"Operators act on different odd dimensions: {self.d} vs {other.d}")
        self.space.check(other.space)

    # Inspection

    def vanishes(self) -> bool:
        return all(c.vanishes() for c in self.terms.values())

    def is_exact_zero(self) -> bool:
        return not self.terms

    def order(self) -> int:
        """Highest total derivative count among terms with non-vanishing coefficients; -1 for zero."""
        return max(
            (sum(e) + popcount(S) + popcount(T) for (e, S, T), c in self.terms.items() if not c.vanishes()),
            default=-1,
        )

    def graded_parts(self) -> Dict[int, "SuperDiffOp"]:
        parts: Dict[int, Dict[OpKey, SuperCoeff]] = {0: {}, 1: {}}
        for (e, S, T), c in self.terms.items():
            for p, part in c.graded_parts().items():
                parts[(p + popcount(S) + popcount(T)) & 1][(e, S, T)] = part
        return {p: SuperDiffOp(self.space, self.d, t) for p, t in parts.items() if t}

    def parity(self) -> Optional[int]:
        live = {p for p, op in self.graded_parts().items() if not op.vanishes()}
        if len(live) > 1:
            return None
        return live.pop() if live else 0

    # Linear structure

    def __add__(self, other):
        if isinstance(other, SuperDiffOp):
            self._check(other)
            out = dict(self.terms)
            for k, c in other.terms.items():
                out[k] = out[k] + c if k in out else c
            return SuperDiffOp(self.space, self.d, out)
        if isinstance(other, NuSeries):
            return NotImplemented
        coeff = other if isinstance(other, SuperCoeff) else SuperCoeff.scalar(self.d, self.space.const(other))
        return self + SuperDiffOp.multiplication(self.space, coeff)

    __radd__ = __add__

    def __neg__(self):
        return SuperDiffOp(self.space, self.d, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, NuSeries):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, SuperDiffOp):
            return self.compose(other)
        if isinstance(other, NuSeries):
            return NotImplemented
        return SuperDiffOp(self.space, self.d, {k: c * other for k, c in self.terms.items()})

    def __rmul__(self, other):
        if isinstance(other, SuperCoeff):
            return self.left_multiply(other)
        return SuperDiffOp(self.space, self.d, {k: other * c for k, c in self.terms.items()})

    def left_multiply(self, coeff: SuperCoeff) -> "SuperDiffOp":
        return SuperDiffOp(self.space, self.d, {k: coeff * c for k, c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, SuperDiffOp):
            return NotImplemented
        return self.d == other.d and self.space == other.space and self.terms == other.terms

    __hash__ = None

    # Action and composition

    def apply(self, f: SuperCoeff) -> SuperCoeff:
        result = None
        for (e, S, T), c in self.terms.items():
            g = f
            for beta in indices_of(T):
                g = g.left_thetabar_deriv(beta)
            for alpha in indices_of(S):
                g = g.left_theta_deriv(alpha)
            for i, n in enumerate(e):
                for _ in range(n):
                    g = g.derivative(i)
            term = c * g
            result = term if result is None else result + term
        if result is None:
            return SuperCoeff(self.d, {}, self.space.zero() * f.zero)
        return result

    def _prepend(self, kind: str, index: int) -> "SuperDiffOp":
        """Normal form of (elementary derivative) o self, by the graded Leibniz rule."""
        out: Dict[OpKey, SuperCoeff] = {}

        def add(key: OpKey, c: SuperCoeff) -> None:
            out[key] = out[key] + c if key in out else c

        for (e, S, T), c in self.terms.items():
            if kind == EVEN:
                add((e, S, T), c.derivative(index))
                add((e[:index] + (e[index] + 1,) + e[index + 1:], S, T), c)
                continue
            bit = 1 << (index - 1)
            if kind == THETA:
                add((e, S, T), c.left_theta_deriv(index))
                if S & bit:
                    continue
                key, sign = (e, S | bit, T), count_above(S, index)
            else:
                add((e, S, T), c.left_thetabar_deriv(index))
                if T & bit:
                    continue
                key, sign = (e, S, T | bit), popcount(S) + count_above(T, index)
            for p, part in c.graded_parts().items():
                add(key, -part if (p + sign) & 1 else part)
        return SuperDiffOp(self.space, self.d, out)

    def compose(self, other: "SuperDiffOp") -> "SuperDiffOp":
        self._check(other)
        result = other.zero_like()
        for (e, S, T), c in self.terms.items():
            op = other
            for beta in indices_of(T):
                op = op._prepend(THETABAR, beta)
            for alpha in indices_of(S):
                op = op._prepend(THETA, alpha)
            for i, n in enumerate(e):
                for _ in range(n):
                    op = op._prepend(EVEN, i)
            result = result + op.left_multiply(c)
        return result

    def graded_commutator(self, other: "SuperDiffOp") -> "SuperDiffOp":
        result = self.zero_like()
        for p, a in self.graded_parts().items():
            for q, b in other.graded_parts().items():
                ab, ba = a.compose(b), b.compose(a)
                result = result + (ab + ba if p * q else ab - ba)
        return result

    def __repr__(self):
        return f"SuperDiffOp({self})"

    def __str__(self):
        parts = []
        for (e, S, T), c in sorted(self.terms.items(), key=lambda kv: (sum(kv[0][0]), kv[0])):
            ders = [f"d{i}^{n}" for i, n in enumerate(e) if n]
            ders += [f"dth{a}" for a in reversed(indices_of(S))]
            ders += [f"dtb{b}" for b in reversed(indices_of(T))]
            parts.append(f"[{c}]" + ("*" + "*".join(ders) if ders else ""))
        return " + ".join(parts) if parts else "0"


def theta_projector(space: JetSpace, d: int) -> SuperDiffOp:
    """Restriction to theta = 0, as the product of (1 - theta^alpha d_alpha)."""
    result = SuperDiffOp.identity(space, d)
    for alpha in range(1, d + 1):
        theta = SuperDiffOp.multiplication(space, SuperCoeff.basis(d, 1 << (alpha - 1), 0, space.one()))
        euler = theta.compose(SuperDiffOp.partial(space, d, THETA, alpha))
        result = result.compose(SuperDiffOp.identity(space, d) - euler)
    return result


def thetabar_projector(space: JetSpace, d: int) -> SuperDiffOp:
    result = SuperDiffOp.identity(space, d)
    for beta in range(1, d + 1):
        thetabar = SuperDiffOp.multiplication(space, SuperCoeff.basis(d, 0, 1 << (beta - 1), space.one()))
        euler = thetabar.compose(SuperDiffOp.partial(space, d, THETABAR, beta))
        result = result.compose(SuperDiffOp.identity(space, d) - euler)
    return result


def iterated_bracket(op: SuperDiffOp, multipliers: Iterable[SuperCoeff]) -> SuperDiffOp:
    """[f_n, [f_(n-1), ... [f_0, op]...]] with multiplication operators f_i."""
    result = op
    for f in multipliers:
        result = SuperDiffOp.multiplication(op.space, f).graded_commutator(result)
    return result


class FormalOp(NuSeries):
    """Formal differential operator sum_k nu^k A_k with SuperDiffOp coefficients."""

    __slots__ = ()

    @property
    def space(self) -> JetSpace:
        return self.zero.space

    @property
    def d(self) -> int:
        return self.zero.d

    @classmethod
    def zero_op(cls, space: JetSpace, d: int) -> "FormalOp":
        return cls({}, INF, SuperDiffOp.zero(space, d))

    @classmethod
    def from_diffop(cls, op: SuperDiffOp, power: int = 0) -> "FormalOp":
        return cls({power: op}, INF, op.zero_like())

    @classmethod
    def identity(cls, space: JetSpace, d: int) -> "FormalOp":
        return cls.from_diffop(SuperDiffOp.identity(space, d))

    @classmethod
    def partial(cls, space: JetSpace, d: int, kind: str, index: int) -> "FormalOp":
        return cls.from_diffop(SuperDiffOp.partial(space, d, kind, index))

    @classmethod
    def multiplication(cls, f: SuperFunction) -> "FormalOp":
        space = f.space
        return cls(
            {k: SuperDiffOp.multiplication(space, c) for k, c in f.terms.items()},
            f.high,
            SuperDiffOp.zero(space, f.d),
        )

    def apply(self, f: SuperFunction) -> SuperFunction:
        va, vf = self.valuation(), f.valuation()
        high = min(self.high + vf, f.high + va)
        out = {}
        for r, op in self.terms.items():
            for j, c in f.terms.items():
                k = r + j
                if k > high:
                    continue
                value = op.apply(c)
                out[k] = out[k] + value if k in out else value
        return SuperFunction(out, high, f.zero)

    def compose(self, other: "FormalOp") -> "FormalOp":
        return self * other

    def graded_parts(self) -> Dict[int, "FormalOp"]:
        out: Dict[int, Dict[int, SuperDiffOp]] = {0: {}, 1: {}}
        for k, op in self.terms.items():
            for p, part in op.graded_parts().items():
                out[p][k] = part
        return {p: FormalOp(t, self.high, self.zero) for p, t in out.items() if t}

    def graded_commutator(self, other: "FormalOp") -> "FormalOp":
        result = FormalOp({}, min(self.high, other.high), self.zero)
        for p, a in self.graded_parts().items():
            for q, b in other.graded_parts().items():
                result = result + (a * b + b * a if p * q else a * b - b * a)
        return result

    def order_profile(self) -> Dict[int, int]:
        return {k: op.order() for k, op in sorted(self.terms.items()) if not op.vanishes()}

    def is_natural(self) -> bool:
        profile = self.order_profile()
        if any(k < 0 for k in profile):
            return False
        return all(order <= k for k, order in profile.items())


def apply(op: FormalOp, f: SuperFunction) -> SuperFunction:
    return op.apply(f)


def compose(a: FormalOp, b: FormalOp) -> FormalOp:
    return a.compose(b)


def graded_commutator(a, b):
    return a.graded_commutator(b)


def operator_order(op: SuperDiffOp) -> int:
    return op.order()


def is_natural(op: FormalOp) -> bool:
    return op.is_natural()


def spanning_monomials(space: JetSpace, d: int, max_degree: int) -> List[SuperFunction]:
    """Monomials z^a zb^b theta^I thetabar^J of even degree at most max_degree."""
    out = []
    for key in space.basis(max_degree):
        for I in range(1 << d):
            for J in range(1 << d):
                jet = space.monomial(key[:space.m], key[space.m:])
                out.append(SuperFunction({0: SuperCoeff.basis(d, I, J, jet)}, INF, SuperCoeff(d, {}, space.zero())))
    return out


def operators_agree_on(a: FormalOp, b: FormalOp, trials: Iterable[SuperFunction]) -> bool:
    """Equality by action on trial functions, independent of normal forms."""
    return all(a.apply(f).agrees_with(b.apply(f)) for f in trials)
