"""
Star products on U x C^{0|d} built from a base star product and an
admissible even function u = u_PQ theta^P theta-bar^Q.

Super functions correspond to 2^d x 2^d matrices over the base algebra;
the product is transferred from matrix multiplication over the base star
product.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from exceptions import (
    ConsistencyError,
    DimensionError,
    DomainError,
    InvalidTransitionError,
    NotAdmissibleError,
    NotInvertibleError,
    ValidationError,
)
from quantization.coeff import INF, Jet, JetSpace, NuSeries
from quantization.diffop import (
    EVEN,
    THETA,
    THETABAR,
    FormalOp,
    SuperDiffOp,
    operators_agree_on,
    spanning_monomials,
    theta_projector,
    thetabar_projector,
)
from quantization.grassmann import (
    Mask,
    Pair,
    SuperCoeff,
    SuperFunction,
    all_masks,
    indices_of,
    mask_of,
    popcount,
)
from quantization.linalg import determinant, invert_matrix, minor
from quantization.starprod import Potential, StarProduct, build_star

logger = logging.getLogger(__name__)


class NilpotentPotentialY:
    """Even nilpotent Y = nu^-1 Y_-1 + Y_0 + ... without a Grassmann-degree-0 part."""

    def __init__(self, Y: SuperFunction):
        if Y.parity() != 0:
            raise DomainError("Nilpotent potential must be even")
        if not Y.nilpotent_powers_vanish():
            raise DomainError("Nilpotent potential has a nonzero theta-free component")
        if Y.terms and Y.valuation() < -1:
            raise ValidationError(f"Nilpotent potential starts at nu^{Y.valuation()}; lowest allowed power is -1")
        self.Y = Y

    @property
    def d(self) -> int:
        return self.Y.d

    @property
    def space(self) -> JetSpace:
        return self.Y.space

    def top(self) -> SuperCoeff:
        return self.Y.coeff(-1)

    def b_matrix(self) -> List[List[Jet]]:
        """b_ab: the theta^a theta-bar^b coefficients of Y_-1, via left and right odd derivatives."""
        top = self.top()
        return [[top.left_theta_deriv(a).right_thetabar_deriv(b).body() for b in range(1, self.d + 1)]
                for a in range(1, self.d + 1)]

    def _antisymmetric(self, holomorphic: bool) -> List[List[Jet]]:
        top = self.top()
        zero = self.space.zero()
        out = [[zero for _ in range(self.d)] for _ in range(self.d)]
        for a in range(self.d):
            for c in range(a + 1, self.d):
                pair = mask_of([a + 1, c + 1])
                value = top.component(pair, 0) if holomorphic else top.component(0, pair)
                out[a][c] = value
                out[c][a] = -value
        return out

    def a_matrix(self) -> List[List[Jet]]:
        return self._antisymmetric(True)

    def c_matrix(self) -> List[List[Jet]]:
        return self._antisymmetric(False)

    def is_nondegenerate(self) -> bool:
        if self.d == 0:
            return True
        return bool(determinant(self.b_matrix(), self.space.one()).constant())

    def exp(self) -> SuperFunction:
        return self.Y.exp_nilpotent()


def exp_nilpotent(Y: NilpotentPotentialY) -> SuperFunction:
    """u = e^Y; the series terminates after at most 2d factors and u_00 = 1."""
    return Y.exp()


class MatrixOverStar:
    """
    2^d x 2^d matrix of nu-series of jets indexed by odd index sets; products use the base star product.

    ``high`` is the power through which missing entries are known to vanish.
    """

    def __init__(self, d: int, entries: Dict[Pair, NuSeries], zero, high=INF):
        self.d = d
        self.entries = {k: s for k, s in entries.items() if not s.is_exact_zero()}
        self.zero = zero
        self.high = high

    @classmethod
    def identity(cls, d: int, space: JetSpace) -> "MatrixOverStar":
        one = NuSeries({0: space.one()}, INF, space.zero())
        return cls(d, {(P, P): one for P in all_masks(d)}, space.zero())

    @classmethod
    def from_function(cls, f: SuperFunction) -> "MatrixOverStar":
        """Components f_IJ of f = f_IJ theta^I theta-bar^J as matrix entries."""
        return cls(f.d, {key: f.component(*key) for key in f.component_keys()}, f.zero.zero, f.high)

    def to_function(self) -> SuperFunction:
        return SuperFunction.from_components(self.d, self.entries, self.zero).truncate(self.high)

    def entry(self, P: Mask, Q: Mask) -> NuSeries:
        return self.entries.get((P, Q), NuSeries({}, self.high, self.zero))

    def star(self, other: "MatrixOverStar", base: StarProduct) -> "MatrixOverStar":
        high = min(self.high + other.valuation(), other.high + self.valuation())
        out: Dict[Pair, NuSeries] = {}
        rows: Dict[Mask, List[Tuple[Mask, NuSeries]]] = {}
        for (Q, R), s in other.entries.items():
            rows.setdefault(Q, []).append((R, s))
        for (P, Q), a in self.entries.items():
            for R, b in rows.get(Q, []):
                term = base.star_mul(a, b)
                out[(P, R)] = out[(P, R)] + term if (P, R) in out else term
        return MatrixOverStar(self.d, {k: s.truncate(high) for k, s in out.items()}, self.zero, high)

    def map(self, fn) -> "MatrixOverStar":
        return MatrixOverStar(self.d, {k: fn(k, s) for k, s in self.entries.items()}, self.zero, self.high)

    def __add__(self, other: "MatrixOverStar") -> "MatrixOverStar":
        high = min(self.high, other.high)
        out = dict(self.entries)
        for k, s in other.entries.items():
            out[k] = out[k] + s if k in out else s
        return MatrixOverStar(self.d, {k: s.truncate(high) for k, s in out.items()}, self.zero, high)

    def __neg__(self) -> "MatrixOverStar":
        return self.map(lambda k, s: -s)

    def __sub__(self, other: "MatrixOverStar") -> "MatrixOverStar":
        return self + (-other)

    def vanishes(self) -> bool:
        return all(s.vanishes() for s in self.entries.values())

    def valuation(self):
        return min((s.valuation() for s in self.entries.values()), default=self.high + 1)

    def __str__(self):
        parts = [f"[{P},{Q}] {s}" for (P, Q), s in sorted(self.entries.items())]
        text = "\n".join(parts) if parts else "0"
        return text if self.high == INF else f"{text}\n(missing entries are O(nu^{self.high + 1}))"


def _leading_unit(series: NuSeries) -> Optional[int]:
    """Leading nu-power of a series whose leading coefficient is invertible at the base point."""
    power = series.leading_power()
    if power is None or not series.terms[power].constant():
        return None
    return power


def star_inverse(p: NuSeries, base: StarProduct) -> NuSeries:
    """Inverse in (C[[z, zb]][nu^-1, nu]], star) of a series with invertible leading coefficient."""
    power = _leading_unit(p)
    if power is None:
        raise NotInvertibleError("Leading coefficient is not invertible at the base point")
    space = base.space
    q0 = NuSeries({-power: p.terms[power].invert()}, INF, space.zero())
    one = NuSeries({0: space.one()}, INF, space.zero())
    q = q0
    for _ in range(base.order + 2):
        residual = one - base.star_mul(p, q)
        if residual.vanishes():
            return q
        q = q + base.star_mul(q0, residual)
    residual = one - base.star_mul(p, q)
    if not residual.vanishes():
        raise ConsistencyError("Star inverse did not converge within the truncation order")
    return q


def _invert_rescaled(u: MatrixOverStar, base: StarProduct) -> MatrixOverStar:
    d, space = u.d, base.space
    scaled = {}
    for (P, Q), s in u.entries.items():
        weight = popcount(P) + popcount(Q)
        if weight % 2:
            raise NotAdmissibleError("Rescaling needs an even u")
        shifted = s.shift(weight // 2)
        if shifted.terms and shifted.valuation() < 0:
            raise NotAdmissibleError(f"Rescaled entry ({P},{Q}) keeps a negative nu power")
        scaled[(P, Q)] = shifted
    u_tilde = MatrixOverStar(d, scaled, u.zero, u.high)
    masks = all_masks(d)
    w = [[u_tilde.entry(P, Q).coeff(0) for Q in masks] for P in masks]
    try:
        w_inv = invert_matrix(w, space.one(), space.zero())
    except NotInvertibleError as e:
        raise NotAdmissibleError(f"Order-zero rescaled matrix is singular at the base point: {e}")
    v0 = MatrixOverStar(d, {
        (Q, P): NuSeries({0: w_inv[i][j]}, INF, space.zero())
        for i, Q in enumerate(masks) for j, P in enumerate(masks)
    }, u.zero)
    identity = MatrixOverStar.identity(d, space)
    v = v0
    for step in range(base.order + 2):
        residual = identity - u_tilde.star(v, base)
        if residual.vanishes():
            logger.debug(f"Rescaled inverse converged after {step} corrections")
            break
        v = v + v0.star(residual, base)
    else:
        raise ConsistencyError("Rescaled matrix inverse did not converge")
    return v.map(lambda k, s: s.shift((popcount(k[0]) + popcount(k[1])) // 2))


def _invert_eliminate(u: MatrixOverStar, base: StarProduct) -> MatrixOverStar:
    """Gauss-Jordan over the star algebra on [u | 1], pivoting on entries with invertible leading term."""
    space = base.space
    masks = all_masks(u.d)
    n = len(masks)
    empty = NuSeries({}, INF, space.zero())
    one = NuSeries({0: space.one()}, INF, space.zero())
    left = [[u.entry(P, Q) for Q in masks] for P in masks]
    right = [[one if i == j else empty for j in range(n)] for i in range(n)]
    for col in range(n):
        candidates = []
        for row in range(col, n):
            power = _leading_unit(left[row][col])
            if power is not None:
                candidates.append((power, row))
        if not candidates:
            raise NotAdmissibleError(f"No invertible pivot in column {col}")
        _, pivot_row = min(candidates)
        left[col], left[pivot_row] = left[pivot_row], left[col]
        right[col], right[pivot_row] = right[pivot_row], right[col]
        inv = star_inverse(left[col][col], base)
        left[col] = [base.star_mul(inv, s) for s in left[col]]
        right[col] = [base.star_mul(inv, s) for s in right[col]]
        for row in range(n):
            if row == col or not left[row][col].terms:
                continue
            factor = left[row][col]
            left[row] = [a - base.star_mul(factor, b) for a, b in zip(left[row], left[col])]
            right[row] = [a - base.star_mul(factor, b) for a, b in zip(right[row], right[col])]
    return MatrixOverStar(u.d, {
        (masks[i], masks[j]): right[i][j] for i in range(n) for j in range(n)
    }, space.zero())


def star_matrix_inverse(u: MatrixOverStar, base: StarProduct, method: str = "auto") -> MatrixOverStar:
    """
    Inverse v with u * v = v * u = 1 over the base star algebra.

    ``rescaled`` scales u_PQ by nu^((|P|+|Q|)/2) and inverts order by order
    from the jet inverse of the order-zero matrix; ``eliminate`` runs pivoted
    elimination; ``auto`` tries them in that order.
    """
    if method not in ("auto", "rescaled", "eliminate"):
        raise ValueError(f"Unknown inversion method {method!r}")
    if method in ("auto", "rescaled"):
        try:
            v = _invert_rescaled(u, base)
            logger.info(f"Inverted {2 ** u.d}x{2 ** u.d} matrix by rescaling")
            return v
        except NotAdmissibleError as e:
            if method == "rescaled":
                logger.error(f"u is not admissible: {e}")
                raise
            logger.warning(f"Rescaled inversion failed ({e}); falling back to elimination")
    v = _invert_eliminate(u, base)
    logger.info(f"Inverted {2 ** u.d}x{2 ** u.d} matrix by elimination")
    return v


def inverse_residuals(u: MatrixOverStar, v: MatrixOverStar, base: StarProduct) -> Tuple[MatrixOverStar, MatrixOverStar]:
    identity = MatrixOverStar.identity(u.d, base.space)
    return u.star(v, base) - identity, v.star(u, base) - identity


@dataclass
class StarProductFlag:
    """Whether products of regular basis elements start at nu^0 with C_0(f, g) = fg."""
    is_star_product: bool
    witnesses: List[str] = field(default_factory=list)


class SuperStarProduct:
    """The product on U x C^{0|d} associated with the pair (base star product, u)."""

    def __init__(self, base: StarProduct, u: SuperFunction, order: Optional[int] = None, method: str = "auto"):
        if u.space != base.space:
            raise DimensionError(f"u lives in {u.space}, base product in {base.space}")
        if not (u.body() - 1).vanishes():
            raise ValidationError("u must have theta-free component 1")
        self.base = base
        self.u = u
        self.order = base.order if order is None else order
        self.u_matrix = MatrixOverStar.from_function(u)
        self.v = star_matrix_inverse(self.u_matrix, base, method)
        self.u_inv = u.grassmann_inverse()

    @classmethod
    def from_potential(cls, potential: Potential, Y: NilpotentPotentialY, order: int,
                       margin: Optional[int] = None) -> "SuperStarProduct":
        """Build the base product at order + margin and use u = e^Y."""
        if margin is None:
            margin = 2 * Y.d + (1 if Y.d else 0)
        base = build_star(potential, order + margin)
        logger.info(f"Super star product with m={potential.m}, d={Y.d}, order {order} (internal {order + margin})")
        return cls(base, exp_nilpotent(Y), order, method="rescaled")

    @property
    def d(self) -> int:
        return self.u.d

    @property
    def space(self) -> JetSpace:
        return self.base.space

    def _check(self, f: SuperFunction) -> None:
        if not isinstance(f, SuperFunction):
            raise TypeError(f"Expected SuperFunction, got {type(f).__name__}")
        if f.d != self.d or f.space != self.space:
            raise DimensionError(f"Function has d={f.d} over {f.space}; product has d={self.d} over {self.space}")

    def mul(self, f: SuperFunction, g: SuperFunction) -> SuperFunction:
        """f * g = u^-1((uf)_KQ * v^QP * (ug)_PL) theta^K theta-bar^L."""
        self._check(f)
        self._check(g)
        A = MatrixOverStar.from_function(self.u * f)
        B = MatrixOverStar.from_function(self.u * g)
        H = A.star(self.v.star(B, self.base), self.base)
        return (self.u_inv * H.to_function()).truncate(self.order)

    def decompose(self, f: SuperFunction) -> MatrixOverStar:
        """The matrix f_K^I = (uf)_KQ * v^QI representing f."""
        self._check(f)
        return MatrixOverStar.from_function(self.u * f).star(self.v, self.base)

    def compose_matrix(self, F: MatrixOverStar) -> SuperFunction:
        """f = u^-1 (f_K^I * u_IL) theta^K theta-bar^L."""
        return (self.u_inv * F.star(self.u_matrix, self.base).to_function()).truncate(self.order)

    def right_decompose(self, f: SuperFunction) -> MatrixOverStar:
        """Entries (L, J) of f_L^J = v^JK * (-1)^(|K|(|K|+|L|)) (uf)_KL."""
        self._check(f)
        uf = MatrixOverStar.from_function(self.u * f)
        signed = uf.map(lambda k, s: -s if (popcount(k[0]) * (popcount(k[0]) + popcount(k[1]))) % 2 else s)
        product = self.v.star(signed, self.base)
        return MatrixOverStar(self.d, {(L, J): s for (J, L), s in product.entries.items()}, product.zero, product.high)

    def _odd_block(self, S: Mask, T: Mask) -> SuperDiffOp:
        return SuperDiffOp(self.space, self.d, {(self.space.origin, S, T): SuperCoeff.scalar(self.d, self.space.one())})

    def left_op(self, f: SuperFunction) -> FormalOp:
        """L_f = u^-1 (L_{f_K^I} theta^K delta_I) u, with delta_I = P_0 o d_theta^I."""
        F = self.decompose(f)
        space, d = self.space, self.d
        P0 = theta_projector(space, d)
        total = FormalOp.zero_op(space, d)
        for (K, I), series in F.entries.items():
            L = self.base.left_operator(series, d)
            theta_K = FormalOp.multiplication(SuperFunction.grassmann(space, d, K, 0))
            extract = FormalOp.from_diffop(P0.compose(self._odd_block(I, 0)))
            total = total + L * theta_K * extract
        return FormalOp.multiplication(self.u_inv) * total * FormalOp.multiplication(self.u)

    def right_op(self, f: SuperFunction) -> FormalOp:
        """R_f g = (-1)^(|f||g|) g * f, as u^-1 (R_{f_L^J} theta-bar^L delta-bar_J) u."""
        F = self.right_decompose(f)
        space, d = self.space, self.d
        Q0 = thetabar_projector(space, d)
        total = FormalOp.zero_op(space, d)
        for (L, J), series in F.entries.items():
            R = self.base.right_operator(series, d)
            thetabar_L = FormalOp.multiplication(SuperFunction.grassmann(space, d, 0, L))
            extract = FormalOp.from_diffop(Q0.compose(self._odd_block(0, J)))
            total = total + R * thetabar_L * extract
        return FormalOp.multiplication(self.u_inv) * total * FormalOp.multiplication(self.u)

    def graded_commutator(self, f: SuperFunction, g: SuperFunction) -> SuperFunction:
        """[f, g] = f * g - (-1)^(|f||g|) g * f, summed over homogeneous parts."""
        result = SuperFunction.zero_function(self.space, self.d)
        for p, fp in f.graded_parts().items():
            for q, gq in g.graded_parts().items():
                back = self.mul(gq, fp)
                result = result + (self.mul(fp, gq) + back if p * q else self.mul(fp, gq) - back)
        return result

    def trials(self, max_degree: int = 1) -> List[SuperFunction]:
        return spanning_monomials(self.space, self.d, max_degree)

    def is_star_product(self, trials: Optional[Sequence[SuperFunction]] = None) -> StarProductFlag:
        """Check lowest order 0 and C_0(f, g) = fg on pairs of trial functions."""
        trials = list(trials) if trials is not None else self.trials()
        witnesses = []
        for f in trials:
            for g in trials:
                product = self.mul(f, g)
                negative = [k for k, c in product.terms.items() if k < 0 and not c.vanishes()]
                if negative:
                    witnesses.append(f"{f} * {g} has nu^{min(negative)} term")
                    continue
                if not (product.coeff(0) - (f * g).coeff(0)).vanishes():
                    witnesses.append(f"C_0({f}, {g}) = {product.coeff(0)} differs from the pointwise product")
        return StarProductFlag(not witnesses, witnesses)

    def c1(self, f: SuperFunction, g: SuperFunction) -> SuperCoeff:
        return self.mul(f, g).coeff(1)

    def poisson_bracket(self, f: SuperFunction, g: SuperFunction) -> SuperFunction:
        """{f, g} = C_1(f, g) - (-1)^(|f||g|) C_1(g, f), as a nu^0 super function."""
        bracket = self.graded_commutator(f, g).coeff(1)
        return SuperFunction({0: bracket}, INF, bracket.zero_like())

    def poisson_tensor(self) -> List[List[SuperCoeff]]:
        """
        Blocks A^lk = C_1(zb^l, z^k), B^la = C_1(zb^l, theta^a), C^bk = C_1(thetabar^b, z^k)
        and D^ba = C_1(thetabar^b, theta^a), rows (l | b) and columns (k | a).
        """
        space, d, m = self.space, self.d, self.space.m
        zeros = [0] * m
        left = [SuperFunction.monomial(space, d, zeros, _unit(m, l)) for l in range(m)]
        left += [SuperFunction.grassmann(space, d, 0, 1 << b) for b in range(d)]
        right = [SuperFunction.monomial(space, d, _unit(m, k), zeros) for k in range(m)]
        right += [SuperFunction.grassmann(space, d, 1 << a, 0) for a in range(d)]
        return [[self.c1(f, g) for g in right] for f in left]


def _unit(m: int, k: int) -> List[int]:
    return [1 if i == k else 0 for i in range(m)]


def super_mul(S: SuperStarProduct, f: SuperFunction, g: SuperFunction) -> SuperFunction:
    return S.mul(f, g)


def left_op(S: SuperStarProduct, f: SuperFunction) -> FormalOp:
    return S.left_op(f)


def right_op(S: SuperStarProduct, f: SuperFunction) -> FormalOp:
    return S.right_op(f)


def decompose_matrix(S: SuperStarProduct, f: SuperFunction) -> MatrixOverStar:
    return S.decompose(f)


def exterior_power(rows: Sequence[Sequence[Jet]], space: JetSpace) -> Dict[Pair, Jet]:
    """Minors a^I_K of a d x d matrix for all index sets of equal size."""
    d = len(rows)
    out = {}
    for I in all_masks(d):
        for K in all_masks(d):
            if popcount(I) != popcount(K):
                continue
            rows_idx = [i - 1 for i in indices_of(I)]
            cols_idx = [k - 1 for k in indices_of(K)]
            value = minor(rows, rows_idx, cols_idx, space.one())
            if not value.is_exact_zero():
                out[(I, K)] = value
    return out


def change_trivialization(f: SuperFunction, a: Sequence[Sequence[Jet]], b: Sequence[Sequence[Jet]]) -> SuperFunction:
    """
    Rewrite f in the frame theta^a = a^a_c eta^c, theta-bar^b = b^b_e eta-bar^e:
    f'_KL = f_IJ a^I_K b^J_L.
    """
    d, space = f.d, f.space
    for name, mat in (("a", a), ("b", b)):
        if len(mat) != d or any(len(row) != d for row in mat):
            raise DimensionError(f"Transition matrix {name} must be {d}x{d}")
    if not all(x.is_holomorphic() for row in a for x in row):
        raise InvalidTransitionError("Transition matrix a must be holomorphic")
    if not all(x.is_antiholomorphic() for row in b for x in row):
        raise InvalidTransitionError("Transition matrix b must be antiholomorphic")
    for name, mat in (("a", a), ("b", b)):
        if d and not determinant(mat, space.one()).constant():
            logger.error(f"Transition matrix {name} is singular at the base point")
            raise InvalidTransitionError(f"Transition matrix {name} is singular at the base point")
    wedge_a = exterior_power(a, space)
    wedge_b = exterior_power(b, space)
    out: Dict[Pair, NuSeries] = {}
    for (I, J) in f.component_keys():
        series = f.component(I, J)
        for (I2, K), ak in wedge_a.items():
            if I2 != I:
                continue
            for (J2, L), bl in wedge_b.items():
                if J2 != J:
                    continue
                term = series * (ak * bl)
                out[(K, L)] = out[(K, L)] + term if (K, L) in out else term
    return SuperFunction.from_components(d, out, space.zero())


def transition_inverse(rows: Sequence[Sequence[Jet]], space: JetSpace) -> List[List[Jet]]:
    try:
        return invert_matrix(rows, space.one(), space.zero())
    except NotInvertibleError as e:
        raise InvalidTransitionError(str(e))


@dataclass
class IdentityReport:
    """Named boolean checks; ``failures`` lists the names of checks that did not hold."""
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def failures(self) -> List[str]:
        return [name for name, ok in self.checks.items() if not ok]


def verify_X_identities(S: SuperStarProduct, X: SuperFunction, trials: Optional[Iterable[SuperFunction]] = None) -> IdentityReport:
    """
    L_{dX/dz^k} = dX/dz^k + d/dz^k, L_{dX/dtheta^a} = dX/dtheta^a + d/dtheta^a
    and the right-operator counterparts in z-bar and theta-bar.
    """
    trials = list(trials) if trials is not None else S.trials()
    space, d, m = S.space, S.d, S.space.m
    report = IdentityReport()

    def expected(grad: SuperFunction, kind: str, index: int) -> FormalOp:
        return FormalOp.multiplication(grad) + FormalOp.partial(space, d, kind, index)

    for k in range(m):
        grad = X.derivative(k)
        report.checks[f"L[dX/dz{k + 1}]"] = operators_agree_on(S.left_op(grad), expected(grad, EVEN, k), trials)
        grad_bar = X.derivative(m + k)
        report.checks[f"R[dX/dzb{k + 1}]"] = operators_agree_on(
            S.right_op(grad_bar), expected(grad_bar, EVEN, m + k), trials)
    for alpha in range(1, d + 1):
        grad = X.left_theta_deriv(alpha)
        report.checks[f"L[dX/dth{alpha}]"] = operators_agree_on(S.left_op(grad), expected(grad, THETA, alpha), trials)
        grad_bar = X.left_thetabar_deriv(alpha)
        report.checks[f"R[dX/dtb{alpha}]"] = operators_agree_on(
            S.right_op(grad_bar), expected(grad_bar, THETABAR, alpha), trials)
    for name, ok in report.checks.items():
        logger.debug(f"{name}: {'ok' if ok else 'residual'}")
    return report


def super_hessian(X: SuperFunction) -> List[List[SuperCoeff]]:
    """
    Hessian of X_-1 with rows (k | a) and columns (l | b):
    d_k d_lb X, (d_k X) <-d_tb, ->d_th (d_lb X), ->d_th X <-d_tb.
    """
    top = X.coeff(-1)
    m, d = X.space.m, X.d
    rows = []
    for k in range(m):
        dk = top.derivative(k)
        rows.append([dk.derivative(m + l) for l in range(m)] + [dk.right_thetabar_deriv(b) for b in range(1, d + 1)])
    for a in range(1, d + 1):
        da = top.left_theta_deriv(a)
        rows.append([da.derivative(m + l) for l in range(m)] + [da.right_thetabar_deriv(b) for b in range(1, d + 1)])
    return rows


def verify_poisson_hessian(S: SuperStarProduct, X: SuperFunction) -> bool:
    """The C_1 tensor is inverse to the super Hessian of X_-1 up to jet truncation."""
    H = super_hessian(X)
    G = S.poisson_tensor()
    n = len(H)
    one = SuperCoeff.scalar(S.d, S.space.one())
    for i in range(n):
        for j in range(n):
            acc = -one if i == j else one.zero_like()
            for k in range(n):
                acc = acc + H[i][k] * G[k][j]
            if not acc.vanishes():
                logger.debug(f"Hessian-tensor product entry ({i},{j}) = {acc}")
                return False
    return True


def products_agree(S1: SuperStarProduct, S2: SuperStarProduct, trials: Iterable[SuperFunction]) -> bool:
    trials = list(trials)
    return all(S1.mul(f, g).agrees_with(S2.mul(f, g)) for f in trials for g in trials)


def verify_supercommutation(S: SuperStarProduct, X: SuperFunction, holomorphic: Iterable[SuperFunction]) -> IdentityReport:
    """
    [dX/dz^k, a] = da/dz^k and [dX/dtheta^a, a] = da/dtheta^a for holomorphic a;
    the gradients dX/dz^k, dX/dtheta^a pairwise supercommute.
    """
    m, d = S.space.m, S.d
    report = IdentityReport()
    grads = [(f"dX/dz{k + 1}", X.derivative(k), lambda a, k=k: a.derivative(k)) for k in range(m)]
    grads += [(f"dX/dth{al}", X.left_theta_deriv(al), lambda a, al=al: a.left_theta_deriv(al))
              for al in range(1, d + 1)]
    for i, a in enumerate(holomorphic):
        for name, grad, deriv in grads:
            report.checks[f"[{name}, a{i}]"] = S.graded_commutator(grad, a).agrees_with(deriv(a))
    for i, (name1, g1, _) in enumerate(grads):
        for name2, g2, _ in grads[i:]:
            report.checks[f"[{name1}, {name2}]"] = S.graded_commutator(g1, g2).vanishes()
    return report


def verify_bracket_laws(S: SuperStarProduct, trials: Sequence[SuperFunction],
                        max_triples: Optional[int] = None) -> IdentityReport:
    """
    Graded antisymmetry and the graded Jacobi identity of {f, g} on
    homogeneous trial functions.

    The Jacobi identity is checked on every increasing triple, or on the
    first ``max_triples`` of them when given.
    """
    trials = [p for p in trials if p.parity() is not None]
    report = IdentityReport()
    brackets = {}
    for i, f in enumerate(trials):
        for j, g in enumerate(trials):
            brackets[i, j] = S.poisson_bracket(f, g)
    for i, f in enumerate(trials):
        for j, g in enumerate(trials[i:], start=i):
            sign = -1 if f.parity() * g.parity() else 1
            report.checks[f"antisymmetry({i},{j})"] = (brackets[i, j] + brackets[j, i] * sign).vanishes()
    triples = [(i, j, k) for i in range(len(trials)) for j in range(i + 1, len(trials))
               for k in range(j + 1, len(trials))]
    if max_triples is not None:
        triples = triples[:max_triples]
    for i, j, k in triples:
        f, g, h = trials[i], trials[j], trials[k]
        sign = -1 if f.parity() * g.parity() else 1
        lhs = S.poisson_bracket(f, brackets[j, k])
        rhs = S.poisson_bracket(brackets[i, j], h) + S.poisson_bracket(g, brackets[i, k]) * sign
        report.checks[f"jacobi({i},{j},{k})"] = lhs.agrees_with(rhs)
    return report


def verify_shift_invariance(S: SuperStarProduct, X: SuperFunction, a: SuperFunction, b: SuperFunction,
                            trials: Iterable[SuperFunction], margin: Optional[int] = None) -> bool:
    """
    X and X + a + b give the same product for even a holomorphic and b antiholomorphic.

    Raises:
        DomainError: If a is not holomorphic, b not antiholomorphic, or either is odd
    """
    if not a.is_holomorphic() or not b.is_antiholomorphic():
        raise DomainError("shift must be a holomorphic plus an antiholomorphic function")
    if a.parity() != 0 or b.parity() != 0:
        raise DomainError("shift must be even")
    shifted = X + a + b
    moved = SuperStarProduct.from_potential(
        Potential(shifted.body()), NilpotentPotentialY(shifted.nilpotent_part()), S.order, margin)
    return products_agree(S, moved, trials)
