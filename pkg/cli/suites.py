"""
Identity suites run against a scenario.

Each suite pairs a mathematical statement with a check; objects shared by
several suites (the product, its Berezin transform, the trace density) are
built once, on first use, by SuiteContext.
"""
import logging
import random
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional, Tuple

from config import EngineSettings
from exceptions import DomainError, SuperStarError
from cli.scenario import Scenario, build_X, build_product
from quantization.berezin import (
    SuperBerezin,
    XPrime,
    compute_X_prime,
    gradient_residuals,
)
from quantization.coeff import WeightedJet
from quantization.diffop import spanning_monomials
from quantization.grassmann import SuperFunction
from quantization.linalg import determinant
from quantization.starprod import TraceData, dual_potential
from quantization.superstar import (
    NilpotentPotentialY,
    SuperStarProduct,
    change_trivialization,
    inverse_residuals,
    verify_bracket_laws,
    verify_poisson_hessian,
    verify_shift_invariance,
    verify_supercommutation,
    verify_X_identities,
)
from quantization.trace import (
    StrFunctional,
    SupertraceDensity,
    density_leading_term,
    supertrace_defect,
    supertrace_density,
    verify_bert_identities,
    verify_leading_theorems,
)

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"

# Failures listed per suite in a report
MAX_LISTED_FAILURES = 10


@dataclass
class SuiteResult:
    """Outcome of one suite: status, the statement it checks and printable details."""
    name: str
    statement: str
    status: str
    details: Dict[str, object] = field(default_factory=dict)
    seconds: Optional[float] = None

    @property
    def failed(self) -> bool:
        return self.status == FAIL


def weigh(f: SuperFunction, w: int) -> SuperFunction:
    """Attach the Gaussian envelope exp(-w |z|^2) to every component of f."""
    return f.map(lambda c: c.map(lambda jet: WeightedJet(jet, w)))


class SuiteContext:
    """Lazily built objects of one scenario run."""

    def __init__(self, scenario: Scenario, settings: EngineSettings):
        self.scenario = scenario
        self.settings = settings

    def rng(self, suite: str) -> random.Random:
        """Generator seeded by scenario seed and suite name, independent of which suites run."""
        return random.Random(f"{self.scenario.seed}:{suite}")

    @cached_property
    def X(self) -> SuperFunction:
        return build_X(self.scenario)

    @cached_property
    def S(self) -> SuperStarProduct:
        return build_product(self.scenario, self.settings)

    @cached_property
    def Y(self) -> Optional[NilpotentPotentialY]:
        if self.scenario.explicit_u:
            return None
        return NilpotentPotentialY(self.X.nilpotent_part())

    @cached_property
    def trials(self) -> List[SuperFunction]:
        return spanning_monomials(self.S.space, self.S.d, self.scenario.trial_degree)

    @cached_property
    def B(self) -> SuperBerezin:
        return SuperBerezin(self.S)

    @cached_property
    def trace(self) -> TraceData:
        return dual_potential(self.S.base)

    @cached_property
    def density(self) -> SupertraceDensity:
        return supertrace_density(self.S, self.trace)

    @cached_property
    def sigma(self) -> StrFunctional:
        return StrFunctional(self.S, self.density)

    @cached_property
    def x_prime(self) -> XPrime:
        return compute_X_prime(self.B, self.X, self.density.rho)

    def has(self, name: str) -> bool:
        """Whether a lazily built object has been computed already."""
        return name in self.__dict__

    def pairs(self, suite: str) -> List[Tuple[SuperFunction, SuperFunction]]:
        """All trial pairs at the base point, seeded samples elsewhere."""
        trials = self.trials
        if self.S.space.m == 0:
            return [(f, g) for f in trials for g in trials]
        rng = self.rng(suite)
        return [(rng.choice(trials), rng.choice(trials)) for _ in range(self.scenario.samples)]

    def integrable(self, f: SuperFunction) -> SuperFunction:
        """f itself at the base point, f with a Gaussian envelope when m > 0."""
        if self.S.space.m == 0:
            return f
        return weigh(f, self.scenario.gaussian_weight)


def _label(f: SuperFunction) -> str:
    text = str(f)
    return text[len("nu^0*["):-1] if text.startswith("nu^0*[") and text.count("nu^") == 1 else text


def _result(failures: List[str], checked: int) -> Tuple[str, Dict[str, object]]:
    details: Dict[str, object] = {"checked": checked, "failures": failures[:MAX_LISTED_FAILURES]}
    if len(failures) > MAX_LISTED_FAILURES:
        details["more_failures"] = len(failures) - MAX_LISTED_FAILURES
    return (PASS if not failures else FAIL), details


def check_associativity(ctx: SuiteContext):
    S, rng = ctx.S, ctx.rng("associativity")
    failures = []
    for _ in range(ctx.scenario.samples):
        f, g, h = (rng.choice(ctx.trials) for _ in range(3))
        if not S.mul(S.mul(f, g), h).agrees_with(S.mul(f, S.mul(g, h))):
            failures.append(f"({_label(f)}, {_label(g)}, {_label(h)})")
    return _result(failures, ctx.scenario.samples)


def check_separation(ctx: SuiteContext):
    S = ctx.S
    failures = []
    checked = 0
    for a in (p for p in ctx.trials if p.is_holomorphic()):
        for f in ctx.trials:
            checked += 1
            if not S.mul(a, f).agrees_with(a * f):
                failures.append(f"{_label(a)} * {_label(f)}")
    for b in (p for p in ctx.trials if p.is_antiholomorphic()):
        for f in ctx.trials:
            checked += 1
            if not S.mul(f, b).agrees_with(f * b):
                failures.append(f"{_label(f)} * {_label(b)}")
    return _result(failures, checked)


def check_naturality(ctx: SuiteContext):
    S = ctx.S
    failures = []
    for f in ctx.trials:
        if not S.left_op(f).is_natural():
            failures.append(f"L[{_label(f)}] profile {S.left_op(f).order_profile()}")
        if not S.right_op(f).is_natural():
            failures.append(f"R[{_label(f)}] profile {S.right_op(f).order_profile()}")
    singular = next((p for p in ctx.trials if p.coeff(0).constant() == 0), ctx.trials[0]).shift(-1)
    if S.left_op(singular).is_natural():
        failures.append(f"L[{_label(singular)}] is natural although its symbol has a nu^-1 term")
    return _result(failures, 2 * len(ctx.trials) + 1)


def _shift_pair(S: SuperStarProduct) -> Tuple[SuperFunction, SuperFunction]:
    """An even holomorphic a and antiholomorphic b to add to X."""
    space, d, m = S.space, S.d, S.space.m
    zeros = [0] * m
    if m and space.D:
        power = [min(2, space.D)] + [0] * (m - 1)
        a = SuperFunction.monomial(space, d, power, zeros, 0, 0, 1, -1)
        b = SuperFunction.monomial(space, d, zeros, power, 0, 0, 2, -1)
    else:
        a = SuperFunction.grassmann(space, d, 0, 0, 3, -1)
        b = SuperFunction.grassmann(space, d, 0, 0, 5, 0)
    if d >= 2:
        a = a + SuperFunction.grassmann(space, d, 3, 0, 1, -1)
        b = b + SuperFunction.grassmann(space, d, 0, 3, 1, 0)
    return a, b


def check_operator_identities(ctx: SuiteContext):
    if ctx.scenario.explicit_u:
        return SKIPPED, {"reason": "u is given directly, not as exp of a potential"}
    S, X = ctx.S, ctx.X
    report = verify_X_identities(S, X, ctx.trials)
    holomorphic = [p for p in ctx.trials if p.is_holomorphic()][:4]
    report.checks.update(verify_supercommutation(S, X, holomorphic).checks)
    report.checks["C_1 inverts the super Hessian"] = verify_poisson_hessian(S, X)
    rng = ctx.rng("operator-identities")
    sample = rng.sample(ctx.trials, min(len(ctx.trials), ctx.scenario.samples + 1))
    report.checks.update(verify_bracket_laws(S, sample).checks)
    a, b = _shift_pair(S)
    report.checks["X + a + b gives the same product"] = verify_shift_invariance(
        S, X, a, b, sample, ctx.settings.nu_margin(S.d))
    return _result(report.failures, len(report.checks))


def check_matrix_inverse(ctx: SuiteContext):
    S = ctx.S
    right, left = inverse_residuals(S.u_matrix, S.v, S.base)
    failures = []
    if not right.vanishes():
        failures.append(f"u * v - 1 = {right}")
    if not left.vanishes():
        failures.append(f"v * u - 1 = {left}")
    return _result(failures, 2)


def check_star_product_flag(ctx: SuiteContext):
    S = ctx.S
    flag = S.is_star_product(spanning_monomials(S.space, S.d, 1))
    expected = True if ctx.scenario.expect_star_product is None else ctx.scenario.expect_star_product
    details: Dict[str, object] = {
        "is_star_product": flag.is_star_product,
        "expected": expected,
        "witnesses": flag.witnesses[:MAX_LISTED_FAILURES],
    }
    if S.d:
        zeros = [0] * S.space.m
        thetabar = SuperFunction.monomial(S.space, S.d, zeros, zeros, 0, 1)
        theta = SuperFunction.monomial(S.space, S.d, zeros, zeros, 1, 0)
        product = S.mul(thetabar, theta)
        details["tb1 * th1"] = str(product)
        details["C_0(tb1, th1)"] = str(product.coeff(0))
    return (PASS if flag.is_star_product == expected else FAIL), details


def check_supertrace(ctx: SuiteContext):
    S, sigma = ctx.S, ctx.sigma
    failures = []
    pairs = ctx.pairs("supertrace")
    for f, g in pairs:
        fw = ctx.integrable(f)
        defect = supertrace_defect(sigma, fw, g)
        if not defect.vanishes():
            failures.append(f"sigma([{_label(f)}, {_label(g)}]) = {defect}")
        product = S.mul(fw, g)
        if not sigma.via_matrix(product).agrees_with(sigma.via_density(product)):
            failures.append(f"matrix and density evaluations differ on {_label(f)} * {_label(g)}")
    return _result(failures, len(pairs))


def check_berezin_trace(ctx: SuiteContext):
    failures = []
    pairs = ctx.pairs("berezin-trace")
    for f, g in pairs:
        report = verify_bert_identities(ctx.S, ctx.density, ctx.B, ctx.integrable(f), g)
        if not report.passed:
            failures.append(f"({_label(f)}, {_label(g)}): {report.weighted_left} / {report.weighted_right}")
    return _result(failures, len(pairs))


def check_dual_potential(ctx: SuiteContext):
    if ctx.scenario.explicit_u:
        return SKIPPED, {"reason": "u is given directly, not as exp of a potential"}
    xp = ctx.x_prime
    residuals = gradient_residuals(ctx.X, xp, ctx.density.rho)
    failures = [f"coordinate {i}: {r}" for i, r in enumerate(residuals) if not r.vanishes()]
    status, details = _result(failures, len(residuals))
    details["X'"] = str(xp.Xp)
    if xp.log_atom is not None:
        details["log_constant"] = str(xp.log_atom)
    return status, details


def check_leading_terms(ctx: SuiteContext):
    if ctx.scenario.explicit_u:
        return SKIPPED, {"reason": "u is given directly, not as exp of a potential"}
    report = density_leading_term(ctx.S, ctx.density)
    failures = list(report.failures)
    checked = len(report.checks)
    Y = ctx.Y
    if Y.d:
        b = [[x.constant() for x in row] for row in Y.b_matrix()]
        a = [[x.constant() for x in row] for row in Y.a_matrix()]
        c = [[x.constant() for x in row] for row in Y.c_matrix()]
        leading = verify_leading_theorems(Y.d, b=b, a=a, c=c)
        if not any(x for row in a + c for x in row):
            leading.checks.update(verify_leading_theorems(Y.d, h=b).checks)
        failures += leading.failures
        checked += len(leading.checks)
    return _result(failures, checked)


def _random_transition(rng: random.Random, ctx: SuiteContext, holomorphic: bool) -> List[List]:
    """
    Constant matrices at the base point. Elsewhere a constant diagonal plus
    off-diagonal entries linear in z (a, upper) or z-bar (b, lower), so the
    determinant stays constant.
    """
    space, d = ctx.S.space, ctx.S.d
    while True:
        if space.m == 0:
            rows = [[space.const(rng.randint(-2, 2)) for _ in range(d)] for _ in range(d)]
        else:
            rows = [[space.zero() for _ in range(d)] for _ in range(d)]
            for x in range(d):
                rows[x][x] = space.const(rng.choice((-2, -1, 1, 2)))
                for y in range(d):
                    if (y > x) if holomorphic else (y < x):
                        k = rng.randrange(space.m)
                        var = space.z(k) if holomorphic else space.zbar(k)
                        rows[x][y] = space.const(rng.randint(-2, 2)) + var * rng.choice((-1, 1))
        if determinant(rows, space.one()).constant():
            return rows


def check_trivialization(ctx: SuiteContext):
    S = ctx.S
    if not S.d:
        return SKIPPED, {"reason": "no odd coordinates"}
    rng = ctx.rng("trivialization")
    failures = []
    inexact = 0
    checked = 0
    for sample in range(ctx.scenario.samples):
        a, b = _random_transition(rng, ctx, True), _random_transition(rng, ctx, False)

        def T(f: SuperFunction) -> SuperFunction:
            return change_trivialization(f, a, b)

        moved = SuperStarProduct(S.base, T(S.u), S.order)
        for _ in range(ctx.scenario.samples):
            f, g = rng.choice(ctx.trials), rng.choice(ctx.trials)
            checked += 1
            if not T(S.mul(f, g)).agrees_with(moved.mul(T(f), T(g))):
                failures.append(f"sample {sample}: product of {_label(f)}, {_label(g)}")
        sigma_moved = StrFunctional(moved, supertrace_density(moved, ctx.trace))
        sigma_trials = ctx.trials if S.space.m == 0 else ctx.trials[:ctx.scenario.samples]
        for f in sigma_trials:
            checked += 1
            try:
                same = sigma_moved(ctx.integrable(T(f))).agrees_with(ctx.sigma(ctx.integrable(f)))
            except DomainError as e:
                # Gaussian moments need exact polynomials; a truncated v' is not one
                logger.warning(f"sample {sample}: sigma of {_label(f)} not exact: {e}")
                inexact += 1
                continue
            if not same:
                failures.append(f"sample {sample}: sigma of {_label(f)}")
    status, details = _result(failures, checked)
    if inexact:
        details["sigma not exact"] = inexact
    return status, details


@dataclass(frozen=True)
class Suite:
    name: str
    statement: str
    check: Callable[[SuiteContext], Tuple[str, Dict[str, object]]]


SUITES: Dict[str, Suite] = {s.name: s for s in (
    Suite("associativity", "(f * g) * h = f * (g * h) on seeded trial triples", check_associativity),
    Suite("separation", "a * f = a f for holomorphic a and f * b = f b for antiholomorphic b",
          check_separation),
    Suite("naturality", "L_f and R_f are natural for nu-regular f; L_f is not natural for f with a nu^-1 term",
          check_naturality),
    Suite("operator-identities",
          "L[dX/dz] = dX/dz + d/dz, L[dX/dtheta] = dX/dtheta + d/dtheta, "
          "R[dX/dzb] = dX/dzb + d/dzb, R[dX/dthetabar] = dX/dthetabar + d/dthetabar; "
          "gradients of X supercommute, C_1 inverts the super Hessian, {,} is a graded Poisson bracket "
          "and X + a + b gives the same product",
          check_operator_identities),
    Suite("matrix-inverse", "u_PQ * v^QR = delta and v^PQ * u_QR = delta over the base product",
          check_matrix_inverse),
    Suite("star-product-flag", "products of regular functions start at nu^0 with C_0(f, g) = fg",
          check_star_product_flag),
    Suite("supertrace", "sigma([f, g]) = 0; matrix supertrace and Berezin density give the same sigma",
          check_supertrace),
    Suite("berezin-trace", "sigma(f * g) = sigma(f I^-1 g) = sigma((I^-1 f) g)", check_berezin_trace),
    Suite("dual-potential", "d rho = rho d(X + X') where dX'/dx = -I^-1(dX/dx) in all coordinates",
          check_dual_potential),
    Suite("leading-terms",
          "rho_00 starts at nu^(d-m); t^[d][d] = (-1)^(d(d-1)/2) / det b; "
          "u_[d][d] and v^[d][d] have the predicted leading terms",
          check_leading_terms),
    Suite("trivialization", "products and sigma do not depend on the theta frame", check_trivialization),
)}


def run_suites(ctx: SuiteContext, names: List[str], with_timings: bool = False) -> List[SuiteResult]:
    """
    Run suites in registry order. Engine errors inside a suite mark it failed
    with the error message; they do not abort the remaining suites.
    """
    results = []
    for name in (n for n in SUITES if n in names):
        suite = SUITES[name]
        logger.info(f"Running suite {name}")
        start = time.perf_counter()
        try:
            status, details = suite.check(ctx)
        except SuperStarError as e:
            logger.error(f"Suite {name} raised {type(e).__name__}: {e}")
            status, details = FAIL, {"error": f"{type(e).__name__}: {e}"}
        elapsed = time.perf_counter() - start
        results.append(SuiteResult(name, suite.statement, status, details,
                                   round(elapsed, 3) if with_timings else None))
        logger.info(f"Suite {name}: {status}")
    return results
