"""
Scenario files: pydantic models, parsing with located diagnostics, and the
construction of X, u and the super star product they describe.
"""
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticValidationError
from pydantic import field_validator, model_validator

from config import EngineSettings
from exceptions import (
    NondegeneracyError,
    ResourceCapError,
    ScenarioParseError,
    ValidationError,
)
from quantization.coeff import CRat, JetSpace
from quantization.grassmann import SuperFunction, popcount
from quantization.starprod import Potential, build_star, trivial_point
from quantization.superstar import NilpotentPotentialY, SuperStarProduct
from utils.file_ops import load_text

logger = logging.getLogger(__name__)

SUITE_NAMES = (
    "associativity",
    "separation",
    "naturality",
    "operator-identities",
    "matrix-inverse",
    "star-product-flag",
    "supertrace",
    "berezin-trace",
    "dual-potential",
    "leading-terms",
    "trivialization",
)


class PotentialTerm(BaseModel):
    """
    One monomial c * nu^k * z^a * zb^b * theta^I * thetabar^J.

    Masks use bit alpha-1 for theta^alpha; empty exponent lists mean all zeros.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    nu_power: int = 0
    z_exps: List[int] = Field(default_factory=list)
    zbar_exps: List[int] = Field(default_factory=list)
    theta_mask: int = Field(default=0, ge=0)
    thetabar_mask: int = Field(default=0, ge=0)
    coeff_re: str = "1"
    coeff_im: str = "0"

    @field_validator("coeff_re", "coeff_im")
    @classmethod
    def _rational_text(cls, value: str) -> str:
        try:
            Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"expected a rational 'p/q', got {value!r}")
        return value.strip()

    @field_validator("z_exps", "zbar_exps")
    @classmethod
    def _non_negative(cls, value: List[int]) -> List[int]:
        if any(e < 0 for e in value):
            raise ValueError("exponents must be non-negative")
        return value

    @property
    def coefficient(self) -> CRat:
        return CRat.parse(self.coeff_re, self.coeff_im)

    def exponents(self, m: int) -> Tuple[List[int], List[int]]:
        return list(self.z_exps) or [0] * m, list(self.zbar_exps) or [0] * m

    def is_even(self) -> bool:
        return (popcount(self.theta_mask) + popcount(self.thetabar_mask)) % 2 == 0


class UTerm(PotentialTerm):
    """A monomial of an explicitly given admissible function u."""


class Scenario(BaseModel):
    """A scenario: dimensions, truncation, potential X (or u) and the suites to run."""

    model_config = ConfigDict(extra="forbid")

    name: str
    m: int = Field(ge=0, le=3)
    d: int = Field(ge=0)
    N: int = Field(default=4, ge=0)
    D: int = Field(default=6, ge=0)
    potential: List[PotentialTerm] = Field(default_factory=list)
    u_terms: Optional[List[UTerm]] = None
    suites: List[str] = Field(default_factory=lambda: list(SUITE_NAMES))
    seed: int = 0
    samples: int = Field(default=5, ge=1)
    trial_degree: int = Field(default=1, ge=0)
    gaussian_weight: int = Field(default=1, ge=1)
    expect_star_product: Optional[bool] = None

    @field_validator("suites")
    @classmethod
    def _known_suites(cls, value: List[str]) -> List[str]:
        unknown = [s for s in value if s not in SUITE_NAMES]
        if unknown:
            raise ValueError(f"unknown suites {unknown}; available: {', '.join(SUITE_NAMES)}")
        return value

    @model_validator(mode="after")
    def _check_terms(self) -> "Scenario":
        groups = [("potential", self.potential)]
        if self.u_terms is not None:
            groups.append(("u_terms", self.u_terms))
        for group, terms in groups:
            for i, term in enumerate(terms):
                where = f"{group}[{i}]"
                for field_name in ("z_exps", "zbar_exps"):
                    exps = getattr(term, field_name)
                    if exps and len(exps) != self.m:
                        raise ValueError(f"{where}.{field_name} has length {len(exps)}, expected m={self.m}")
                z, zb = term.exponents(self.m)
                if sum(z) + sum(zb) > self.D:
                    raise ValueError(f"{where} has degree {sum(z) + sum(zb)} above the jet degree D={self.D}")
                for field_name in ("theta_mask", "thetabar_mask"):
                    if getattr(term, field_name) >= 1 << self.d:
                        raise ValueError(f"{where}.{field_name} uses an odd index above d={self.d}")
                if not term.is_even():
                    raise ValueError(f"{where} is odd; X and u must be even")
                if group == "potential" and term.nu_power < -1:
                    raise ValueError(f"{where} has nu^{term.nu_power}; the potential starts at nu^-1")
        return self

    @property
    def space(self) -> JetSpace:
        return JetSpace(self.m, self.D)

    @property
    def explicit_u(self) -> bool:
        return self.u_terms is not None


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    """
    Parse and validate scenario JSON.

    Args:
        text: JSON text
        source: Name used in diagnostics

    Returns:
        Validated Scenario

    Raises:
        ScenarioParseError: On malformed JSON (with line:col) or invalid fields (with field path)
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"{source}:{e.lineno}:{e.colno}: {e.msg}")
    try:
        return Scenario.model_validate(data)
    except PydanticValidationError as e:
        problems = []
        for err in e.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            problems.append(f"{loc}: {err['msg']}")
        raise ScenarioParseError(f"{source}: " + "; ".join(problems))


def load_scenario(path: Path) -> Scenario:
    """Read and validate a scenario file."""
    scenario = parse_scenario(load_text(path), str(path))
    logger.info(f"Loaded scenario '{scenario.name}' (m={scenario.m}, d={scenario.d}, N={scenario.N}, D={scenario.D})")
    return scenario


def check_resources(scenario: Scenario, settings: EngineSettings) -> int:
    """
    Refuse scenarios beyond the configured guardrails.

    Returns:
        Estimated cost of the scenario

    Raises:
        ResourceCapError: If d or the cost exceeds the limits
    """
    limits = settings.limits
    if scenario.d > limits.max_odd_dimension:
        raise ResourceCapError(
            f"d={scenario.d} exceeds the odd dimension limit {limits.max_odd_dimension}")
    cost = limits.cost(scenario.m, scenario.d, scenario.N, scenario.D)
    if cost > limits.max_budget:
        raise ResourceCapError(
            f"Estimated cost {cost} exceeds the budget {limits.max_budget}; raise it with --max-budget")
    return cost


def terms_to_function(terms: List[PotentialTerm], space: JetSpace, d: int) -> SuperFunction:
    """Sum of scenario monomials as a super function."""
    total = SuperFunction.zero_function(space, d)
    for term in terms:
        z, zb = term.exponents(space.m)
        total = total + SuperFunction.monomial(
            space, d, z, zb, term.theta_mask, term.thetabar_mask, term.coefficient, term.nu_power)
    return total


def build_X(scenario: Scenario) -> SuperFunction:
    return terms_to_function(scenario.potential, scenario.space, scenario.d)


def split_potential(X: SuperFunction) -> Tuple[Potential, NilpotentPotentialY]:
    """
    Split X into its Grassmann-free part Phi and nilpotent part Y.

    Raises:
        ValidationError: If either part is invalid or Y is degenerate
    """
    potential = Potential(X.body())
    Y = NilpotentPotentialY(X.nilpotent_part())
    if not Y.is_nondegenerate():
        logger.error("b-matrix singular at base point")
        raise ValidationError("b-matrix singular at base point; u is not admissible")
    return potential, Y


def build_product(scenario: Scenario, settings: EngineSettings) -> SuperStarProduct:
    """
    The super star product of a scenario: from u = e^Y, or from the explicit
    u_terms over the base product of the Grassmann-free potential.
    """
    X = build_X(scenario)
    margin = settings.nu_margin(scenario.d)
    try:
        if not scenario.explicit_u:
            potential, Y = split_potential(X)
            return SuperStarProduct.from_potential(potential, Y, scenario.N, margin)
        potential = Potential(X.body())
        if scenario.m == 0:
            base = trivial_point(scenario.N + margin, scenario.D, potential)
        else:
            base = build_star(potential, scenario.N + margin)
        u = terms_to_function(scenario.u_terms, scenario.space, scenario.d)
        return SuperStarProduct(base, u, scenario.N)
    except NondegeneracyError as e:
        logger.error(f"Potential is degenerate: {e}")
        raise ValidationError(f"Potential is degenerate: {e}")
