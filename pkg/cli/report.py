"""
Report assembly: deterministic JSON with exact rationals, product dumps as
text, and the colored console summary.
"""
import logging
import sys
from typing import Any, Dict, List, Optional, TextIO

from colorama import Fore, Style, init

from cli.scenario import Scenario
from cli.suites import FAIL, PASS, SKIPPED, SuiteContext, SuiteResult
from quantization.coeff import CRat
from quantization.diffop import spanning_monomials
from quantization.grassmann import SuperFunction

logger = logging.getLogger(__name__)

STATUS_STYLE = {
    PASS: (Fore.GREEN, "✅ PASSED"),
    FAIL: (Fore.RED, "❌ FAILED"),
    SKIPPED: (Fore.YELLOW, "⏭  SKIPPED"),
}


def crat_json(c: CRat) -> Dict[str, str]:
    """Complex rational as {"re": "p/q", "im": "p/q"}."""
    return {"re": str(c.re), "im": str(c.im)}


def _generators(ctx: SuiteContext) -> List[tuple]:
    space, d = ctx.S.space, ctx.S.d
    m = space.m
    zeros = [0] * m
    out = []
    for k in range(m):
        unit = [1 if i == k else 0 for i in range(m)]
        out.append((f"z{k + 1}", SuperFunction.monomial(space, d, unit, zeros)))
        out.append((f"zb{k + 1}", SuperFunction.monomial(space, d, zeros, unit)))
    for alpha in range(d):
        out.append((f"th{alpha + 1}", SuperFunction.grassmann(space, d, 1 << alpha, 0)))
        out.append((f"tb{alpha + 1}", SuperFunction.grassmann(space, d, 0, 1 << alpha)))
    return out


def product_table(ctx: SuiteContext) -> List[Dict[str, str]]:
    """Products of coordinate functions, each printed lowest nu power first."""
    gens = _generators(ctx)
    return [{"f": nf, "g": ng, "f * g": str(ctx.S.mul(f, g))} for nf, f in gens for ng, g in gens]


def build_report(scenario: Scenario, ctx: SuiteContext, results: List[SuiteResult],
                 cost: int, timings: Optional[Dict[str, float]] = None) -> Dict[str, Any]:
    """
    Assemble the report dictionary in a fixed key order.

    Densities appear only when a suite needed them, so the report depends on
    the scenario and requested suites alone.
    """
    report: Dict[str, Any] = {
        "scenario": {
            "name": scenario.name,
            "m": scenario.m,
            "d": scenario.d,
            "N": scenario.N,
            "D": scenario.D,
            "seed": scenario.seed,
            "estimated_cost": cost,
        },
        "suites": [],
    }
    for r in results:
        entry: Dict[str, Any] = {"name": r.name, "statement": r.statement, "status": r.status, "details": r.details}
        if r.seconds is not None:
            entry["seconds"] = r.seconds
        report["suites"].append(entry)

    report["products"] = product_table(ctx)
    if ctx.has("density"):
        report["densities"] = {
            "tau": str(ctx.density.tau),
            "rho": str(ctx.density.rho),
            "base_density": str(ctx.density.base_density),
            "kappa": str(ctx.trace.kappa),
            "log_metric_constant": crat_json(ctx.trace.psi_log.base),
        }
    counts = {status: sum(1 for r in results if r.status == status) for status in (PASS, FAIL, SKIPPED)}
    report["summary"] = {
        "passed": counts[PASS],
        "failed": counts[FAIL],
        "skipped": counts[SKIPPED],
        "all_passed": counts[FAIL] == 0,
    }
    if timings is not None:
        report["timings"] = timings
    return report


def product_dump(scenario: Scenario, ctx: SuiteContext, basis_degree: int) -> str:
    """C_r(f, g) for all monomials f, g of degree at most basis_degree, one line per coefficient."""
    S = ctx.S
    lines = [
        f"# scenario {scenario.name}: m={scenario.m}, d={scenario.d}, N={scenario.N}, D={scenario.D}",
        f"# monomials of degree <= {basis_degree}; coefficients of nu^r in f * g",
    ]
    basis = spanning_monomials(S.space, S.d, basis_degree)
    for f in basis:
        for g in basis:
            product = S.mul(f, g)
            lf, lg = str(f.coeff(0)), str(g.coeff(0))
            for r in sorted(product.terms):
                lines.append(f"C_{r}({lf}, {lg}) = {product.terms[r]}")
            lines.append(f"# ({lf}) * ({lg}) known through nu^{product.high}")
    logger.info(f"Dumped products of {len(basis)} monomials")
    return "\n".join(lines) + "\n"


def print_summary(results: List[SuiteResult], stream: TextIO = sys.stdout):
    """Print one colored line per suite and a result count."""
    init(autoreset=True)
    print("\n" + "=" * 60, file=stream)
    print("SUITE SUMMARY", file=stream)
    print("=" * 60, file=stream)
    for r in results:
        color, label = STATUS_STYLE[r.status]
        print(f"{color}{label}{Style.RESET_ALL}: {r.name}", file=stream)
        if r.status == FAIL:
            for failure in r.details.get("failures", [])[:3]:
                print(f"    {failure}", file=stream)
            if "error" in r.details:
                print(f"    {r.details['error']}", file=stream)
    passed = sum(1 for r in results if r.status != FAIL)
    print(f"\nResult: {passed}/{len(results)} suites without failures", file=stream)
