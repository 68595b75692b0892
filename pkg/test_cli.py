#!/usr/bin/env python3
"""
Tests for scenario parsing, resource guardrails, settings and the two
commands of the command-line interface.
"""
import sys
import os
import json
import logging
import tempfile
from pathlib import Path

# Setup paths
sys.path.insert(0, str(Path(__file__).parent))

from config import EngineSettings
from exceptions import ConfigurationError, ResourceCapError, ScenarioParseError
from cli.commands import EXIT_ENGINE_ERROR, EXIT_OK, build_parser, main
from cli.suites import FAIL
from cli.scenario import Scenario, build_product, check_resources, load_scenario, parse_scenario
from utils.config_loader import load_settings

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

SCENARIOS = Path(__file__).parent / "scenarios"


def expect_parse_error(text: str, *fragments: str):
    try:
        parse_scenario(text, "bad.json")
        assert False, f"Scenario should be rejected: {text}"
    except ScenarioParseError as e:
        for fragment in fragments:
            assert fragment in str(e), f"Expected '{fragment}' in: {e}"


def test_bundled_scenarios():
    """Every bundled scenario parses and stays within the default budget."""
    logger.info("\n=== Testing Bundled Scenarios ===")

    settings = EngineSettings()
    paths = sorted(SCENARIOS.glob("*.json"))
    assert len(paths) >= 4, "Bundled scenarios should be present"
    for path in paths:
        scenario = load_scenario(path)
        assert scenario.name == path.stem, f"Scenario name should match file name: {path}"
        assert check_resources(scenario, settings) > 0, "Cost should be positive"

    point = load_scenario(SCENARIOS / "point-d1-n1.json")
    assert check_resources(point, settings) == 4 * 3 * 1, "cost = 4^d * N * D^(2m)"
    assert not point.explicit_u, "X is given as a potential"
    S = build_product(point, settings)
    assert S.d == 1 and S.order == 3, "Product dimensions come from the scenario"

    literal = load_scenario(SCENARIOS / "point-d1-n0.json")
    assert literal.explicit_u, "u_terms switch to an explicit u"

    logger.info("✅ Bundled scenario tests passed")
    return True


def test_parse_diagnostics():
    """Malformed JSON reports line:col; invalid fields report their path."""
    logger.info("\n=== Testing Parse Diagnostics ===")

    expect_parse_error('{"name": "x",\n  "m": 0,\n}', "bad.json:3:")
    expect_parse_error('{"name": "x", "m": 0, "d": 1, "potential": [{"coeff_re": "abc"}]}',
                       "potential.0.coeff_re")
    expect_parse_error('{"name": "x", "m": 0, "d": 1, "suites": ["nonsense"]}', "suites", "nonsense")
    expect_parse_error('{"name": "x", "m": 0, "d": 1, "potential": [{"theta_mask": 1}]}',
                       "<root>", "potential[0] is odd")
    expect_parse_error('{"name": "x", "m": 1, "d": 0, "potential": [{"z_exps": [1, 0]}]}',
                       "potential[0].z_exps has length 2")
    expect_parse_error('{"name": "x", "m": 0, "d": 1, "potential": '
                       '[{"nu_power": -2, "theta_mask": 1, "thetabar_mask": 1}]}', "starts at nu^-1")
    expect_parse_error('{"name": "x", "m": 0, "d": 1, "extra": true}', "extra")

    scenario = parse_scenario('{"name": "ok", "m": 0, "d": 1}')
    assert scenario.N == 4 and scenario.D == 6, "Defaults N = 4, D = 6"
    assert len(scenario.suites) == 11, "All suites run by default"

    logger.info("✅ Parse diagnostic tests passed")
    return True


def test_resource_caps():
    """Scenarios beyond the odd dimension limit or the budget are refused."""
    logger.info("\n=== Testing Resource Caps ===")

    settings = EngineSettings()
    for scenario in (Scenario(name="wide", m=0, d=5),
                     Scenario(name="big", m=3, d=4, N=12, D=24)):
        try:
            check_resources(scenario, settings)
            assert False, f"{scenario.name} should exceed the limits"
        except ResourceCapError:
            pass

    logger.info("✅ Resource cap tests passed")
    return True


def test_settings_from_environment():
    """Environment variables override defaults; malformed values are configuration errors."""
    logger.info("\n=== Testing Settings from Environment ===")

    missing_env = Path(tempfile.gettempdir()) / "superstar-no-such.env"
    saved = {k: os.environ.get(k) for k in ("SUPERSTAR_MAX_BUDGET", "SUPERSTAR_LOG_LEVEL")}
    try:
        os.environ["SUPERSTAR_MAX_BUDGET"] = "1234"
        os.environ["SUPERSTAR_LOG_LEVEL"] = "debug"
        settings = load_settings(missing_env)
        assert settings.limits.max_budget == 1234, "Budget should come from the environment"
        assert settings.log_level == "DEBUG", "Log level is normalized to upper case"

        os.environ["SUPERSTAR_MAX_BUDGET"] = "lots"
        try:
            load_settings(missing_env)
            assert False, "Non-integer budget should be rejected"
        except ConfigurationError:
            pass
    finally:
        for key, value in saved.items():
            if value is None:
                os.environ.pop(key, None)
            else:
                os.environ[key] = value

    assert EngineSettings().nu_margin(0) == 0, "No margin without odd coordinates"
    assert EngineSettings().nu_margin(2) == 5, "margin = 2d + 1"

    logger.info("✅ Settings tests passed")
    return True


def test_parser():
    """Subcommands and their required options."""
    logger.info("\n=== Testing Argument Parser ===")

    parser = build_parser()
    args = parser.parse_args(["run", "s.json", "--suite", "associativity", "--suite", "supertrace", "--seed", "9"])
    assert args.command == "run" and args.suites == ["associativity", "supertrace"], "Repeatable --suite"
    assert args.seed == 9 and not args.with_timings, "Seed override without timings"

    args = parser.parse_args(["dump-products", "s.json", "--basis-degree", "1"])
    assert args.basis_degree == 1, "Basis degree is parsed"

    for argv in (["dump-products", "s.json"], ["run", "s.json", "--suite", "nonsense"], []):
        try:
            parser.parse_args(argv)
            assert False, f"{argv} should be rejected"
        except SystemExit:
            pass

    logger.info("✅ Argument parser tests passed")
    return True


def test_run_command():
    """run writes a deterministic report whose summary passes for a nondegenerate point."""
    logger.info("\n=== Testing Run Command ===")

    scenario = str(SCENARIOS / "point-d1-n1.json")
    with tempfile.TemporaryDirectory() as tmp:
        first, second = Path(tmp) / "first.json", Path(tmp) / "second.json"
        assert main(["run", scenario, "--out", str(first)], EngineSettings()) == EXIT_OK, "Run should pass"
        assert main(["run", scenario, "--out", str(second)], EngineSettings()) == EXIT_OK, "Rerun should pass"
        assert first.read_bytes() == second.read_bytes(), "Reports should be byte-identical"

        report = json.loads(first.read_text(encoding="utf-8"))
        assert report["scenario"]["name"] == "point-d1-n1", "Report names the scenario"
        assert report["summary"]["all_passed"], f"Suites failed: {report['summary']}"
        assert report["summary"]["failed"] == 0, "No suite should fail"
        assert "densities" in report, "Supertrace suites record the densities"
        assert any(p["f"] == "tb1" and p["g"] == "th1" for p in report["products"]), "Generator products listed"

        seeded = Path(tmp) / "seeded.json"
        argv = ["run", scenario, "--suite", "star-product-flag", "--seed", "5", "--out", str(seeded)]
        assert main(argv, EngineSettings()) == EXIT_OK, "Single suite run should pass"
        report = json.loads(seeded.read_text(encoding="utf-8"))
        assert report["scenario"]["seed"] == 5, "Seed override is reported"
        assert [s["name"] for s in report["suites"]] == ["star-product-flag"], "Only the requested suite runs"
        assert "densities" not in report, "No density without a trace suite"

        literal = str(SCENARIOS / "point-d1-n0.json")
        flagged = Path(tmp) / "literal.json"
        assert main(["run", literal, "--suite", "star-product-flag", "--out", str(flagged)],
                    EngineSettings()) == EXIT_OK, "Expected non-star product matches its flag"
        suite = json.loads(flagged.read_text(encoding="utf-8"))["suites"][0]
        assert suite["details"]["is_star_product"] is False, "Literal u is not a star product"

        missing = str(Path(tmp) / "missing.json")
        assert main(["run", missing], EngineSettings()) == EXIT_ENGINE_ERROR, "Missing file is an engine error"

    logger.info("✅ Run command tests passed")
    return True


def test_every_scenario_end_to_end():
    """Each bundled scenario runs its full suite list and exits cleanly."""
    logger.info("\n=== Testing Every Scenario End to End ===")

    with tempfile.TemporaryDirectory() as tmp:
        for path in sorted(SCENARIOS.glob("*.json")):
            out = Path(tmp) / f"{path.stem}.json"
            status = main(["run", str(path), "--out", str(out)], EngineSettings())
            report = json.loads(out.read_text(encoding="utf-8"))
            failed = [s["name"] for s in report["suites"] if s["status"] == FAIL]
            assert status == EXIT_OK, f"{path.stem} exited with {status}; failing suites: {failed}"
            assert report["summary"]["failed"] == 0, f"{path.stem}: no suite should fail"
            logger.info(f"{path.stem}: {report['summary']['passed']} suites passed")

    logger.info("✅ End to end scenario tests passed")
    return True


def test_dump_products():
    """dump-products writes one line per nonzero coefficient C_r(f, g)."""
    logger.info("\n=== Testing Product Dump ===")

    scenario = str(SCENARIOS / "point-d1-n1.json")
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "products.txt"
        assert main(["dump-products", scenario, "--basis-degree", "0", "--out", str(out)],
                    EngineSettings()) == EXIT_OK, "Dump should succeed"
        text = out.read_text(encoding="utf-8")
        assert text.startswith("# scenario point-d1-n1"), "Header names the scenario"
        assert "C_0(" in text and "C_1(" in text, "Both classical and first-order terms appear"
        assert text.count("known through nu^") == 16, "Four Grassmann monomials give sixteen pairs"

        status = main(["dump-products", scenario, "--basis-degree", "-1", "--out", str(out)], EngineSettings())
        assert status == EXIT_ENGINE_ERROR, "Negative basis degree is rejected"

    logger.info("✅ Product dump tests passed")
    return True


def run_all_tests():
    """Run all tests."""
    logger.info("=" * 80)
    logger.info("COMMAND LINE TEST SUITE")
    logger.info("=" * 80)

    tests = [
        ("Bundled Scenarios", test_bundled_scenarios),
        ("Parse Diagnostics", test_parse_diagnostics),
        ("Resource Caps", test_resource_caps),
        ("Settings from Environment", test_settings_from_environment),
        ("Argument Parser", test_parser),
        ("Run Command", test_run_command),
        ("Every Scenario End to End", test_every_scenario_end_to_end),
        ("Product Dump", test_dump_products),
    ]

    results = []
    for name, test_func in tests:
        try:
            success = test_func() is not False
            results.append((name, success))
        except Exception as e:
            logger.error(f"Test '{name}' failed with error: {e}", exc_info=True)
            results.append((name, False))

    logger.info("\n" + "=" * 80)
    logger.info("TEST SUMMARY")
    logger.info("=" * 80)

    passed = sum(1 for _, success in results if success)
    total = len(results)

    for name, success in results:
        status = "✅ PASSED" if success else "❌ FAILED"
        logger.info(f"{status}: {name}")

    logger.info("=" * 80)
    logger.info(f"Result: {passed}/{total} tests passed")

    return passed == total


if __name__ == "__main__":
    success = run_all_tests()
    sys.exit(0 if success else 1)
