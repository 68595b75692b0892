#!/usr/bin/env python3
"""
Tests for the super Berezin transform, the Wick-type dual product and the
dual potential X'.
"""
import sys
import logging
from fractions import Fraction
from pathlib import Path

# Setup paths
sys.path.insert(0, str(Path(__file__).parent))

from quantization.berezin import (
    SuperBerezin,
    compute_X_prime,
    gradient_residuals,
    reconstructed_product,
    super_gradient_is_closed,
    super_integrate_gradient,
    wick_reconstruction,
)
from quantization.coeff import INF, JetSpace, NuSeries
from quantization.grassmann import SuperCoeff, SuperFunction
from quantization.starprod import Potential, dual_potential
from quantization.superstar import NilpotentPotentialY, SuperStarProduct
from quantization.trace import supertrace_density

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

POINT = JetSpace(0, 0)


def odd(I, J, c=1, power=0) -> SuperFunction:
    return SuperFunction.grassmann(POINT, 1, I, J, c, power)


def point_setup(order: int = 3):
    X = odd(1, 1, power=-1)
    potential = Potential(NuSeries({}, INF, POINT.zero()))
    S = SuperStarProduct.from_potential(potential, NilpotentPotentialY(X), order)
    return S, X, SuperBerezin(S)


def test_transform_on_generators():
    """I(theta theta-bar) = theta theta-bar - nu; odd generators are fixed."""
    logger.info("\n=== Testing Transform on Generators ===")

    S, _, B = point_setup()
    th, tb, thtb = odd(1, 0), odd(0, 1), odd(1, 1)
    assert B.apply(th).agrees_with(th), "I(theta) = theta"
    assert B.apply(tb).agrees_with(tb), "I(theta-bar) = theta-bar"
    assert B.apply(thtb).agrees_with(thtb - odd(0, 0, power=1)), "I(th tb) = th tb - nu"
    assert B.apply(thtb, start=1).agrees_with(-odd(0, 0, power=1)), "(I - 1)(th tb) = -nu"

    for f in S.trials(0):
        assert B.inverse(B.apply(f)).agrees_with(f), "I^-1 should undo I"
        assert B.apply(B.inverse(f)).agrees_with(f), "I should undo I^-1"
    assert len(B.table) == 4, "Basis images are cached once per monomial"

    logger.info("✅ Transform on generator tests passed")
    return True


def test_dual_products():
    """The dual product is of Wick type; its opposite swaps the ordering."""
    logger.info("\n=== Testing Dual Products ===")

    S, _, B = point_setup()
    th, tb, thtb, nu = odd(1, 0), odd(0, 1), odd(1, 1), odd(0, 0, power=1)
    assert B.dual_wick_product(th, tb).agrees_with(thtb + nu), "th *' tb = th tb + nu"
    assert B.dual_wick_product(tb, th).agrees_with(-thtb), "tb *' th = tb th"

    trials = S.trials(0)
    for f in trials:
        for g in trials:
            for h in trials[:2]:
                lhs = B.dual_wick_product(B.dual_wick_product(f, g), h)
                rhs = B.dual_wick_product(f, B.dual_wick_product(g, h))
                assert lhs.agrees_with(rhs), "Dual product should be associative"
            assert B.opposite_dual(f, g).agrees_with(
                B.dual_wick_product(g, f) * (-1 if f.parity() and g.parity() else 1)), \
                "Opposite dual is the graded opposite of the dual product"

    logger.info("✅ Dual product tests passed")
    return True


def test_super_gradients():
    """Closedness with graded signs and integration by the Euler homotopy."""
    logger.info("\n=== Testing Super Gradients ===")

    space = JetSpace(1, 4)
    d = 1
    z = space.z(0)
    # F = z theta theta-bar + z^2
    F = SuperCoeff.basis(d, 1, 1, z) + SuperCoeff.scalar(d, z * z)
    grads = [F.derivative(0), F.derivative(1), F.left_theta_deriv(1), F.left_thetabar_deriv(1)]
    assert super_gradient_is_closed(grads, 1, d), "A super gradient should be closed"
    recovered = super_integrate_gradient(grads, space, d)
    assert (recovered - F).vanishes(), "Euler homotopy should recover F"

    broken = list(grads)
    broken[2] = SuperCoeff.basis(d, 0, 1, z * z)
    assert not super_gradient_is_closed(broken, 1, d), "Perturbed gradient should not be closed"

    logger.info("✅ Super gradient tests passed")
    return True


def test_dual_potential():
    """X' cancels the nu^-1 part of X and the density satisfies d rho = rho d(X + X')."""
    logger.info("\n=== Testing Dual Potential ===")

    S, X, B = point_setup()
    density = supertrace_density(S, dual_potential(S.base))
    xp = compute_X_prime(B, X, density.rho)
    assert (X + xp.Xp).truncate(-1).vanishes(), "X + X' has no nu^-1 part"
    residuals = gradient_residuals(X, xp, density.rho)
    assert all(r.vanishes() for r in residuals), "Density should satisfy the gradient identity"
    assert xp.log_atom is not None, "A density fixes the logarithmic constant"

    bare = compute_X_prime(B, X)
    assert bare.log_atom is None, "Without a density no logarithm is recorded"
    assert (bare.Xp - xp.Xp).truncate(-1).vanishes(), "Constants only move the regular part"

    logger.info("✅ Dual potential tests passed")
    return True


def test_regular_part_in_potential():
    """A nu^0 theta theta-bar term makes rho a genuine nu-series; X' still follows from its logarithm."""
    logger.info("\n=== Testing Regular Part in Potential ===")

    potential = Potential(NuSeries({}, INF, POINT.zero()))
    X = odd(1, 1, power=-1) + odd(1, 1, Fraction(1, 3))
    S = SuperStarProduct.from_potential(potential, NilpotentPotentialY(X), 3)
    density = supertrace_density(S, dual_potential(S.base))
    xp = compute_X_prime(SuperBerezin(S), X, density.rho)
    assert xp.log_atom is not None, "The density fixes the logarithmic constant"
    residuals = gradient_residuals(X, xp, density.rho)
    assert all(r.vanishes() for r in residuals), "d rho = rho d(X + X') with a regular term in X"

    Y2 = (SuperFunction.grassmann(POINT, 2, 1, 1, power=-1) + SuperFunction.grassmann(POINT, 2, 2, 2, power=-1)
          + SuperFunction.grassmann(POINT, 2, 1, 2, Fraction(1, 2), power=-1)
          + SuperFunction.grassmann(POINT, 2, 1, 1, Fraction(1, 3)))
    S2 = SuperStarProduct.from_potential(potential, NilpotentPotentialY(Y2), 3)
    density2 = supertrace_density(S2, dual_potential(S2.base))
    xp2 = compute_X_prime(SuperBerezin(S2), Y2, density2.rho)
    assert all(r.vanishes() for r in gradient_residuals(Y2, xp2, density2.rho)), \
        "Gradient identity should hold for two odd coordinates"

    logger.info("✅ Regular part in potential tests passed")
    return True


def test_superplane_dual_potential():
    """m = 1, d = 1: X' over the flat product and over a cubic perturbation with a nu^0 odd term."""
    logger.info("\n=== Testing Superplane Dual Potential ===")

    space = JetSpace(1, 8)
    z, zb = space.z(0), space.zbar(0)
    cubic = (z * z * zb + z * zb * zb).scale(Fraction(1, 6))
    for name, phi, regular in (("flat", z * zb, 0), ("cubic", z * zb + cubic, Fraction(1, 3))):
        potential = Potential(NuSeries({-1: phi}, INF, space.zero()))
        Y = SuperFunction.grassmann(space, 1, 1, 1, power=-1)
        if regular:
            Y = Y + SuperFunction.grassmann(space, 1, 1, 1, regular)
        S = SuperStarProduct.from_potential(potential, NilpotentPotentialY(Y), 2)
        X = SuperFunction.lift(potential.phi, 1) + Y
        density = supertrace_density(S, dual_potential(S.base))
        xp = compute_X_prime(SuperBerezin(S), X, density.rho)
        assert (X + xp.Xp).truncate(-1).vanishes(), f"{name}: X + X' has no nu^-1 part"
        residuals = gradient_residuals(X, xp, density.rho)
        assert all(r.vanishes() for r in residuals), f"{name}: d rho = rho d(X + X')"

    logger.info("✅ Superplane dual potential tests passed")
    return True


def test_wick_reconstruction():
    """The dual product is the swap conjugate of the anti-Wick product of the swapped X'."""
    logger.info("\n=== Testing Wick Reconstruction ===")

    S, X, B = point_setup(order=2)
    density = supertrace_density(S, dual_potential(S.base))
    xp = compute_X_prime(B, X, density.rho)
    R = wick_reconstruction(S, xp)
    trials = S.trials(0)
    for f in trials:
        for g in trials:
            assert reconstructed_product(R, f, g).agrees_with(B.dual_wick_product(f, g)), \
                "Reconstructed and dual products should agree"

    logger.info("✅ Wick reconstruction tests passed")
    return True


def run_all_tests():
    """Run all tests."""
    logger.info("=" * 80)
    logger.info("SUPER BEREZIN TRANSFORM TEST SUITE")
    logger.info("=" * 80)

    tests = [
        ("Transform on Generators", test_transform_on_generators),
        ("Dual Products", test_dual_products),
        ("Super Gradients", test_super_gradients),
        ("Dual Potential", test_dual_potential),
        ("Regular Part in Potential", test_regular_part_in_potential),
        ("Superplane Dual Potential", test_superplane_dual_potential),
        ("Wick Reconstruction", test_wick_reconstruction),
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
