#!/usr/bin/env python3
"""
Tests for graded differential operators and the small linear algebra layer.
"""
import sys
import logging
from fractions import Fraction
from pathlib import Path

# Setup paths
sys.path.insert(0, str(Path(__file__).parent))

from exceptions import DimensionError, NotInvertibleError
from quantization.coeff import CRat, JetSpace
from quantization.diffop import (
    EVEN,
    THETA,
    THETABAR,
    FormalOp,
    SuperDiffOp,
    iterated_bracket,
    operators_agree_on,
    spanning_monomials,
    theta_projector,
    thetabar_projector,
)
from quantization.grassmann import SuperCoeff, SuperFunction
from quantization.linalg import determinant, invert_matrix, matmul, sympy_determinant

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

SPACE = JetSpace(1, 4)
D = 1


def mult(I, J, z_exps=(0,), zbar_exps=(0,), c=1) -> SuperDiffOp:
    jet = SPACE.monomial(list(z_exps), list(zbar_exps), c)
    return SuperDiffOp.multiplication(SPACE, SuperCoeff.basis(D, I, J, jet))


def test_elementary_commutators():
    """Test canonical graded commutators of coordinates and derivatives."""
    logger.info("\n=== Testing Elementary Commutators ===")

    identity = SuperDiffOp.identity(SPACE, D)
    d_theta = SuperDiffOp.partial(SPACE, D, THETA, 1)
    d_z = SuperDiffOp.partial(SPACE, D, EVEN, 0)

    assert d_theta.graded_commutator(mult(1, 0)) == identity, "[d_th, th] = 1 as an anticommutator"
    assert d_z.graded_commutator(mult(0, 0, (1,))) == identity, "[d_z, z] = 1"
    assert d_theta.compose(d_theta).is_exact_zero(), "Odd derivatives square to zero"
    assert d_theta.parity() == 1 and d_z.parity() == 0, "Derivative parities follow their variables"
    assert (d_z * d_z).order() == 2, "Second derivative has order 2"

    try:
        SuperDiffOp.partial(SPACE, D, THETABAR, 2)
        assert False, "Odd index beyond d should be rejected"
    except DimensionError:
        pass

    logger.info("✅ Elementary commutator tests passed")
    return True


def test_composition_and_action():
    """Composition in normal form agrees with successive application."""
    logger.info("\n=== Testing Composition and Action ===")

    a = mult(0, 1, (1,)) * SuperDiffOp.partial(SPACE, D, THETA, 1) + SuperDiffOp.partial(SPACE, D, EVEN, 1)
    b = mult(1, 0) * SuperDiffOp.partial(SPACE, D, EVEN, 0) + mult(1, 1, c=3)
    composed = FormalOp.from_diffop(a.compose(b))
    successive = FormalOp.from_diffop(a) * FormalOp.from_diffop(b)

    trials = spanning_monomials(SPACE, D, 2)
    for f in trials:
        lhs = composed.apply(f)
        rhs = FormalOp.from_diffop(a).apply(FormalOp.from_diffop(b).apply(f))
        assert lhs.agrees_with(rhs), "(a o b) f should equal a(b(f))"
    assert operators_agree_on(composed, successive, trials), "Series composition should match"
    assert len(trials) == 6 * 4, "Degree-2 jets in one variable pair times four Grassmann monomials"

    logger.info("✅ Composition and action tests passed")
    return True


def test_projectors():
    """Test restriction to theta = 0 and theta-bar = 0."""
    logger.info("\n=== Testing Projectors ===")

    f = (SuperFunction.grassmann(SPACE, D, 0, 0, 2)
         + SuperFunction.grassmann(SPACE, D, 1, 0, 5)
         + SuperFunction.grassmann(SPACE, D, 0, 1, 7)
         + SuperFunction.grassmann(SPACE, D, 1, 1, 11))
    p_theta = FormalOp.from_diffop(theta_projector(SPACE, D))
    p_bar = FormalOp.from_diffop(thetabar_projector(SPACE, D))

    expected_theta = SuperFunction.grassmann(SPACE, D, 0, 0, 2) + SuperFunction.grassmann(SPACE, D, 0, 1, 7)
    expected_bar = SuperFunction.grassmann(SPACE, D, 0, 0, 2) + SuperFunction.grassmann(SPACE, D, 1, 0, 5)
    assert p_theta.apply(f).agrees_with(expected_theta), "Theta projector keeps theta-free terms"
    assert p_bar.apply(f).agrees_with(expected_bar), "Theta-bar projector keeps theta-bar-free terms"
    assert p_theta.apply(p_theta.apply(f)).agrees_with(p_theta.apply(f)), "Projector is idempotent"

    logger.info("✅ Projector tests passed")
    return True


def test_iterated_brackets_and_naturality():
    """Brackets with functions lower the order; naturality bounds order by nu power."""
    logger.info("\n=== Testing Iterated Brackets and Naturality ===")

    d_z = SuperDiffOp.partial(SPACE, D, EVEN, 0)
    second = d_z * d_z
    z = SuperCoeff.basis(D, 0, 0, SPACE.z(0))
    once = iterated_bracket(second, [z])
    twice = iterated_bracket(second, [z, z])
    thrice = iterated_bracket(second, [z, z, z])
    assert once.order() == 1, "One bracket lowers the order to 1"
    assert twice == SuperDiffOp.identity(SPACE, D) * CRat(2), "[z, [z, d_z^2]] = 2"
    assert thrice.vanishes(), "Third bracket kills a second-order operator"

    natural = FormalOp({0: SuperDiffOp.identity(SPACE, D), 1: d_z, 2: second}, zero=d_z.zero_like())
    assert natural.is_natural(), "Order k at nu^k is natural"
    assert natural.order_profile() == {0: 0, 1: 1, 2: 2}, "Order profile lists each power"
    too_wild = FormalOp({1: second}, zero=d_z.zero_like())
    assert not too_wild.is_natural(), "Order 2 at nu^1 is not natural"
    negative = FormalOp({-1: SuperDiffOp.identity(SPACE, D)}, zero=d_z.zero_like())
    assert not negative.is_natural(), "Negative nu powers are not natural"

    logger.info("✅ Iterated bracket and naturality tests passed")
    return True


def test_linear_algebra():
    """Test Gauss-Jordan inversion over jets and determinants against sympy."""
    logger.info("\n=== Testing Linear Algebra ===")

    z, zb, one, zero = SPACE.z(0), SPACE.zbar(0), SPACE.one(), SPACE.zero()
    m = [[z, one + zb], [one, z * zb]]
    inv = invert_matrix(m, one, zero)
    product = matmul(m, inv, zero)
    for i in range(2):
        for j in range(2):
            assert product[i][j].agrees_with(one if i == j else zero), "m * m^-1 should be the identity"

    rows = [[CRat(1), CRat(2, 1), CRat(0)],
            [CRat(Fraction(1, 2)), CRat(3), CRat(-1)],
            [CRat(0, 1), CRat(1), CRat(4)]]
    assert determinant(rows, CRat(1)) == sympy_determinant(rows), "Leibniz and Bareiss determinants agree"

    try:
        invert_matrix([[z, zb], [zb, z]], one, zero)
        assert False, "Matrix vanishing at the base point is not invertible"
    except NotInvertibleError:
        pass

    logger.info("✅ Linear algebra tests passed")
    return True


def run_all_tests():
    """Run all tests."""
    logger.info("=" * 80)
    logger.info("DIFFERENTIAL OPERATOR TEST SUITE")
    logger.info("=" * 80)

    tests = [
        ("Elementary Commutators", test_elementary_commutators),
        ("Composition and Action", test_composition_and_action),
        ("Projectors", test_projectors),
        ("Iterated Brackets and Naturality", test_iterated_brackets_and_naturality),
        ("Linear Algebra", test_linear_algebra),
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
