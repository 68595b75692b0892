#!/usr/bin/env python3
"""
Tests for the exterior algebra: sign conventions, graded derivations and
super functions.
"""
import sys
import logging
from fractions import Fraction
from pathlib import Path

# Setup paths
sys.path.insert(0, str(Path(__file__).parent))

from hypothesis import given, settings, strategies as st

from exceptions import DimensionError, NotInvertibleError
from quantization.coeff import CRat, JetSpace, jet_series
from quantization.grassmann import (
    SuperCoeff,
    SuperFunction,
    all_masks,
    eps,
    indices_of,
    mask_of,
    product_sign,
)

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

D = 2
POINT = JetSpace(0, 0)

elements = st.dictionaries(
    keys=st.tuples(st.integers(0, 3), st.integers(0, 3)),
    values=st.integers(min_value=-2, max_value=2),
    max_size=5,
).map(lambda comps: SuperCoeff(D, {k: CRat(v) for k, v in comps.items()}, CRat(0)))


def basis(I, J, c=1):
    return SuperCoeff.basis(D, I, J, CRat(c))


def zero():
    return SuperCoeff(D, {}, CRat(0))


def test_sign_conventions():
    """Test index sets and signs of normal-ordered products."""
    logger.info("\n=== Testing Sign Conventions ===")

    assert mask_of([1, 3]) == 0b101, "Index 1 is bit 0"
    assert indices_of(0b110) == [2, 3], "Bits map back to ascending indices"
    assert all_masks(2) == [0, 1, 2, 3], "Masks are ordered by size then lexicographically"
    assert eps(mask_of([2])) == 1 and eps(mask_of([1, 2])) == 0, "eps counts displacement parity"

    # tb1 th1 = -th1 tb1
    assert product_sign(0, 1, 1, 0) == -1, "Moving theta past theta-bar flips the sign"
    # th2 th1 = -th1 th2
    assert product_sign(2, 0, 1, 0) == -1, "Sorting thetas flips the sign"
    assert product_sign(1, 0, 1, 0) == 0, "theta squared vanishes"

    th1, tb1 = basis(1, 0), basis(0, 1)
    assert tb1 * th1 == -(th1 * tb1), "Odd generators anticommute"
    assert (th1 * th1).is_exact_zero(), "Odd generators square to zero"

    try:
        mask_of([0])
        assert False, "Index 0 should be rejected"
    except ValueError:
        pass

    logger.info("✅ Sign convention tests passed")
    return True


@settings(max_examples=40, deadline=None)
@given(elements, elements, elements)
def test_exterior_algebra_laws(f, g, h):
    """Associativity, supercommutativity and the swap automorphism."""
    assert (f * g) * h == f * (g * h), "Wedge product should be associative"
    for p, fp in f.graded_parts().items():
        for q, gq in g.graded_parts().items():
            sign = -1 if p * q else 1
            assert fp * gq == (gq * fp) * sign, "Homogeneous elements should supercommute"
    assert f.swap().swap() == f, "Swapping theta and theta-bar twice is the identity"
    assert (f * g).swap() == f.swap() * g.swap(), "Swap should be multiplicative"


@settings(max_examples=40, deadline=None)
@given(elements, elements, st.integers(1, D))
def test_graded_leibniz(f, g, alpha):
    """Left derivatives obey the left Leibniz rule and right ones the right rule."""
    for name in ("left_theta_deriv", "left_thetabar_deriv"):
        expected = zero()
        for p, fp in f.graded_parts().items():
            expected = expected + getattr(fp, name)(alpha) * g
            expected = expected + (fp * getattr(g, name)(alpha)) * (-1 if p else 1)
        assert getattr(f * g, name)(alpha) == expected, f"{name} should obey the left Leibniz rule"

    for name in ("right_theta_deriv", "right_thetabar_deriv"):
        expected = zero()
        for q, gq in g.graded_parts().items():
            expected = expected + f * getattr(gq, name)(alpha)
            expected = expected + (getattr(f, name)(alpha) * gq) * (-1 if q else 1)
        assert getattr(f * g, name)(alpha) == expected, f"{name} should obey the right Leibniz rule"


def test_derivative_signs():
    """Test left and right derivatives on a two-theta monomial."""
    logger.info("\n=== Testing Derivative Signs ===")

    th12 = basis(0b11, 0)
    assert th12.left_theta_deriv(1) == basis(0b10, 0), "d/dth1 (th1 th2) = th2"
    assert th12.left_theta_deriv(2) == basis(0b01, 0, -1), "d/dth2 (th1 th2) = -th1 from the left"
    assert th12.right_theta_deriv(2) == basis(0b01, 0), "(th1 th2) d/dth2 = th1 from the right"

    mixed = basis(1, 1)
    assert mixed.left_thetabar_deriv(1) == basis(1, 0, -1), "d/dtb1 (th1 tb1) = -th1"
    assert mixed.right_thetabar_deriv(1) == basis(1, 0), "(th1 tb1) d/dtb1 = th1"
    assert mixed.berezin_integral() == CRat(0), "Berezin integral needs every generator"
    assert basis(0b11, 0b11, 5).berezin_integral() == CRat(5), "Top component is the integral"

    logger.info("✅ Derivative sign tests passed")
    return True


def test_inverse_and_parity():
    """Test inversion of even elements with invertible body and parity detection."""
    logger.info("\n=== Testing Inverse and Parity ===")

    f = SuperCoeff.scalar(D, CRat(2)) + basis(1, 1) + basis(2, 2, 3)
    one = SuperCoeff.scalar(D, CRat(1))
    assert f * f.invert() == one, "f * f^-1 should be one"
    assert f.parity() == 0, "Sums of even monomials are even"
    assert basis(1, 0).parity() == 1, "A single theta is odd"
    assert (basis(1, 0) + basis(1, 1)).parity() is None, "Mixed elements have no parity"

    try:
        basis(1, 1).invert()
        assert False, "Elements with zero body are not invertible"
    except NotInvertibleError:
        pass

    try:
        basis(1, 0) + SuperCoeff.basis(3, 1, 0, CRat(1))
        assert False, "Elements of different odd dimension cannot be added"
    except DimensionError:
        pass

    logger.info("✅ Inverse and parity tests passed")
    return True


def test_super_functions():
    """Test nu-series of Grassmann elements: inverse, exponential and logarithm."""
    logger.info("\n=== Testing Super Functions ===")

    x = (SuperFunction.grassmann(POINT, D, 1, 1)
         + SuperFunction.grassmann(POINT, D, 2, 2, power=1))
    f = x.one_like() + x
    inv = f.grassmann_inverse()
    assert (f * inv).agrees_with(f.one_like()), "Grassmann inverse should invert exactly"
    assert x.exp_nilpotent().log_unipotent().agrees_with(x), "log(exp(x)) should recover x"

    body = SuperFunction.lift(jet_series(POINT, {-1: POINT.const(2), 0: POINT.one()}), D)
    g = body + x
    assert g.body().coeff(-1) == POINT.const(2), "Body keeps its Laurent principal part"
    assert g.nilpotent_part().agrees_with(x), "Nilpotent part drops the body"
    assert (g * g.grassmann_inverse(4)).agrees_with(g.one_like()), "Laurent body inverts to the requested order"

    drift = (SuperFunction.grassmann(POINT, D, 0, 0, power=1)
             + SuperFunction.grassmann(POINT, D, 1, 1, power=1)).truncate(4)
    logged = (drift.one_like() + drift).log_unipotent()
    assert logged.high == 4, "The logarithm keeps the known order of its argument"
    expected = jet_series(POINT, {1: POINT.one(), 2: POINT.const(Fraction(-1, 2)),
                                  3: POINT.const(Fraction(1, 3)), 4: POINT.const(Fraction(-1, 4))})
    assert logged.body().agrees_with(expected), "Body of log(1 + nu + ...) is log(1 + nu)"

    assert f.parity() == 0, "1 + x is even"
    assert SuperFunction.grassmann(POINT, D, 1, 0).swap() == SuperFunction.grassmann(POINT, D, 0, 1), \
        "Swap maps theta to theta-bar"

    try:
        x.grassmann_inverse()
        assert False, "A function with zero body is not invertible"
    except NotInvertibleError:
        pass

    logger.info("✅ Super function tests passed")
    return True


def run_all_tests():
    """Run all tests."""
    logger.info("=" * 80)
    logger.info("GRASSMANN ALGEBRA TEST SUITE")
    logger.info("=" * 80)

    tests = [
        ("Sign Conventions", test_sign_conventions),
        ("Exterior Algebra Laws", test_exterior_algebra_laws),
        ("Graded Leibniz Rule", test_graded_leibniz),
        ("Derivative Signs", test_derivative_signs),
        ("Inverse and Parity", test_inverse_and_parity),
        ("Super Functions", test_super_functions),
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
