import numpy as np
import pytest

from tespect import model
from tespect.errors import (
    DimensionMismatch,
    EllipticityViolation,
    NonpositivePotential,
    OutOfDomain,
    SmoothnessWarning,
    UnsupportedDimension,
)


def test_validate_laplacian_interval():
    prob = model.validate_problem(
        model.OperatorSpec.laplacian(1),
        model.DomainSpec("interval"),
        model.PotentialSpec.constant(3.0, 1),
    )
    assert prob.order == 2 and prob.dimension == 1
    assert prob.trace_class and prob.hilbert_schmidt
    assert prob.p_min == 1


def test_validate_bilaplacian_square():
    prob = model.validate_problem(
        model.OperatorSpec.bilaplacian(2),
        model.DomainSpec("square"),
        model.PotentialSpec.constant(1.0, 2),
    )
    assert prob.trace_class  # 4 > 2
    assert prob.p_min == 1


def test_validate_laplacian_square_flags():
    prob = model.validate_problem(
        model.OperatorSpec.laplacian(2),
        model.DomainSpec("square"),
        model.PotentialSpec.constant(1.0, 2),
    )
    assert not prob.trace_class  # m = n
    assert prob.hilbert_schmidt  # m > n/2 holds at m = n = 2
    assert prob.p_min == 2  # smallest integer above n/m = 1


def test_symbol_values():
    lap1 = model.OperatorSpec.laplacian(1)
    assert model.symbol_value(lap1, [2.0]) == pytest.approx(4.0, abs=1e-15)
    assert model.symbol_value(lap1, [0.0]) == 0.0
    bil2 = model.OperatorSpec.bilaplacian(2)
    assert model.symbol_value(bil2, [1.0, 1.0]) == pytest.approx(4.0, abs=1e-14)


def test_symbol_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        model.symbol_value(model.OperatorSpec.laplacian(2), [1.0])


def test_laplacian_symbol_is_squared_norm():
    rng = np.random.default_rng(42)
    op = model.OperatorSpec.laplacian(2)
    for _ in range(100):
        xi = rng.standard_normal(2)
        assert model.symbol_value(op, xi) == pytest.approx(
            float(xi @ xi), rel=1e-14
        )


def test_ellipticity_violation():
    # hyperbolic symbol xi1^2 - xi2^2 vanishes on the diagonal directions
    op = model.OperatorSpec({(2, 0): 1.0, (0, 2): -1.0}, order=2, dimension=2)
    with pytest.raises(EllipticityViolation):
        model.validate_problem(
            op, model.DomainSpec("square"), model.PotentialSpec.constant(1.0, 2)
        )


def test_nonpositive_potential():
    pot = model.PotentialSpec.polynomial([1.0, -1.0], 1)  # 1 - x, zero at x = 1
    with pytest.raises(NonpositivePotential):
        model.validate_problem(
            model.OperatorSpec.laplacian(1), model.DomainSpec("interval"), pot
        )


def test_unsupported_dimension():
    with pytest.raises(UnsupportedDimension):
        model.OperatorSpec.laplacian(3)


def test_dimension_consistency():
    with pytest.raises(DimensionMismatch):
        model.validate_problem(
            model.OperatorSpec.laplacian(1),
            model.DomainSpec("square"),
            model.PotentialSpec.constant(1.0, 1),
        )


def test_validation_is_deterministic():
    args = (
        model.OperatorSpec.laplacian(2),
        model.DomainSpec("square"),
        model.PotentialSpec.constant(2.0, 2),
    )
    p1 = model.validate_problem(*args)
    p2 = model.validate_problem(*args)
    assert (p1.trace_class, p1.hilbert_schmidt, p1.p_min) == (
        p2.trace_class,
        p2.hilbert_schmidt,
        p2.p_min,
    )


def test_eval_potential_constant():
    pot = model.PotentialSpec.constant(3.0, 1)
    assert model.eval_potential(pot, 0.5) == 3.0


def test_eval_potential_polynomial():
    pot = model.PotentialSpec.polynomial([1.0, 0.0, 1.0], 1)  # 1 + x^2
    assert model.eval_potential(pot, 1.0) == pytest.approx(2.0, abs=1e-15)


def test_eval_potential_grid_interpolates():
    with pytest.warns(SmoothnessWarning):
        pot = model.PotentialSpec.grid([1.0, 2.0], 1)
    assert model.eval_potential(pot, 0.25) == pytest.approx(1.25, abs=1e-15)


def test_eval_potential_grid_2d_bilinear():
    with pytest.warns(SmoothnessWarning):
        pot = model.PotentialSpec.grid([[1.0, 2.0], [3.0, 4.0]], 2)
    assert model.eval_potential(pot, [0.5, 0.5]) == pytest.approx(2.5, abs=1e-15)
    assert model.eval_potential(pot, [0.0, 1.0]) == pytest.approx(2.0, abs=1e-15)


def test_eval_potential_out_of_domain():
    pot = model.PotentialSpec.constant(1.0, 1)
    with pytest.raises(OutOfDomain):
        model.eval_potential(pot, 1.5)


def test_affine_potential():
    base = model.PotentialSpec.constant(1.0, 1)
    direction = model.PotentialSpec.polynomial([0.0, 1.0], 1)  # x
    pot = model.PotentialSpec.affine(base, direction, 2.0)
    assert model.eval_potential(pot, 0.5) == pytest.approx(2.0, abs=1e-15)
