"""Continuous problem definition: operator, domain, potential.

The computational object everywhere downstream is a validated
:class:`ProblemSpec` bundling a constant-coefficient, formally selfadjoint
elliptic operator of even order ``m`` on the unit interval or square, and a
strictly positive potential ``V``.  The reciprocal ``q = 1/V`` is the
coefficient the Galerkin assembly actually integrates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import (
    DimensionMismatch,
    EllipticityViolation,
    NonpositivePotential,
    OutOfDomain,
    SmoothnessWarning,
    UnsupportedDimension,
)

_SPHERE_SAMPLES = 1000
_POSITIVITY_MARGIN = 1e-10
_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class OperatorSpec:
    """Constant-coefficient differential operator given by its symbol.

    ``coefficients`` maps a multi-index (length ``dimension`` tuple) to the
    real coefficient of ``xi**alpha`` in the symbol.  Real coefficients make
    the operator formally selfadjoint automatically.
    """

    coefficients: Mapping[tuple[int, ...], float]
    order: int
    dimension: int
    preset: str = "custom"

    def __post_init__(self):
        if self.order <= 0 or self.order % 2 != 0:
            raise ValueError("operator order must be a positive even integer")
        if self.dimension not in (1, 2):
            raise UnsupportedDimension(f"dimension {self.dimension} not supported")
        for alpha, c in self.coefficients.items():
            if len(alpha) != self.dimension:
                raise DimensionMismatch(
                    f"multi-index {alpha} does not match dimension {self.dimension}"
                )
            if sum(alpha) > self.order:
                raise ValueError(f"multi-index {alpha} exceeds stated order {self.order}")
            if abs(float(np.imag(c))) > 0:
                raise ValueError("coefficients must be real")

    @classmethod
    def laplacian(cls, dimension: int) -> "OperatorSpec":
        """Negative Laplacian; symbol |xi|^2."""
        coeffs = {}
        for j in range(dimension):
            alpha = [0] * dimension
            alpha[j] = 2
            coeffs[tuple(alpha)] = 1.0
        return cls(coeffs, order=2, dimension=dimension, preset="laplacian")

    @classmethod
    def bilaplacian(cls, dimension: int) -> "OperatorSpec":
        """Squared Laplacian; symbol |xi|^4."""
        if dimension == 1:
            coeffs = {(4,): 1.0}
        else:
            coeffs = {(4, 0): 1.0, (2, 2): 2.0, (0, 4): 1.0}
        return cls(coeffs, order=4, dimension=dimension, preset="bilaplacian")

    @classmethod
    def preset_by_name(cls, name: str, dimension: int) -> "OperatorSpec":
        if name == "laplacian":
            return cls.laplacian(dimension)
        if name == "bilaplacian":
            return cls.bilaplacian(dimension)
        raise ValueError(f"unknown operator preset {name!r}")


@dataclass(frozen=True)
class DomainSpec:
    """Computational domain: unit interval (n=1) or unit square (n=2)."""

    shape: str  # "interval" | "square"

    def __post_init__(self):
        if self.shape not in ("interval", "square"):
            raise UnsupportedDimension(f"unsupported domain shape {self.shape!r}")

    @property
    def dimension(self) -> int:
        return 1 if self.shape == "interval" else 2

    def contains(self, x: np.ndarray) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all(x >= -_DOMAIN_SLACK) and np.all(x <= 1.0 + _DOMAIN_SLACK))


@dataclass(frozen=True)
class PotentialSpec:
    """Potential V with pointwise evaluation and q = 1/V accessor.

    Representations:
      * ``constant`` -- data is a scalar.
      * ``polynomial`` -- 1D: coefficient array c[k] of sum c_k x^k;
        2D: matrix c[i, j] of sum c_ij x^i y^j.
      * ``grid`` -- samples on a uniform grid over the domain, evaluated by
        piecewise-linear (bilinear in 2D) interpolation.  Rough data is
        accepted for experimentation but flagged with a SmoothnessWarning.
      * ``affine`` -- base + scale * direction, used by potential-family
        scans; data is a (base, direction, scale) triple of specs.
    """

    kind: str
    data: object
    dimension: int = 1

    def __post_init__(self):
        if self.kind not in ("constant", "polynomial", "grid", "affine"):
            raise ValueError(f"unknown potential representation {self.kind!r}")
        if self.kind == "grid":
            warnings.warn(
                "grid potentials are only piecewise linear; smoothness "
                "assumptions behind the method are not met",
                SmoothnessWarning,
                stacklevel=2,
            )

    @classmethod
    def constant(cls, value: float, dimension: int = 1) -> "PotentialSpec":
        return cls("constant", float(value), dimension)

    @classmethod
    def polynomial(cls, coeffs, dimension: int = 1) -> "PotentialSpec":
        arr = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if dimension == 2 and arr.ndim != 2:
            raise DimensionMismatch("2D polynomial potential needs a coefficient matrix")
        return cls("polynomial", arr, dimension)

    @classmethod
    def grid(cls, values, dimension: int = 1) -> "PotentialSpec":
        arr = np.asarray(values, dtype=float)
        if arr.ndim != dimension:
            raise DimensionMismatch("grid rank must equal the domain dimension")
        if arr.shape[0] < 2 or (dimension == 2 and arr.shape[1] < 2):
            raise ValueError("grid potential needs at least two samples per axis")
        return cls("grid", arr, dimension)

    @classmethod
    def affine(cls, base: "PotentialSpec", direction: "PotentialSpec", scale: float) -> "PotentialSpec":
        if base.dimension != direction.dimension:
            raise DimensionMismatch("base and direction dimensions differ")
        return cls("affine", (base, direction, float(scale)), base.dimension)


@dataclass(frozen=True)
class ProblemSpec:
    """Validated bundle of operator, domain and potential.

    ``trace_class`` / ``hilbert_schmidt`` record whether the companion
    operator of the associated pencil is trace class (m > n) respectively
    Hilbert-Schmidt (m > n/2); ``p_min`` is the smallest integer p with
    p > n/m, the least power for which the trace criterion applies.
    """

    operator: OperatorSpec
    domain: DomainSpec
    potential: PotentialSpec
    trace_class: bool = field(init=False)
    hilbert_schmidt: bool = field(init=False)
    p_min: int = field(init=False)

    def __post_init__(self):
        m, n = self.operator.order, self.operator.dimension
        object.__setattr__(self, "trace_class", m > n)
        object.__setattr__(self, "hilbert_schmidt", 2 * m > n)
        object.__setattr__(self, "p_min", int(np.floor(n / m)) + 1)

    @property
    def order(self) -> int:
        return self.operator.order

    @property
    def dimension(self) -> int:
        return self.operator.dimension


def symbol_value(op: OperatorSpec, xi) -> float:
    """Full symbol sum a_alpha xi^alpha at a frequency vector."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape[-1] != op.dimension:
        raise DimensionMismatch(
            f"xi has length {xi.shape[-1]}, operator dimension is {op.dimension}"
        )
    total = np.zeros(xi.shape[:-1], dtype=float)
    for alpha, c in op.coefficients.items():
        term = np.full(xi.shape[:-1], float(c))
        for j, a in enumerate(alpha):
            if a:
                term = term * xi[..., j] ** a
        total = total + term
    return float(total) if total.ndim == 0 else total


def principal_symbol_value(op: OperatorSpec, xi) -> float:
    """Top-order part of the symbol, the object ellipticity constrains."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape[-1] != op.dimension:
        raise DimensionMismatch(
            f"xi has length {xi.shape[-1]}, operator dimension is {op.dimension}"
        )
    total = np.zeros(xi.shape[:-1], dtype=float)
    for alpha, c in op.coefficients.items():
        if sum(alpha) != op.order:
            continue
        term = np.full(xi.shape[:-1], float(c))
        for j, a in enumerate(alpha):
            if a:
                term = term * xi[..., j] ** a
        total = total + term
    return float(total) if total.ndim == 0 else total


def _sphere_points(dimension: int, count: int = _SPHERE_SAMPLES) -> np.ndarray:
    if dimension == 1:
        return np.array([[1.0], [-1.0]])
    theta = 2.0 * np.pi * np.arange(count) / count
    return np.column_stack([np.cos(theta), np.sin(theta)])


def eval_potential(pot: PotentialSpec, x) -> float:
    """Evaluate V at a point (or an array of points) of the closed domain."""
    pts = np.atleast_1d(np.asarray(x, dtype=float))
    scalar = (pts.ndim == 1 and pot.dimension == 1 and pts.size == 1) or (
        pts.ndim == 1 and pot.dimension == 2 and pts.size == 2
    )
    if pot.dimension == 1:
        flat = pts.reshape(-1)
    else:
        flat = pts.reshape(-1, 2)
    if np.any(flat < -_DOMAIN_SLACK) or np.any(flat > 1.0 + _DOMAIN_SLACK):
        raise OutOfDomain("point outside the closed unit domain")
    vals = _potential_values(pot, flat)
    if scalar:
        return float(vals.reshape(-1)[0])
    return vals


def _potential_values(pot: PotentialSpec, flat: np.ndarray) -> np.ndarray:
    """Vectorized V on points already known to be inside the domain."""
    if pot.kind == "constant":
        n = flat.shape[0] if flat.ndim > 0 else 1
        return np.full(n, float(pot.data))
    if pot.kind == "affine":
        base, direction, scale = pot.data
        return _potential_values(base, flat) + scale * _potential_values(direction, flat)
    if pot.dimension == 1:
        xs = flat.reshape(-1)
        if pot.kind == "polynomial":
            return np.polynomial.polynomial.polyval(xs, pot.data)
        knots = np.linspace(0.0, 1.0, pot.data.shape[0])
        return np.interp(xs, knots, pot.data)
    xs, ys = flat[:, 0], flat[:, 1]
    if pot.kind == "polynomial":
        return np.polynomial.polynomial.polyval2d(xs, ys, pot.data)
    return _bilinear(pot.data, xs, ys)


def _bilinear(values: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    nx, ny = values.shape
    fx = np.clip(xs, 0.0, 1.0) * (nx - 1)
    fy = np.clip(ys, 0.0, 1.0) * (ny - 1)
    ix = np.minimum(fx.astype(int), nx - 2)
    iy = np.minimum(fy.astype(int), ny - 2)
    tx = fx - ix
    ty = fy - iy
    v00 = values[ix, iy]
    v10 = values[ix + 1, iy]
    v01 = values[ix, iy + 1]
    v11 = values[ix + 1, iy + 1]
    return (
        v00 * (1 - tx) * (1 - ty)
        + v10 * tx * (1 - ty)
        + v01 * (1 - tx) * ty
        + v11 * tx * ty
    )


def potential_floor(pot: PotentialSpec, points: np.ndarray) -> float:
    """Minimum of V over the given points (flat array of domain points)."""
    return float(np.min(_potential_values(pot, points)))


def _validation_points(dimension: int) -> np.ndarray:
    if dimension == 1:
        return np.linspace(0.0, 1.0, 1025)
    g = np.linspace(0.0, 1.0, 65)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def validate_problem(op: OperatorSpec, dom: DomainSpec, pot: PotentialSpec) -> ProblemSpec:
    """Check the standing hypotheses and return the validated bundle.

    Ellipticity is tested by sampling the principal symbol on a fixed
    quasi-uniform set of unit directions; strict positivity of V on a dense
    fixed grid with margin 1e-10.  Both checks are deterministic.

    Raises:
        EllipticityViolation: principal symbol vanishes at a sample.
        NonpositivePotential: V drops to the margin somewhere.
        UnsupportedDimension / DimensionMismatch: inconsistent geometry.
    """
    if op.dimension not in (1, 2):
        raise UnsupportedDimension(f"dimension {op.dimension} not supported")
    if dom.dimension != op.dimension:
        raise DimensionMismatch(
            f"domain dimension {dom.dimension} != operator dimension {op.dimension}"
        )
    if pot.dimension != op.dimension:
        raise DimensionMismatch(
            f"potential dimension {pot.dimension} != operator dimension {op.dimension}"
        )

    directions = _sphere_points(op.dimension)
    symb = np.array([principal_symbol_value(op, d) for d in directions])
    scale = max(float(np.max(np.abs(symb))), 1e-300)
    if np.any(np.abs(symb) <= 1e-12 * scale):
        raise EllipticityViolation("principal symbol vanishes on the sampled sphere")

    floor = potential_floor(pot, _validation_points(op.dimension))
    if floor <= _POSITIVITY_MARGIN:
        raise NonpositivePotential(
            f"potential minimum {floor:.3e} is below the strict-positivity margin"
        )

    return ProblemSpec(op, dom, pot)
