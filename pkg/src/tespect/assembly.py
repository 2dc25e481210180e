"""Galerkin assembly of the quadratic pencil on a clamped basis.

The pencil coefficients are the weak forms, with q = 1/V,

    A_ij = int q (Pu_i)(Pu_j),
    B_ij = int q [(Pu_i) u_j + u_i (Pu_j)] + d(u_i, u_j),
    C_ij = int (1 + q) u_i u_j,

where P is the preset operator (second or fourth order) and d its symmetric
Dirichlet form (grad.grad respectively lap.lap).  Basis functions vanish at
the boundary together with derivatives through order m-1, so no boundary
terms appear when moving P onto the test function.

Two families are provided: shifted Legendre polynomials under the clamping
weight (x(1-x))^m, and a telescoped sine basis for the second-order case.
Two-dimensional problems use tensor products on the unit square, flattened
row-major in the construction order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly

from . import densela
from .errors import (
    AsymmetryExceeded,
    BasisOrderMismatch,
    NonpositivePotential,
    NotPositiveDefinite,
    QuadratureUnderflow,
    QuadratureWarning,
)
from .model import ProblemSpec, _potential_values

_ASYM_TOL = 1e-8
_GRAM_FLOOR = 1e-12
_EXACTNESS_TOL = 1e-12
_MAX_DOUBLINGS = 3
_POSITIVITY_MARGIN = 1e-10

POLYNOMIAL = "clamped-polynomial"
TRIG = "clamped-trig"


def quadrature_rule(size: int, order: int) -> int:
    """Default Gauss-Legendre node count per dimension."""
    return max(2 * size + 2 * order + 8, 32)


def _gauss_legendre_01(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (t + 1.0), 0.5 * w


@dataclass
class BasisSet:
    """Clamped basis with derivative evaluators and its Gram matrix.

    ``size`` counts functions per dimension; the full basis in 2D is the
    tensor product with ``size**2`` members.  Functions are scaled to unit
    discrete L2 norm, which the Gram diagonal reflects.
    """

    family: str
    order: int
    dimension: int
    size: int
    nodes: np.ndarray  # 1D rule on [0, 1]
    weights: np.ndarray
    norms: np.ndarray = field(repr=False)  # per-function 1D scale factors
    gram: np.ndarray = field(repr=False)

    @property
    def total_size(self) -> int:
        return self.size**self.dimension

    # -- 1D factor evaluation -------------------------------------------------

    def deriv1d(self, k: int, x: np.ndarray) -> np.ndarray:
        """k-th derivatives of the normalized 1D factor functions, (N, len(x))."""
        x = np.asarray(x, dtype=float)
        if self.family == POLYNOMIAL:
            raw = _poly_deriv(self.order, self.size, k, x)
        else:
            raw = _trig_deriv(self.size, k, x)
        return raw * self.norms[:, None]

    # -- multi-dimensional helpers ---------------------------------------------

    def grid_points(self, nodes: Optional[np.ndarray] = None) -> np.ndarray:
        """Quadrature points as a flat array of domain points."""
        pts = self.nodes if nodes is None else nodes
        if self.dimension == 1:
            return pts
        gx, gy = np.meshgrid(pts, pts, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])

    def grid_weights(self, weights: Optional[np.ndarray] = None) -> np.ndarray:
        w = self.weights if weights is None else weights
        if self.dimension == 1:
            return w
        return np.outer(w, w).ravel()

    def point_values(self, coeffs: np.ndarray, orders: tuple[int, ...]) -> np.ndarray:
        """Values of sum_J c_J d^orders phi_J at the quadrature points."""
        coeffs = np.asarray(coeffs)
        if self.dimension == 1:
            return coeffs @ self.deriv1d(orders[0], self.nodes)
        cx = self.deriv1d(orders[0], self.nodes)
        cy = self.deriv1d(orders[1], self.nodes)
        cm = coeffs.reshape(self.size, self.size)
        return (cx.T @ cm @ cy).ravel()

    def apply_terms(self, coeffs: np.ndarray, terms) -> np.ndarray:
        """Pointwise action of a differential-term list on a coefficient vector."""
        out = None
        for coeff, orders in terms:
            part = coeff * self.point_values(coeffs, orders)
            out = part if out is None else out + part
        return out

    def weighted_moments(self, values: np.ndarray, orders: tuple[int, ...]) -> np.ndarray:
        """Vector of int values * d^orders phi_j over basis functions."""
        w = self.grid_weights() * np.asarray(values)
        if self.dimension == 1:
            return self.deriv1d(orders[0], self.nodes) @ w
        vx = self.deriv1d(orders[0], self.nodes)
        vy = self.deriv1d(orders[1], self.nodes)
        wgrid = w.reshape(self.nodes.size, self.nodes.size)
        return (vx @ wgrid @ vy.T).ravel()

    def dual_moments(self, values: np.ndarray, terms) -> np.ndarray:
        """Vector of int values * (term-list acting on phi_j)."""
        out = None
        for coeff, orders in terms:
            part = coeff * self.weighted_moments(values, orders)
            out = part if out is None else out + part
        return out

    def project(self, values: np.ndarray) -> np.ndarray:
        """L2-projection of pointwise values onto the basis span."""
        rhs = self.weighted_moments(values, (0,) * self.dimension)
        return np.linalg.solve(self.gram, rhs)


# -- factor-function implementations -----------------------------------------


def _weight_coeffs(order: int, deriv: int) -> np.ndarray:
    base = nppoly.polypow([0.0, 1.0, -1.0], order)  # (x - x^2)^m
    return nppoly.polyder(base, deriv) if deriv else base


def _poly_deriv(order: int, size: int, k: int, x: np.ndarray) -> np.ndarray:
    """Derivatives of w(x) * P*_j(x) via the Leibniz rule, unnormalized."""
    t = 2.0 * x - 1.0
    out = np.zeros((size, x.size))
    eye = np.eye(size)
    for i in range(min(k, 2 * order) + 1):
        wvals = nppoly.polyval(x, _weight_coeffs(order, i))
        r = k - i
        ser = npleg.legder(eye, r) if r else eye
        pvals = npleg.legval(t, ser) * (2.0**r)
        out += math.comb(k, i) * wvals[None, :] * pvals
    return out


def _trig_deriv(size: int, k: int, x: np.ndarray) -> np.ndarray:
    """Derivatives of sin(j pi x) - (j/(j+2)) sin((j+2) pi x), unnormalized."""
    j = np.arange(1, size + 1, dtype=float)[:, None]
    a = j * np.pi
    b = (j + 2.0) * np.pi
    rho = j / (j + 2.0)
    phase = 0.5 * np.pi * k
    return (a**k) * np.sin(a * x[None, :] + phase) - rho * (b**k) * np.sin(
        b * x[None, :] + phase
    )


# -- operator term tables ------------------------------------------------------


def p0_terms(order: int, dimension: int):
    """Pointwise action of the preset operator as (coeff, derivative-orders)."""
    if order == 2:
        if dimension == 1:
            return [(-1.0, (2,))]
        return [(-1.0, (2, 0)), (-1.0, (0, 2))]
    if order == 4:
        if dimension == 1:
            return [(1.0, (4,))]
        return [(1.0, (4, 0)), (2.0, (2, 2)), (1.0, (0, 4))]
    raise BasisOrderMismatch(f"no preset action for operator order {order}")


def dirichlet_factors(order: int, dimension: int):
    """Symmetric Dirichlet form of the preset as a list of squared factors."""
    if order == 2:
        if dimension == 1:
            return [[(1.0, (1,))]]
        return [[(1.0, (1, 0))], [(1.0, (0, 1))]]
    if order == 4:
        if dimension == 1:
            return [[(1.0, (2,))]]
        return [[(1.0, (2, 0)), (1.0, (0, 2))]]
    raise BasisOrderMismatch(f"no Dirichlet form for operator order {order}")


# -- construction ---------------------------------------------------------------


def build_basis(
    problem: ProblemSpec,
    size: int,
    family: str = POLYNOMIAL,
    quadrature_nodes: int = 0,
) -> BasisSet:
    """Construct the clamped basis and its Gram matrix.

    ``size`` is the per-dimension function count.  ``quadrature_nodes``
    overrides the per-dimension Gauss-Legendre rule; 0 keeps the default.

    Raises:
        BasisOrderMismatch: trig family requested for a fourth-order operator.
        QuadratureUnderflow: override too small for the basis polynomial degree.
        NotPositiveDefinite: Gram matrix fails its positivity floor.
    """
    if size < 1:
        raise ValueError("basis size must be at least 1")
    m, n = problem.order, problem.dimension
    if family == TRIG and m != 2:
        raise BasisOrderMismatch("clamped-trig realizes only second-order clamping")
    if family not in (POLYNOMIAL, TRIG):
        raise ValueError(f"unknown basis family {family!r}")

    nodes_count = quadrature_nodes or quadrature_rule(size, m)
    if family == POLYNOMIAL:
        required = size + 2 * m + 1
        if nodes_count < required:
            raise QuadratureUnderflow(
                f"{nodes_count} nodes cannot integrate degree {2 * (size - 1 + 2 * m)}"
            )
    nodes, weights = _gauss_legendre_01(nodes_count)

    basis = BasisSet(
        family=family,
        order=m,
        dimension=n,
        size=size,
        nodes=nodes,
        weights=weights,
        norms=np.ones(size),
        gram=np.empty(0),
    )
    raw = basis.deriv1d(0, nodes)
    diag = (raw * raw) @ weights
    basis.norms = 1.0 / np.sqrt(diag)

    gram1d = _factor_form(basis.deriv1d(0, nodes), basis.deriv1d(0, nodes), weights)
    gram1d = 0.5 * (gram1d + gram1d.T)
    gram = gram1d if n == 1 else np.kron(gram1d, gram1d)
    basis.gram = gram

    eigs = np.linalg.eigvalsh(gram)
    if eigs[0] <= _GRAM_FLOOR:
        raise NotPositiveDefinite(
            f"normalized Gram minimum eigenvalue {eigs[0]:.3e} below {_GRAM_FLOOR:.0e}"
        )
    return basis


def _factor_form(e1: np.ndarray, e2: np.ndarray, w: np.ndarray) -> np.ndarray:
    return (e1 * w[None, :]) @ e2.T


@dataclass
class GalerkinSystem:
    """Assembled pencil matrices in basis coordinates."""

    gram: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    problem: Optional[ProblemSpec] = None
    basis: Optional[BasisSet] = None

    @property
    def size(self) -> int:
        return self.a.shape[0]


@dataclass
class WhitenedSystem:
    """Pencil in L2-orthonormal, mass-normalized coordinates.

    ``to_basis`` maps whitened coordinate vectors back to basis coefficients
    (the composition of the Gram and mass inverse square roots); it is the
    identity for synthetic systems injected directly as matrices.
    """

    a: np.ndarray
    b: np.ndarray
    to_basis: np.ndarray
    system: Optional[GalerkinSystem] = None

    @property
    def size(self) -> int:
        return self.a.shape[0]

    @classmethod
    def from_matrices(cls, a, b) -> "WhitenedSystem":
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        return cls(a=a, b=b, to_basis=np.eye(a.shape[0]), system=None)

    @cached_property
    def inv_sqrt_a(self) -> np.ndarray:
        s = densela.spd_inv_sqrt(self.a)
        return 0.5 * (s + s.T)

    @cached_property
    def comp_block(self) -> np.ndarray:
        s = self.inv_sqrt_a
        k = s @ self.b @ s
        return 0.5 * (k + k.T)

    @cached_property
    def inv_a(self) -> np.ndarray:
        s = self.inv_sqrt_a
        prod = s @ s
        return 0.5 * (prod + prod.T)


def _check_and_symmetrize(name: str, m: np.ndarray) -> np.ndarray:
    scale = max(float(np.linalg.norm(m)), 1e-300)
    asym = float(np.linalg.norm(m - m.T)) / scale
    if asym > _ASYM_TOL:
        raise AsymmetryExceeded(
            f"matrix {name} asymmetry {asym:.3e} exceeds {_ASYM_TOL:.0e}; "
            "quadrature is inconsistent"
        )
    return 0.5 * (m + m.T)


def _assemble_at(
    problem: ProblemSpec, basis: BasisSet, nodes: np.ndarray, weights: np.ndarray
) -> dict[str, np.ndarray]:
    n = problem.dimension
    pts = basis.grid_points(nodes)
    vvals = _potential_values(problem.potential, pts if n == 2 else pts)
    if np.min(vvals) <= _POSITIVITY_MARGIN:
        raise NonpositivePotential(
            f"potential minimum {np.min(vvals):.3e} at a quadrature node"
        )
    qvals = 1.0 / vvals

    pterms = p0_terms(problem.order, n)
    dfactors = dirichlet_factors(problem.order, n)
    ident = [(1.0, (0,) * n)]

    if n == 1:
        w = weights

        def ev(orders):
            return basis.deriv1d(orders[0], nodes)

        def form(termsI, termsJ, wvals):
            out = np.zeros((basis.size, basis.size))
            for ci, oi in termsI:
                for cj, oj in termsJ:
                    out += ci * cj * _factor_form(ev(oi), ev(oj), w * wvals)
            return out

    else:
        w2 = np.outer(weights, weights)
        qn = nodes.size
        cache: dict[int, np.ndarray] = {}

        def ev1(k):
            if k not in cache:
                cache[k] = basis.deriv1d(k, nodes)
            return cache[k]

        def form(termsI, termsJ, wvals):
            ns = basis.size
            wgrid = w2 * wvals.reshape(qn, qn)
            out = np.zeros((ns * ns, ns * ns))
            for ci, (kxi, kyi) in termsI:
                for cj, (kxj, kyj) in termsJ:
                    u = np.einsum("ia,ja->ija", ev1(kxi), ev1(kxj)).reshape(ns * ns, qn)
                    v = np.einsum("ib,jb->ijb", ev1(kyi), ev1(kyj)).reshape(ns * ns, qn)
                    r = (u @ wgrid @ v.T).reshape(ns, ns, ns, ns)
                    out += ci * cj * r.transpose(0, 2, 1, 3).reshape(ns * ns, ns * ns)
            return out

    ones = np.ones_like(qvals)
    mat_a = form(pterms, pterms, qvals)
    mat_bq = form(pterms, ident, qvals)
    mat_bd = sum(form(f, f, ones) for f in dfactors)
    mat_b = mat_bq + mat_bq.T + mat_bd
    mat_c = form(ident, ident, 1.0 + qvals)
    mat_g = form(ident, ident, ones)
    return {"G": mat_g, "A": mat_a, "B": mat_b, "C": mat_c}


def assemble_system(
    problem: ProblemSpec, basis: BasisSet, verify_quadrature: bool = True
) -> GalerkinSystem:
    """Assemble G, A, B, C with an automatic quadrature-exactness check.

    The rule is doubled (up to 3 times) whenever the base and doubled rules
    disagree beyond 1e-12 relative; persistent disagreement -- rough grid
    potentials, say -- is reported as a QuadratureWarning on the finest rule.

    Raises:
        AsymmetryExceeded: pre-symmetrization asymmetry above 1e-8.
        NotPositiveDefinite: A or C fails factorization.
        NonpositivePotential: V not strictly positive at a quadrature node.
    """
    nodes, weights = basis.nodes, basis.weights
    mats = _assemble_at(problem, basis, nodes, weights)

    if verify_quadrature:
        for attempt in range(_MAX_DOUBLINGS):
            fine_nodes, fine_weights = _gauss_legendre_01(2 * nodes.size)
            fine = _assemble_at(problem, basis, fine_nodes, fine_weights)
            worst = max(
                np.max(np.abs(mats[k] - fine[k])) / max(np.max(np.abs(fine[k])), 1e-300)
                for k in mats
            )
            if worst < _EXACTNESS_TOL:
                break
            mats = fine
            nodes, weights = fine_nodes, fine_weights
            if attempt == _MAX_DOUBLINGS - 1:
                warnings.warn(
                    f"quadrature check still {worst:.2e} after "
                    f"{_MAX_DOUBLINGS} doublings; keeping the finest rule",
                    QuadratureWarning,
                    stacklevel=2,
                )

    out = {k: _check_and_symmetrize(k, v) for k, v in mats.items()}
    for name in ("A", "C", "G"):
        try:
            np.linalg.cholesky(out[name])
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(f"matrix {name} is not positive definite") from exc

    return GalerkinSystem(
        gram=out["G"], a=out["A"], b=out["B"], c=out["C"], problem=problem, basis=basis
    )


def whiten(system: GalerkinSystem) -> WhitenedSystem:
    """Move the pencil into orthonormal, mass-normalized coordinates.

    First congruence by the inverse square root of the Gram matrix, then by
    that of the transformed mass matrix; the composed map back to basis
    coefficients is retained for state recovery.
    """
    g_is = densela.spd_inv_sqrt(system.gram)
    a1 = g_is @ system.a @ g_is
    b1 = g_is @ system.b @ g_is
    c1 = g_is @ system.c @ g_is
    c_is = densela.spd_inv_sqrt(0.5 * (c1 + c1.T))
    aw = c_is @ a1 @ c_is
    bw = c_is @ b1 @ c_is
    aw = 0.5 * (aw + aw.T)
    bw = 0.5 * (bw + bw.T)
    try:
        np.linalg.cholesky(aw)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("whitened stiffness is not positive definite") from exc
    return WhitenedSystem(a=aw, b=bw, to_basis=g_is @ c_is, system=system)
