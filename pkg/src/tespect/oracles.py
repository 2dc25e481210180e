"""Independent closed-form references for constant-potential problems.

Two matching determinants whose real roots are transmission wavenumbers of
the second-order preset with constant V (contrast eta = sqrt(1 + V)):

* interval: interior waves cos(kx)/sin(kx) against cos(eta k x)/sin(eta k x),
  matched in value and first derivative at both endpoints -- a 4x4
  determinant, row-equilibrated so its magnitude is meaningful as a residual;
* unit disk: per angular mode l, the 2x2 radial matching of J_l(k r) against
  J_l(eta k r) at r = 1, d_l(k) = eta J_l(k) J_l'(eta k) - J_l'(k) J_l(eta k).

Bessel values come from the module's own evaluator (power series below
x = 12, normalized backward recurrence above), so the reference side shares
no code with the Galerkin pipeline it validates.

Roots are located on a dense grid: sign changes are bisected; even-order
zeros, where the determinant only touches zero (for eta = 2 the interval
determinant is 2 (cos k - 1)^2 (cos k + 2), so the whole 2 pi j family is of
this kind), are caught as deep local minima and refined by ternary search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateContrast, NoSignChange, RangeExceeded

_L_MAX = 60
_X_MAX = 200.0
_SERIES_CUTOFF = 12.0
_RESIDUAL_TOL = 1e-10
_TANGENT_DETECT = 1e-8
DEFAULT_POINTS_PER_UNIT = 2000
_MIN_CONTRAST = 1e-6


@dataclass(frozen=True)
class OracleRoot:
    """A located root of a reference matching determinant."""

    k: float
    lam: float
    l: Optional[int]  # angular index; None for the interval determinant
    residual: float
    bracket: tuple[float, float]
    kind: str  # "sign-change" | "tangency"


# -- Bessel functions of the first kind ---------------------------------------


def _bessel_series(l: int, x: float) -> float:
    half = 0.5 * x
    term = half**l / math.factorial(l)
    total = term
    s = 0
    while abs(term) > 1e-18 * (abs(total) + 1e-300) and s < 200:
        term *= -(half * half) / ((s + 1.0) * (s + l + 1.0))
        total += term
        s += 1
    return total


def _bessel_row_series(lmax: int, x: float) -> np.ndarray:
    return np.array([_bessel_series(l, x) for l in range(lmax + 1)])


def _bessel_row_miller(lmax: int, x: float) -> np.ndarray:
    """J_0..J_lmax by backward recurrence with even-order sum normalization."""
    top = max(lmax, int(math.ceil(x)))
    start = int(math.ceil(top + 18.0 * math.sqrt(top) + 30.0))
    start += start % 2  # even start keeps the normalization bookkeeping simple
    row = np.zeros(lmax + 1)
    jp = 0.0  # J_{s+1}
    jc = 1e-30  # J_s
    norm = 0.0
    for s in range(start, 0, -1):
        jm = (2.0 * s / x) * jc - jp
        jp, jc = jc, jm
        if s - 1 <= lmax:
            row[s - 1] = jc
        if (s - 1) % 2 == 0 and s - 1 > 0:
            norm += 2.0 * jc
        if abs(jc) > 1e250:
            jp *= 1e-250
            jc *= 1e-250
            norm *= 1e-250
            row *= 1e-250
    norm += jc  # J_0 enters once
    return row / norm


def bessel_row(lmax: int, x: float) -> np.ndarray:
    """J_0(x) .. J_lmax(x) to about 1e-12 absolute on the validated range."""
    if lmax < 0 or lmax > _L_MAX:
        raise RangeExceeded(f"order {lmax} outside [0, {_L_MAX}]")
    if x < 0 or x > _X_MAX:
        raise RangeExceeded(f"argument {x} outside [0, {_X_MAX}]")
    if x == 0.0:
        row = np.zeros(lmax + 1)
        row[0] = 1.0
        return row
    if x < _SERIES_CUTOFF:
        return _bessel_row_series(lmax, x)
    return _bessel_row_miller(lmax, x)


def bessel_j(l: int, x: float) -> float:
    """Bessel function of the first kind, integer order."""
    return float(bessel_row(l, x)[l])


def bessel_j_derivative(l: int, x: float) -> float:
    """dJ_l/dx via J_l' = (J_{l-1} - J_{l+1}) / 2, with J_0' = -J_1."""
    row = bessel_row(l + 1, x)
    if l == 0:
        return float(-row[1])
    return float(0.5 * (row[l - 1] - row[l + 1]))


# -- matching determinants ------------------------------------------------------


def interval_matching_matrix(k: float, eta: float) -> np.ndarray:
    """Endpoint value/derivative matching of the two interior wave families.

    Columns weight cos(kx), sin(kx), cos(eta k x), sin(eta k x); rows enforce
    equality of value and first derivative at x = 0 and x = 1.  Rows are
    scaled to unit norm so the determinant doubles as a residual measure.
    """
    ek = eta * k
    rows = np.array(
        [
            [1.0, 0.0, -1.0, 0.0],
            [0.0, k, 0.0, -ek],
            [math.cos(k), math.sin(k), -math.cos(ek), -math.sin(ek)],
            [-k * math.sin(k), k * math.cos(k), ek * math.sin(ek), -ek * math.cos(ek)],
        ]
    )
    norms = np.linalg.norm(rows, axis=1)
    return rows / norms[:, None]


def interval_determinant(k: float, eta: float) -> float:
    return float(np.linalg.det(interval_matching_matrix(k, eta)))


def disk_determinant(k: float, eta: float, l: int) -> float:
    row = bessel_row(l + 1, k)
    row_eta = bessel_row(l + 1, eta * k)
    if l == 0:
        dl, dl_eta = -row[1], -row_eta[1]
    else:
        dl = 0.5 * (row[l - 1] - row[l + 1])
        dl_eta = 0.5 * (row_eta[l - 1] - row_eta[l + 1])
    return eta * row[l] * dl_eta - dl * row_eta[l]


# -- root location ---------------------------------------------------------------


def _bisect(fn: Callable[[float], float], lo: float, hi: float) -> float:
    flo = fn(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < max(1e-13, 8.0 * np.finfo(float).eps * abs(mid)):
            return mid
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (flo < 0) != (fm < 0):
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def _ternary_min(fn: Callable[[float], float], lo: float, hi: float) -> float:
    for _ in range(200):
        if hi - lo < max(1e-13, 8.0 * np.finfo(float).eps * abs(lo)):
            break
        third = (hi - lo) / 3.0
        m1, m2 = lo + third, hi - third
        if abs(fn(m1)) <= abs(fn(m2)):
            hi = m2
        else:
            lo = m1
    return 0.5 * (lo + hi)


def _scan_roots(
    fn: Callable[[float], float],
    k_lo: float,
    k_hi: float,
    points_per_unit: int,
    l: Optional[int] = None,
) -> list[OracleRoot]:
    count = max(int(math.ceil((k_hi - k_lo) * points_per_unit)), 8) + 1
    ks = np.linspace(k_lo, k_hi, count)
    vals = np.array([fn(float(k)) for k in ks])
    scale = max(float(np.median(np.abs(vals))), 1e-300)

    roots: list[OracleRoot] = []
    flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    for i in flips:
        k_star = _bisect(fn, float(ks[i]), float(ks[i + 1]))
        res = abs(fn(k_star))
        if res < _RESIDUAL_TOL and k_star > 0:
            roots.append(
                OracleRoot(
                    k=k_star,
                    lam=k_star**2,
                    l=l,
                    residual=res,
                    bracket=(float(ks[i]), float(ks[i + 1])),
                    kind="sign-change",
                )
            )

    # even-order zeros: the determinant touches zero without crossing
    mags = np.abs(vals)
    for i in range(1, count - 1):
        if mags[i] <= mags[i - 1] and mags[i] <= mags[i + 1] and mags[i] < _TANGENT_DETECT * scale:
            if np.sign(vals[i - 1]) * np.sign(vals[i + 1]) < 0:
                continue  # already handled as a sign change
            k_star = _ternary_min(fn, float(ks[i - 1]), float(ks[i + 1]))
            res = abs(fn(k_star))
            if res < _RESIDUAL_TOL and k_star > 0:
                if any(abs(r.k - k_star) < 1e-9 * max(1.0, k_star) for r in roots):
                    continue
                roots.append(
                    OracleRoot(
                        k=k_star,
                        lam=k_star**2,
                        l=l,
                        residual=res,
                        bracket=(float(ks[i - 1]), float(ks[i + 1])),
                        kind="tangency",
                    )
                )
    roots.sort(key=lambda r: r.k)
    return roots


def oracle_1d(
    contrast: float,
    k_lo: float,
    k_hi: float,
    points_per_unit: int = DEFAULT_POINTS_PER_UNIT,
    require_roots: bool = False,
) -> list[OracleRoot]:
    """Real transmission wavenumbers on the unit interval for constant V.

    Raises:
        DegenerateContrast: V below 1e-6 (the two wave families coincide).
        NoSignChange: nothing found although the caller demanded roots.
    """
    if contrast < _MIN_CONTRAST:
        raise DegenerateContrast(f"contrast {contrast:g} below {_MIN_CONTRAST:g}")
    if k_lo <= 0 or k_hi <= k_lo:
        raise ValueError("need 0 < k_lo < k_hi")
    eta = math.sqrt(1.0 + contrast)
    roots = _scan_roots(lambda k: interval_determinant(k, eta), k_lo, k_hi, points_per_unit)
    if require_roots and not roots:
        raise NoSignChange(f"no roots in ({k_lo:g}, {k_hi:g})")
    return roots


def oracle_disk(
    contrast: float,
    l_max: int,
    k_lo: float,
    k_hi: float,
    points_per_unit: int = DEFAULT_POINTS_PER_UNIT,
) -> list[OracleRoot]:
    """Real transmission wavenumbers on the unit disk, per angular mode.

    Roots are tagged with their mode index l; coincidences across modes are
    retained.  The Bessel evaluator's validated range bounds l_max and
    eta * k_hi.

    Raises:
        RangeExceeded: mode index above 40 or argument beyond the evaluator.
        DegenerateContrast: V below 1e-6.
    """
    if contrast < _MIN_CONTRAST:
        raise DegenerateContrast(f"contrast {contrast:g} below {_MIN_CONTRAST:g}")
    if l_max < 0 or l_max > 40:
        raise RangeExceeded("mode index limit is 40")
    eta = math.sqrt(1.0 + contrast)
    if eta * k_hi > _X_MAX:
        raise RangeExceeded(f"eta * k_hi = {eta * k_hi:g} beyond the Bessel range")
    if k_lo <= 0 or k_hi <= k_lo:
        raise ValueError("need 0 < k_lo < k_hi")
    out: list[OracleRoot] = []
    for l in range(l_max + 1):
        out.extend(
            _scan_roots(
                lambda k, mode=l: disk_determinant(k, eta, mode),
                k_lo,
                k_hi,
                points_per_unit,
                l=l,
            )
        )
    out.sort(key=lambda r: (r.k, r.l))
    return out
