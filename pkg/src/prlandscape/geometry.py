"""Polar coordinates, region partition, and moment statistics.

A candidate z is summarized by R = ||z||^2, the direction zhat, the
correlation sigma = <zhat, x>, and the sign-folded distance
dist = min(||z - x||, ||z + x||).  Because +-x are equivalent global
minimizers, region membership depends only on (|sigma|, R) via the
identity dist^2 = R + 1 - 2 sqrt(R) |sigma|.

Three overlapping regions cover R^n minus the origin:

    R1: |sigma| <= sqrt((sqrt(3) - 1) / 2) - epsilon0   (negative radial curvature)
    R2: |sigma| >= 0.5 and dist >= delta0               (non-vanishing gradient)
    R3: dist <= delta0                                  (strong convexity)

The closed-form infinite-sample (population) objective

    F_pop(z) = 3 ||z||^4 - 2 ||z||^2 - 4 <z, x>^2 + 3

is the calibration standard for every finite-sample tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .ensemble import MeasurementEnsemble
from .errors import ConfigurationError, DegenerateMomentError, NormalizationError, ShapeError

# |sigma| where the population radial-curvature statistic 3(2 sigma^2 + 1)^2 - 9
# changes sign; to ten digits 0.6050003337.
R1_SIGMA_BOUND = math.sqrt((math.sqrt(3.0) - 1.0) / 2.0)


@dataclass(frozen=True)
class PolarPoint:
    """Radius/direction/correlation summary of a point relative to the signal."""

    z: np.ndarray
    R: float
    zhat: np.ndarray | None
    sigma: float
    dist: float
    direction_defined: bool

    @classmethod
    def from_coords(cls, sigma: float, R: float) -> "PolarPoint":
        """Synthetic representative with the given (sigma, R); signal is e1 in R^2."""
        if R < 0:
            raise ConfigurationError(f"R must be nonnegative, got {R}")
        if abs(sigma) > 1 + 1e-12:
            raise ConfigurationError(f"|sigma| must be <= 1, got {sigma}")
        if R == 0.0:
            return cls(
                z=np.zeros(2), R=0.0, zhat=None, sigma=0.0, dist=1.0,
                direction_defined=False,
            )
        c = max(0.0, 1.0 - sigma * sigma)
        zhat = np.array([sigma, math.sqrt(c)])
        dist = math.sqrt(max(0.0, R + 1.0 - 2.0 * math.sqrt(R) * abs(sigma)))
        return cls(
            z=math.sqrt(R) * zhat, R=float(R), zhat=zhat, sigma=float(sigma),
            dist=dist, direction_defined=True,
        )


def polar(z, x) -> PolarPoint:
    """Decompose z against the unit signal x; total on all of R^n."""
    z = np.asarray(z, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if z.shape != x.shape:
        raise ShapeError(f"z shape {z.shape} != x shape {x.shape}")
    nrm = float(np.linalg.norm(z))
    if nrm == 0.0:
        # Convention: the origin reports sigma = 0 and dist = 1, placing it
        # in the low-correlation region where its strict-maximum curvature
        # check lives.
        return PolarPoint(
            z=z, R=0.0, zhat=None, sigma=0.0, dist=1.0, direction_defined=False
        )
    zhat = z / nrm
    sigma = float(zhat @ x)
    dist = min(float(np.linalg.norm(z - x)), float(np.linalg.norm(z + x)))
    return PolarPoint(
        z=z, R=nrm * nrm, zhat=zhat, sigma=sigma, dist=dist, direction_defined=True
    )


@dataclass(frozen=True)
class RegionMembership:
    in_R1: bool
    in_R2: bool
    in_R3: bool
    epsilon0: float
    delta0: float


def _check_region_params(epsilon0: float, delta0: float) -> None:
    if not 0.0 < epsilon0 < 0.3:
        raise ConfigurationError(f"epsilon0 must lie in (0, 0.3), got {epsilon0}")
    if not 0.0 < delta0 < 0.25:
        raise ConfigurationError(f"delta0 must lie in (0, 1/4), got {delta0}")


def classify_region(p: PolarPoint, epsilon0: float = 0.05, delta0: float = 0.2) -> RegionMembership:
    """Membership flags from (|sigma|, folded dist) per the region definitions."""
    _check_region_params(epsilon0, delta0)
    a = abs(p.sigma)
    return RegionMembership(
        in_R1=a <= R1_SIGMA_BOUND - epsilon0,
        in_R2=a >= 0.5 and p.dist >= delta0,
        in_R3=p.dist <= delta0,
        epsilon0=epsilon0,
        delta0=delta0,
    )


def coverage_check(epsilon0: float, delta0: float, grid) -> list[PolarPoint]:
    """Return the grid points carrying no region flag (empty = full coverage)."""
    if not grid:
        raise ConfigurationError("grid must be nonempty")
    uncovered = []
    for p in grid:
        mem = classify_region(p, epsilon0, delta0)
        if not (mem.in_R1 or mem.in_R2 or mem.in_R3):
            uncovered.append(p)
    return uncovered


@dataclass(frozen=True)
class EmpiricalMoments:
    """Finite-sample fourth-order statistics of the rows against (zhat, x).

    A  = (1/m) sum (a^T zhat)^4          B  = (1/m) sum (a^T zhat)^2 (a^T x)^2
    A1 = (1/m) sum (a^T x) (a^T zhat)^3  C1 = (1/m) sum (a^T zhat) (a^T x)^3
    D  = (1/m) sum (a^T x)^4
    """

    A: float
    B: float
    A1: float
    C1: float
    D: float


@dataclass(frozen=True)
class PopulationMoments:
    """Infinite-sample limits as functions of sigma = <zhat, x>."""

    A: float
    B: float
    A1: float
    C1: float
    D: float


def population_moments(sigma: float) -> PopulationMoments:
    return PopulationMoments(
        A=3.0,
        B=2.0 * sigma * sigma + 1.0,
        A1=3.0 * sigma,
        C1=3.0 * sigma,
        D=3.0,
    )


def empirical_moments(e: MeasurementEnsemble, zhat) -> EmpiricalMoments:
    zhat = np.ascontiguousarray(zhat, dtype=np.float64)
    if zhat.shape != (e.n,):
        raise ShapeError(f"zhat shape {zhat.shape}, expected ({e.n},)")
    nrm = float(np.linalg.norm(zhat))
    if abs(nrm - 1.0) > 1e-9:
        raise NormalizationError(f"zhat has norm {nrm!r}, expected 1 within 1e-9")
    a, b, a1, c1, d = kernels.moments(e.rows, e.signal, zhat)
    return EmpiricalMoments(A=a, B=b, A1=a1, C1=c1, D=d)


def critical_radius(mom: EmpiricalMoments) -> float:
    """R = B/A, the unique radially stationary squared radius along zhat."""
    if mom.A <= 0.0:
        raise DegenerateMomentError(f"quartic moment A={mom.A} is not positive")
    return mom.B / mom.A


def critical_relation_residual(mom: EmpiricalMoments) -> float:
    """Signed residual B*A1 - A*C1; zero at every exact critical direction."""
    return mom.B * mom.A1 - mom.A * mom.C1


# ---------------------------------------------------------------------------
# Population (infinite-sample) oracle


def _unit_signal(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if abs(float(np.linalg.norm(x)) - 1.0) > 1e-9:
        raise NormalizationError("x must be a unit vector")
    return x


def population_loss(z, x) -> float:
    x = _unit_signal(x)
    z = np.asarray(z, dtype=np.float64)
    r = float(z @ z)
    c = float(z @ x)
    return 3.0 * r * r - 2.0 * r - 4.0 * c * c + 3.0


def population_gradient(z, x) -> np.ndarray:
    x = _unit_signal(x)
    z = np.asarray(z, dtype=np.float64)
    r = float(z @ z)
    c = float(z @ x)
    return (12.0 * r - 4.0) * z - 8.0 * c * x


def population_hessian(z, x) -> np.ndarray:
    x = _unit_signal(x)
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    r = float(z @ z)
    return (12.0 * r - 4.0) * np.eye(n) + 24.0 * np.outer(z, z) - 8.0 * np.outer(x, x)


@dataclass(frozen=True)
class PopulationCriticalPoints:
    """Closed-form critical set of the population objective.

    The origin is a strict local maximum, +-signal are the global minima,
    and the sphere of radius saddle_radius inside the signal's orthogonal
    complement is a family of strict saddles (returned parametrically via
    :meth:`saddle_point`).
    """

    signal: np.ndarray
    origin: np.ndarray
    minima: tuple[np.ndarray, np.ndarray]
    saddle_radius: float

    def saddle_point(self, direction) -> np.ndarray:
        """Project direction onto signal-perp and scale to the saddle sphere."""
        d = np.asarray(direction, dtype=np.float64)
        scale = float(np.linalg.norm(d))
        d = d - (d @ self.signal) * self.signal
        nrm = float(np.linalg.norm(d))
        if nrm <= 1e-9 * scale:
            raise ConfigurationError("direction is parallel to the signal")
        return self.saddle_radius * d / nrm


def population_critical_points(x) -> PopulationCriticalPoints:
    x = _unit_signal(x)
    return PopulationCriticalPoints(
        signal=x,
        origin=np.zeros_like(x),
        minima=(x.copy(), -x),
        saddle_radius=1.0 / math.sqrt(3.0),
    )
