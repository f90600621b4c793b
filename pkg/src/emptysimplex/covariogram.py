"""Generalized covariogram g_W(y_1, ..., y_{M-1}) = Vol(W ∩ (y_1+W) ∩ ... ∩ (y_{M-1}+W)).

Closed forms exist for boxes (any number of translates) and for balls and
ellipsoids with a single nonzero translate; everything else goes through the
Monte Carlo estimator.  Directional right derivatives at zero give the
directional variation and, integrated over the sphere, the perimeter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .bodies import Ball, Box, ConvexBody, Ellipsoid, body_volume, make_rng
from .geometry import unit_ball_volume, unit_sphere_measure

DEFAULT_STEPS = 7
DEFAULT_MC_SAMPLES = 200_000


def _query(body_dim: int, q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.ndim == 1:
        q = q[None, :]
    if q.shape != (body_dim - 1, body_dim):
        raise ValueError(f"need M-1 = {body_dim - 1} vectors of dimension {body_dim}, got shape {q.shape}")
    return q


def covariogram_mc(body: ConvexBody, q, samples: int, seed) -> tuple[float, float]:
    """Vol(W) * fraction of uniform x in W with x - y_i in W for all i."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    q = _query(body.dim, q)
    vol = body_volume(body)
    x = body.sample_array(samples, make_rng(seed))
    hit = np.ones(samples, dtype=bool)
    for y in q:
        hit &= body.contains(x - y)
    p = float(hit.mean())
    return vol * p, vol * math.sqrt(p * (1.0 - p) / samples)


def covariogram_box_exact(box, q) -> float:
    """Product over axes of the common overlap of the shifted intervals."""
    a = box.extents if isinstance(box, Box) else np.asarray(box, dtype=np.float64)
    q = _query(a.shape[0], q)
    lo = np.minimum(0.0, q.min(axis=0))
    hi = np.maximum(0.0, q.max(axis=0))
    return float(np.prod(np.maximum(0.0, a + lo - hi)))


def covariogram_disc_exact(radius: float, y) -> float:
    """Area of the lens between two radius-R discs at center distance |y|."""
    d = float(np.linalg.norm(y))
    R = float(radius)
    if d >= 2 * R:
        return 0.0
    return 2 * R * R * math.acos(d / (2 * R)) - 0.5 * d * math.sqrt(4 * R * R - d * d)


def _ball_lens(m: int, R: float, d: float) -> float:
    # two caps of height R - d/2; cap volume via the regularized incomplete beta
    if d >= 2 * R:
        return 0.0
    return unit_ball_volume(m) * R ** m * float(betainc((m + 1) / 2, 0.5, 1.0 - d * d / (4 * R * R)))


def covariogram_exact(body: ConvexBody, q) -> float | None:
    """Closed-form g_W(q) when one is known, else None."""
    q = _query(body.dim, q)
    if isinstance(body, Box):
        return covariogram_box_exact(body, q)
    nonzero = q[np.any(q != 0.0, axis=1)]
    if len(nonzero) == 0:
        return body.exact_volume
    if len(nonzero) > 1:
        return None
    y = nonzero[0]
    if isinstance(body, Ball):
        if body.dim == 2:
            return covariogram_disc_exact(body.radius, y)
        return _ball_lens(body.dim, body.radius, float(np.linalg.norm(y)))
    if isinstance(body, Ellipsoid):
        a = body.semi_axes
        return float(np.prod(a)) * _ball_lens(body.dim, 1.0, float(np.linalg.norm(y / a)))
    return None


def covariogram(body: ConvexBody, q, samples: int = DEFAULT_MC_SAMPLES, seed=0) -> float:
    g = covariogram_exact(body, q)
    if g is None:
        g = covariogram_mc(body, q, samples, seed)[0]
    return g


@dataclass(frozen=True)
class DirectionalProfile:
    """Samples of r -> g_W(r u, 0, ..., 0) near zero and derived quantities."""

    direction: np.ndarray
    r: np.ndarray
    g: np.ndarray
    derivative: float
    lipschitz: float
    exact: bool


def default_steps(body: ConvexBody, count: int = DEFAULT_STEPS) -> np.ndarray:
    r0 = 0.05 * body.inradius
    return r0 * 0.5 ** np.arange(count)


def _check_steps(steps) -> np.ndarray:
    r = np.asarray(steps, dtype=np.float64).ravel()
    if len(r) < 2 or np.any(r <= 0) or np.any(np.diff(r) >= 0):
        raise ValueError("steps must be at least two strictly decreasing positive numbers")
    return r


def _unit(u, dim: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (dim,):
        raise ValueError(f"direction must have dimension {dim}")
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    return u


def directional_profile(
    body: ConvexBody,
    u,
    steps=None,
    *,
    exact: bool | None = None,
    samples: int = DEFAULT_MC_SAMPLES,
    seed=0,
) -> DirectionalProfile:
    """Evaluate g along r*u at the step schedule and extrapolate the slope at 0+.

    The difference quotients (g(r) - Vol)/r are fitted by a line in r and the
    intercept is returned (linear Richardson extrapolation).  On the Monte
    Carlo path all steps reuse one sample (common random numbers).
    """
    m = body.dim
    u = _unit(u, m)
    r = default_steps(body) if steps is None else _check_steps(steps)
    zeros = np.zeros((m - 2, m))
    if exact is None:
        exact = covariogram_exact(body, np.vstack([u * r[0], zeros])) is not None
    vol = body_volume(body)
    if exact:
        vals = [covariogram_exact(body, np.vstack([u * ri, zeros])) for ri in r]
        if any(v is None for v in vals):
            raise ValueError(f"no closed-form covariogram for {body.kind}")
        g = np.array(vals, dtype=np.float64)
    else:
        x = body.sample_array(samples, make_rng(seed))
        g = np.array([vol * body.contains(x - ri * u).mean() for ri in r])
    quotients = (g - vol) / r
    slope, intercept = np.polyfit(r, quotients, 1)
    rr = np.concatenate([[0.0], r[::-1]])
    gg = np.concatenate([[vol], g[::-1]])
    lip = float(np.max(np.abs(np.diff(gg) / np.diff(rr))))
    return DirectionalProfile(u, r, g, float(intercept), lip, bool(exact))


def right_derivative_at_zero(body: ConvexBody, u, steps=None, **kwargs) -> float:
    """Estimate of (g_W^u)'(0+)."""
    return directional_profile(body, u, steps, **kwargs).derivative


def directional_variation(body: ConvexBody, u, steps=None, **kwargs) -> float:
    """V_u(W) = -2 (g_W^u)'(0+)."""
    return -2.0 * right_derivative_at_zero(body, u, steps, **kwargs)


def sphere_directions(m: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic directions on S^{M-1} with equal quadrature weights."""
    if count < 1:
        raise ValueError("need at least one direction")
    if m == 2:
        th = 2 * np.pi * np.arange(count) / count
        u = np.column_stack([np.cos(th), np.sin(th)])
    elif m == 3:
        # Fibonacci sphere
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        phi = np.pi * (3.0 - math.sqrt(5.0)) * i
        s = np.sqrt(1.0 - z * z)
        u = np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    else:
        from scipy.stats import norm, qmc

        pts = qmc.Halton(d=m, scramble=False).random(count + 1)[1:]
        g = norm.ppf(pts)
        u = g / np.linalg.norm(g, axis=1, keepdims=True)
    w = np.full(count, unit_sphere_measure(m) / count)
    return u, w


def default_direction_count(m: int) -> int:
    return 256 if m == 2 else 512


@dataclass(frozen=True)
class PerimeterEstimate:
    perimeter: float
    directions: np.ndarray
    weights: np.ndarray
    profiles: list


def perimeter_profile(body: ConvexBody, directions=None, steps=None, **kwargs) -> PerimeterEstimate:
    m = body.dim
    if directions is None:
        directions = default_direction_count(m)
    if np.isscalar(directions):
        u, w = sphere_directions(m, int(directions))
    else:
        u = np.asarray(directions, dtype=np.float64).reshape(-1, m)
        u = u / np.linalg.norm(u, axis=1, keepdims=True)
        w = np.full(len(u), unit_sphere_measure(m) / len(u))
    profiles = [directional_profile(body, ui, steps, **kwargs) for ui in u]
    d = np.array([p.derivative for p in profiles])
    per = -float(np.dot(w, d)) / unit_ball_volume(m - 1)
    return PerimeterEstimate(per, u, w, profiles)


def perimeter_via_covariogram(body: ConvexBody, directions=None, steps=None, **kwargs) -> float:
    """Per(W) = -(1/kappa_{M-1}) * integral over the sphere of (g_W^u)'(0+)."""
    return perimeter_profile(body, directions, steps, **kwargs).perimeter
