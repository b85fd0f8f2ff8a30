"""Closed-form reference solutions used as residual and monotonicity oracles.

Each profile depends on the last coordinate only (or is harmonic in 2-D) and
satisfies its semilinear equation exactly, so sampling it on a grid and
applying the discrete operator measures pure scheme error.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "saturating_front",
    "double_front_profile",
    "tanh_front",
    "interval_torsion",
    "strip_torsion",
    "ball_torsion",
    "cosh_mode",
]


def saturating_front(y):
    """u(y) = 1 - (y-1)^4 below 1, clamped to 1 above; -u'' = 12 sqrt(1-u).

    C^3 across the junction at y = 1; zero at y = 0; non-decreasing with an
    identically flat region above the junction.
    """
    a = np.asarray(y, dtype=float)
    out = np.where(a <= 1.0, 1.0 - (a - 1.0) ** 4, 1.0)
    return float(out) if np.isscalar(y) or a.ndim == 0 else out


def double_front_profile(y):
    """Two quartic fronts: up on [1,2], down to 0 at 3, up again to 1 at 4.

    u = ((1-(y-2)^4)_+)^4 on (1,3], ((1-(y-4)^4)_+)^4 on (3,4], 0 below 1 and
    1 above 4. Solves -u'' = f(u) for the sign-changing catalog source; the
    vertical derivative changes sign on (2,3).
    """
    scalar = np.asarray(y).ndim == 0
    a = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.zeros_like(a)
    m = (a > 1.0) & (a <= 3.0)
    out[m] = (1.0 - (a[m] - 2.0) ** 4) ** 4
    m = (a > 3.0) & (a <= 4.0)
    out[m] = (1.0 - (a[m] - 4.0) ** 4) ** 4
    out[a > 4.0] = 1.0
    return float(out[0]) if scalar else out


def tanh_front(y):
    """u(y) = tanh(y/sqrt(2)); solves -u'' = u - u^3 with u(0) = 0."""
    a = np.asarray(y, dtype=float)
    out = np.tanh(a / math.sqrt(2.0))
    return float(out) if np.isscalar(y) or a.ndim == 0 else out


def interval_torsion(y, a: float, b: float):
    """-u'' = 1 on (a,b) with zero ends: u = (y-a)(b-y)/2."""
    t = np.asarray(y, dtype=float)
    out = (t - a) * (b - t) / 2.0
    return float(out) if np.isscalar(y) or t.ndim == 0 else out


def strip_torsion(y, halfwidth: float):
    """-u'' = 1 on |y| < R: u = (R^2 - y^2)/2."""
    t = np.asarray(y, dtype=float)
    out = (halfwidth**2 - t**2) / 2.0
    return float(out) if np.isscalar(y) or t.ndim == 0 else out


def ball_torsion(points, radius: float):
    """-lap u = 1 on the N-ball: u = (R^2 - |x|^2)/(2N)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[1]
    out = (radius**2 - (pts**2).sum(axis=1)) / (2.0 * n)
    return float(out[0]) if np.asarray(points).ndim == 1 else out


def cosh_mode(m: int, points):
    """Harmonic w(x,y) = cosh(m x) sin(m y) on the width-pi strip.

    Evaluated through the half-strip fold sin(m y) = (-1)^(m+1) sin(m (pi-y))
    for y > pi/2, which makes the trace at y in {0, pi} exactly zero in
    floating point (both reduce to sin(0)).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    fold = y > math.pi / 2.0
    yr = np.where(fold, math.pi - y, y)
    sign = np.where(fold, (-1.0) ** (m + 1), 1.0)
    out = np.cosh(m * x) * sign * np.sin(m * yr)
    return float(out[0]) if np.asarray(points).ndim == 1 else out
