"""Shared numeric oracles for the test suite.

Monte Carlo estimators are deliberately independent of the package's
quadrature code paths: uniform sampling over balls, nothing radial.
"""

import math

import numpy as np


def ball_volume(d: int, radius: float) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * radius**d


def sample_ball(rng, d: int, center, radius: float, n: int) -> np.ndarray:
    """Uniform points in the closed ball (normal-direction trick)."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    z = rng.normal(size=(n, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / d)
    return center + z * r[:, None]


def mc_ball(f, d: int, center, radius: float, n: int = 200_000, seed: int = 0):
    """Monte Carlo integral of f over a ball; returns (value, stderr)."""
    rng = np.random.default_rng(seed)
    pts = sample_ball(rng, d, center, radius, n)
    vals = np.asarray(f(pts), dtype=float)
    vol = ball_volume(d, radius)
    return vol * float(np.mean(vals)), vol * float(np.std(vals) / np.sqrt(n))


def mc_pair(kernel, d: int, f_center, f_radius, f_values,
            g_center, g_radius, g_values, n: int = 400_000, seed: int = 0):
    """Monte Carlo estimate of int int f(x) K(|x-y|) g(y) dx dy."""
    rng = np.random.default_rng(seed)
    x = sample_ball(rng, d, f_center, f_radius, n)
    y = sample_ball(rng, d, g_center, g_radius, n)
    dist = np.linalg.norm(x - y, axis=1)
    vals = np.asarray(f_values(x)) * np.asarray(kernel(dist)) * np.asarray(g_values(y))
    vol = ball_volume(d, f_radius) * ball_volume(d, g_radius)
    return vol * float(np.mean(vals)), vol * float(np.std(vals) / np.sqrt(n))


def sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def mc_pair_radial(kernel, d: int, f_center, f_radius, f_values,
                   g_center, g_radius, g_values,
                   n: int = 400_000, seed: int = 0):
    """Importance-sampled version of mc_pair for kernels singular at
    coinciding points: substitute y = x + s*omega so the estimator sees
    s^(d-1) K(s), which stays bounded for the integrable powers."""
    rng = np.random.default_rng(seed)
    x = sample_ball(rng, d, f_center, f_radius, n)
    smax = (np.linalg.norm(np.asarray(f_center, dtype=float)
                           - np.asarray(g_center, dtype=float))
            + f_radius + g_radius)
    s = smax * rng.random(n)
    omega = rng.normal(size=(n, d))
    omega /= np.linalg.norm(omega, axis=1, keepdims=True)
    y = x + s[:, None] * omega
    vals = (s ** (d - 1) * np.asarray(kernel(s))
            * np.asarray(f_values(x)) * np.asarray(g_values(y)))
    scale = ball_volume(d, f_radius) * smax * sphere_area(d)
    return scale * float(np.mean(vals)), scale * float(np.std(vals) / np.sqrt(n))


def mc_triple(k01, k02, k12, d: int, tests, n: int = 1_000_000, seed: int = 0):
    """Monte Carlo pairing of K01(|x0-x1|) K02(|x0-x2|) K12(|x1-x2|)
    against three ball-supported tests (pass lambda s: 1.0 + 0*s for an
    absent edge)."""
    rng = np.random.default_rng(seed)
    pts = [sample_ball(rng, d, t.center, t.radius, n) for t in tests]
    vals = np.ones(n)
    for t, p in zip(tests, pts):
        vals *= np.asarray(t(p), dtype=float)
    for (i, j), k in (((0, 1), k01), ((0, 2), k02), ((1, 2), k12)):
        vals *= np.asarray(k(np.linalg.norm(pts[i] - pts[j], axis=1)))
    vol = 1.0
    for t in tests:
        vol *= ball_volume(d, t.radius)
    return vol * float(np.mean(vals)), vol * float(np.std(vals) / np.sqrt(n))
