"""Mollified velocity fields, their space-time BV norms, RK4 flows,
near-incompressibility estimates, and flow-convergence tables.

Everything here is floating point by design; grids, steps and kernel
parameters are explicit so runs are reproducible.  The mollifier is the
compactly supported C2 bump (1 - r^2)^3 on [-1, 1], tensorized over (t, x1,
x2) and normalized by its exact integral 32/35 per axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .exactnum import as_rational
from .field import DensityField


def bump(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = (1.0 - r[inside] ** 2) ** 3
    return out


def bump_deriv(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = -6.0 * r[inside] * (1.0 - r[inside] ** 2) ** 2
    return out


BUMP_MASS = 32.0 / 35.0  # integral of (1-r^2)^3 over [-1, 1]


def field_velocity_sampler(field: DensityField, velocity_fn) -> Callable:
    """Vectorized (t, X(N,2)) -> velocities (N,2) for a patch field, skipping
    the horizon guard (mollification probes slightly outside it)."""
    patches = []
    for p in field.patches:
        rects = np.array([[float(r.lo[0]), float(r.lo[1]),
                           float(r.hi[0]), float(r.hi[1])] for r in p.support0])
        w = np.array([float(p.velocity[0]), float(p.velocity[1])])
        v = velocity_fn(p.value)
        patches.append((rects, w, np.array([float(v[0]), float(v[1])])))
    bg = velocity_fn(field.background)
    v_bg = np.array([float(bg[0]), float(bg[1])])

    def sample(t: float, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.tile(v_bg, (len(X), 1))
        for rects, w, v in patches:
            q = X - t * w
            inside = np.zeros(len(X), dtype=bool)
            for lo1, lo2, hi1, hi2 in rects:
                inside |= ((q[:, 0] >= lo1) & (q[:, 0] < hi1)
                           & (q[:, 1] >= lo2) & (q[:, 1] < hi2))
            out[inside] = v
        return out

    sample.sup_bound = float(max(
        [abs(v).max() for *_, v in patches] + [abs(v_bg).max()] or [0.0]))
    return sample


class MollifiedField:
    """Space-time convolution of a bounded velocity field with the tensor
    bump kernel at radius epsilon, evaluated by midpoint quadrature on an
    m**3 kernel grid."""

    def __init__(self, base: Callable, epsilon: float, quad_m: int = 7):
        self.base = base
        self.epsilon = float(epsilon)
        self.quad_m = int(quad_m)
        m = self.quad_m
        centers = (np.arange(m) + 0.5) / m * 2.0 - 1.0  # midpoints of [-1,1]
        wts = bump(centers)
        nodes = []
        weights = []
        for it, wt in zip(centers, wts):
            for i1, w1 in zip(centers, wts):
                for i2, w2 in zip(centers, wts):
                    nodes.append((it, i1, i2))
                    weights.append(wt * w1 * w2)
        self.nodes = np.array(nodes) * self.epsilon
        w = np.array(weights)
        self.weights = w / w.sum()  # exact unit mass on the grid
        self.sup_bound = getattr(base, "sup_bound", None)

    def __call__(self, t: float, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        acc = np.zeros_like(X)
        for (dt, d1, d2), w in zip(self.nodes, self.weights):
            acc += w * self.base(t - dt, X - np.array([d1, d2]))
        return acc

    def partials(self, t: float, X: np.ndarray):
        """(d/dt, d/dx1, d/dx2) of the mollified field by kernel-derivative
        quadrature; each is (N, 2)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        m = self.quad_m
        centers = (np.arange(m) + 0.5) / m * 2.0 - 1.0
        wv = bump(centers)
        wd = bump_deriv(centers)
        cell = (2.0 / m) ** 3
        norm = (bump(centers).sum() * (2.0 / m)) ** 3  # grid mass, ~ (32/35)^3
        outs = [np.zeros_like(X) for _ in range(3)]
        eps = self.epsilon
        for it, ct in enumerate(centers):
            for i1, c1 in enumerate(centers):
                for i2, c2 in enumerate(centers):
                    base_val = self.base(t - ct * eps,
                                         X - np.array([c1, c2]) * eps)
                    kv = (wd[it] * wv[i1] * wv[i2],
                          wv[it] * wd[i1] * wv[i2],
                          wv[it] * wv[i1] * wd[i2])
                    for j in range(3):
                        outs[j] += (kv[j] * cell / (norm * eps)) * base_val
        return outs


def mollify(base, epsilon: float, quad_m: int = 7) -> MollifiedField:
    return MollifiedField(base, epsilon, quad_m)


@dataclass
class BVEstimate:
    value: float
    refined_value: float
    resolved: bool

    @property
    def delta(self) -> float:
        return abs(self.value - self.refined_value)


def bv_norm(mf: MollifiedField, box, T: float, quad=(2, 64, 8)) -> BVEstimate:
    """Midpoint quadrature of |d_t f| + |d_x1 f| + |d_x2 f| over box x [0, T]
    (component-wise 1-norms), reported together with a once-refined value."""

    def run(mt, mx, my):
        (lo1, lo2), (hi1, hi2) = box
        ts = (np.arange(mt) + 0.5) / mt * T
        xs = lo1 + (np.arange(mx) + 0.5) / mx * (hi1 - lo1)
        ys = lo2 + (np.arange(my) + 0.5) / my * (hi2 - lo2)
        XX, YY = np.meshgrid(xs, ys, indexing="ij")
        pts = np.column_stack([XX.ravel(), YY.ravel()])
        total = 0.0
        cell = (T / mt) * ((hi1 - lo1) / mx) * ((hi2 - lo2) / my)
        for t in ts:
            dt, d1, d2 = mf.partials(float(t), pts)
            total += float(np.sum(np.abs(dt) + np.abs(d1) + np.abs(d2))) * cell
        return total

    mt, mx, my = quad
    coarse = run(mt, mx, my)
    fine = run(mt, 2 * mx, my)
    resolved = abs(fine - coarse) <= 0.02 * max(abs(fine), 1e-12)
    return BVEstimate(value=fine, refined_value=coarse, resolved=resolved)


@dataclass
class FlowEnsemble:
    start: np.ndarray      # (N, 2)
    end: np.ndarray        # (N, 2)
    T: float
    dt: float
    halved_error: float = 0.0


def integrate_flow(velocity: Callable, points, T: float, dt: float,
                   check_halving: bool = False) -> FlowEnsemble:
    """Classical RK4 for dx/dt = velocity(t, x), vectorized over points."""
    X0 = np.atleast_2d(np.asarray(points, dtype=float))

    def run(step):
        X = X0.copy()
        t = 0.0
        while t < T - 1e-13:
            h = min(step, T - t)
            k1 = velocity(t, X)
            k2 = velocity(t + h / 2, X + (h / 2) * k1)
            k3 = velocity(t + h / 2, X + (h / 2) * k2)
            k4 = velocity(t + h, X + h * k3)
            X = X + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        return X

    end = run(dt)
    err = 0.0
    if check_halving:
        end2 = run(dt / 2)
        err = float(np.max(np.linalg.norm(end - end2, axis=1)))
    return FlowEnsemble(start=X0, end=end, T=float(T), dt=float(dt),
                        halved_error=err)


@dataclass
class CompressibilityEstimate:
    min_ratio: float
    max_ratio: float
    halfwidth: float


def compressibility(velocity: Callable, box, t_samples, grid_m: int = 8,
                    fd_delta: float = 1e-4, dt: float = 1e-2) -> CompressibilityEstimate:
    """meas(flow_t(A)) / meas(A) for box A at each sampled t, via the
    change-of-variables quadrature: the mean over a midpoint grid of
    |det D flow_t| with the Jacobian from central differences of the flow.
    The halfwidth compares against a half-resolution grid."""

    def ratio(t, m):
        (lo1, lo2), (hi1, hi2) = box
        xs = lo1 + (np.arange(m) + 0.5) / m * (hi1 - lo1)
        ys = lo2 + (np.arange(m) + 0.5) / m * (hi2 - lo2)
        XX, YY = np.meshgrid(xs, ys, indexing="ij")
        pts = np.column_stack([XX.ravel(), YY.ravel()])
        offs = np.array([[fd_delta, 0], [-fd_delta, 0],
                         [0, fd_delta], [0, -fd_delta]])
        batch = np.concatenate([pts + o for o in offs])
        ends = integrate_flow(velocity, batch, t, dt).end
        n = len(pts)
        d1 = (ends[0:n] - ends[n:2 * n]) / (2 * fd_delta)
        d2 = (ends[2 * n:3 * n] - ends[3 * n:4 * n]) / (2 * fd_delta)
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        return float(np.mean(np.abs(det)))

    ratios = [ratio(float(t), grid_m) for t in t_samples]
    coarse = [ratio(float(t), max(2, grid_m // 2)) for t in t_samples]
    half = max(abs(a - b) for a, b in zip(ratios, coarse))
    return CompressibilityEstimate(min_ratio=min(ratios), max_ratio=max(ratios),
                                   halfwidth=half)


@dataclass
class ConvergenceRow:
    epsilon: float
    dt: float
    dist_prev: float | None
    dist_exact: float | None


def flow_convergence_table(base: Callable, epsilons: Sequence[float], points,
                           T: float, exact_end=None, quad_m: int = 7,
                           dt_rule=None) -> list:
    """Pairwise L1 distances between successive mollified flows on a fixed
    point set, plus the distance to an exact flow when one is supplied.
    Emits data only; no convergence assertion is made."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    sup = getattr(base, "sup_bound", None) or 1.0
    rows = []
    prev = None
    for eps in epsilons:
        dt = dt_rule(eps) if dt_rule else eps / (4.0 * max(sup, 0.25))
        mf = mollify(base, eps, quad_m)
        end = integrate_flow(mf, pts, T, dt).end
        d_prev = None if prev is None else float(
            np.mean(np.linalg.norm(end - prev, axis=1)))
        d_exact = None if exact_end is None else float(
            np.mean(np.linalg.norm(end - np.asarray(exact_end, float), axis=1)))
        rows.append(ConvergenceRow(epsilon=float(eps), dt=float(dt),
                                   dist_prev=d_prev, dist_exact=d_exact))
        prev = end
    return rows


def rotation_field(omega: float = 1.0) -> Callable:
    def sample(t, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return omega * np.column_stack([-X[:, 1], X[:, 0]])

    sample.sup_bound = None
    return sample


def linear_growth_field() -> Callable:
    def sample(t, X):
        return np.atleast_2d(np.asarray(X, dtype=float)).copy()

    sample.sup_bound = None
    return sample
