"""Position from per-RIS AoA estimates: LS line intersection, then ML refinement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fisher import DegenerateGeometryError, position_jacobian
from .geometry import AoaPair, RisDescriptor, as_vec3, local_aoa, wrap_difference

# iterates closer than this to a RIS reference point are rejected
SINGULARITY_RADIUS = 1e-3


@dataclass(frozen=True)
class PositionEstimate:
    position: np.ndarray
    method: str
    iterations: int = 0
    objective: float = float("nan")
    converged: bool = True


@dataclass(frozen=True, eq=False)
class LineBundle:
    anchors: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.anchors, dtype=float))
        d = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if a.shape != d.shape or a.shape[1] != 3:
            raise ValueError("anchors and directions must both be M x 3")
        if a.shape[0] < 2:
            raise ValueError("need at least two lines")
        n = np.linalg.norm(d, axis=1, keepdims=True)
        if np.any(n == 0):
            raise ValueError("direction vectors must be nonzero")
        object.__setattr__(self, "anchors", a)
        object.__setattr__(self, "directions", d / n)

    @classmethod
    def from_estimates(cls, estimates, ris_list) -> "LineBundle":
        anchors = [r.position for r in ris_list]
        dirs = [direction_vector(e.aoa if hasattr(e, "aoa") else e, r.orientation)
                for e, r in zip(estimates, ris_list)]
        return cls(np.array(anchors), np.array(dirs))


def direction_vector(aoa: AoaPair, orientation: float) -> np.ndarray:
    """Global unit vector pointing from the RIS toward an arrival at ``aoa``."""
    st = np.sin(aoa.elevation)
    az = aoa.azimuth + orientation
    return np.array([st * np.cos(az), st * np.sin(az), np.cos(aoa.elevation)])


def ls_intersect(bundle: LineBundle) -> PositionEstimate:
    """Point minimizing the summed squared distance to all lines."""
    A = np.zeros((3, 3))
    b = np.zeros(3)
    for p, v in zip(bundle.anchors, bundle.directions):
        B = np.eye(3) - np.outer(v, v)
        A += B
        b += B @ p
    if np.linalg.cond(A) > 1e12:
        raise np.linalg.LinAlgError("lines are (nearly) parallel: intersection is not unique")
    x = np.linalg.solve(A, b)
    D = sum((p - x) @ (np.eye(3) - np.outer(v, v)) @ (p - x)
            for p, v in zip(bundle.anchors, bundle.directions))
    return PositionEstimate(x, "ls", 0, float(D), True)


def _residuals(p, estimates, ris_list):
    """Angle residuals ``[d_elevation, wrapped d_azimuth]`` per RIS."""
    out = np.empty((len(ris_list), 2))
    for m, (est, ris) in enumerate(zip(estimates, ris_list)):
        model = local_aoa(ris, p)
        out[m, 0] = est.aoa.elevation - model.elevation
        out[m, 1] = wrap_difference(est.aoa.azimuth - model.azimuth)
    return out


def _weights(estimates):
    return [np.linalg.inv(np.asarray(e.covariance, dtype=float)) for e in estimates]


def ml_objective(p, estimates, ris_list, _weights_cache=None) -> float:
    """Sum of covariance-weighted squared angle residuals."""
    p = as_vec3(p)
    for ris in ris_list:
        if np.array_equal(p, ris.position):
            raise ValueError("position coincides with a RIS reference point")
    W = _weights_cache if _weights_cache is not None else _weights(estimates)
    e = _residuals(p, estimates, ris_list)
    return float(sum(em @ Wm @ em for em, Wm in zip(e, W)))


def _too_close(p, ris_list) -> bool:
    return any(np.linalg.norm(p - r.position) < SINGULARITY_RADIUS for r in ris_list)


def ml_refine(estimates, ris_list, init, max_iters: int = 100, tol: float = 1e-6,
              damping: float = 1e-3, bounds=None) -> PositionEstimate:
    """Levenberg-damped Gauss-Newton descent on the weighted angle residuals.

    Stops once a proposed step is shorter than ``tol`` meters or after
    ``max_iters`` iterations. Steps that raise the objective, land next to a RIS,
    hit an undefined azimuth or leave the optional ``(lower, upper)`` box are
    rejected and the damping is increased.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if len(estimates) != len(ris_list):
        raise ValueError("one estimate per RIS is required")
    x = as_vec3(init).copy()
    if bounds is not None:
        lo, hi = (np.asarray(b, dtype=float) for b in bounds)
        x = np.clip(x, lo, hi)
    W = _weights(estimates)
    # whitening factors: e^T W e = |C e|^2
    C = [np.linalg.cholesky(Wm).T for Wm in W]
    f = ml_objective(x, estimates, ris_list, W)
    if not np.isfinite(f):
        raise ValueError("objective is not finite at the initial point")
    lam = damping
    moves = 0
    converged = False
    for _ in range(max_iters):
        e = _residuals(x, estimates, ris_list)
        try:
            jac = [-Cm @ position_jacobian(x, ris).T for Cm, ris in zip(C, ris_list)]
        except DegenerateGeometryError:
            break
        Jw = np.vstack(jac)
        rw = np.concatenate([Cm @ em for Cm, em in zip(C, e)])
        H = Jw.T @ Jw
        g = Jw.T @ rw
        step = np.linalg.solve(H + lam * np.diag(np.maximum(np.diag(H), 1e-12)), -g)
        if np.linalg.norm(step) < tol:
            converged = True
            break
        cand = x + step
        ok = not _too_close(cand, ris_list)
        if ok and bounds is not None:
            ok = bool(np.all(cand >= lo) and np.all(cand <= hi))
        if ok:
            try:
                f_new = ml_objective(cand, estimates, ris_list, W)
            except ValueError:
                ok = False
        if ok and np.isfinite(f_new) and f_new <= f:
            x, f = cand, f_new
            moves += 1
            lam = max(lam / 10.0, 1e-12)
        else:
            lam *= 10.0
            if lam > 1e12:
                break
    return PositionEstimate(x, "ml", moves, f, converged)
