"""Unified-spherical-model fisheye camera: projection, back-projection, calibration.

Conventions: the camera frame is centered at the optical center with the
z-axis pointing straight down toward the floor, so every visible scene point
has z > 0.  World units are inches, image units are pixels.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateProjection, InvalidHeight, NoPreimage, SingularFit

# Forward rays with s_z + xi below this are outside the model's FOV.
DEGENERACY_EPS = 1e-9


@dataclass(frozen=True)
class CameraParams:
    """USM intrinsics (xi, fx, fy, cx, cy) plus camera mounting height."""

    xi: float
    fx: float
    fy: float
    cx: float
    cy: float
    mount_height_b: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal scales must be positive, got fx={self.fx}, fy={self.fy}")
        if self.xi < 0:
            raise ValueError(f"xi must be non-negative, got {self.xi}")
        if not self.mount_height_b > 0:
            raise ValueError(f"mount height must be positive, got {self.mount_height_b}")

    def as_vector(self) -> np.ndarray:
        """The 5 intrinsics as an array (mount height excluded)."""
        return np.array([self.xi, self.fx, self.fy, self.cx, self.cy], dtype=float)

    @classmethod
    def from_vector(cls, omega: np.ndarray, mount_height_b: float) -> "CameraParams":
        xi, fx, fy, cx, cy = (float(v) for v in omega)
        return cls(xi=xi, fx=fx, fy=fy, cx=cx, cy=cy, mount_height_b=mount_height_b)

    def to_dict(self) -> dict:
        return {
            "xi": self.xi,
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "mount_height_in": self.mount_height_b,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraParams":
        return cls(
            xi=float(d["xi"]),
            fx=float(d["fx"]),
            fy=float(d["fy"]),
            cx=float(d["cx"]),
            cy=float(d["cy"]),
            mount_height_b=float(d["mount_height_in"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "CameraParams":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class WorldPoint:
    """3D camera-frame point in inches, z pointing down toward the floor."""

    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class PixelPoint:
    """Continuous 2D image coordinates in pixels."""

    u: float
    v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v], dtype=float)


def project_points(points: np.ndarray, params: CameraParams) -> np.ndarray:
    """Project an (..., 3) array of camera-frame points to (..., 2) pixels.

    Raises DegenerateProjection if any point falls outside the model's FOV
    (s_z + xi <= eps after normalization onto the unit sphere).
    """
    p = np.asarray(points, dtype=float)
    norm = np.linalg.norm(p, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise DegenerateProjection("cannot project the optical center")
    s = p / norm
    denom = s[..., 2] + params.xi
    if np.any(denom <= DEGENERACY_EPS):
        raise DegenerateProjection("point behind the model's projection horizon")
    u = params.fx * s[..., 0] / denom + params.cx
    v = params.fy * s[..., 1] / denom + params.cy
    return np.stack([u, v], axis=-1)


def backproject_points(pixels: np.ndarray, p_z, params: CameraParams) -> np.ndarray:
    """Invert the projection for (..., 2) pixels with known z-coordinate(s).

    ``p_z`` may be a scalar or an array broadcastable against the leading
    pixel dimensions.  Raises NoPreimage when a pixel corresponds to no ray
    with positive z at the given xi.
    """
    px = np.asarray(pixels, dtype=float)
    p_z = np.asarray(p_z, dtype=float)
    if np.any(p_z <= 0):
        raise ValueError("p_z must be positive")
    mx = (px[..., 0] - params.cx) / params.fx
    my = (px[..., 1] - params.cy) / params.fy
    r2 = mx * mx + my * my
    disc = 1.0 + (1.0 - params.xi**2) * r2
    if np.any(disc < 0):
        raise NoPreimage("pixel outside the model's image of the sphere")
    eta = (params.xi + np.sqrt(disc)) / (r2 + 1.0)
    sz = eta - params.xi
    if np.any(sz <= 0):
        raise NoPreimage("pixel maps to a ray with non-positive z")
    scale = p_z / sz
    return np.stack([eta * mx * scale, eta * my * scale, p_z * np.ones_like(sz)], axis=-1)


def project(p: WorldPoint, params: CameraParams) -> PixelPoint:
    """Project one 3D point to the image."""
    uv = project_points(p.as_array(), params)
    return PixelPoint(u=float(uv[0]), v=float(uv[1]))


def inverse_project(x: PixelPoint, p_z: float, params: CameraParams) -> WorldPoint:
    """Recover the unique 3D point with the given z that projects to ``x``."""
    xyz = backproject_points(x.as_array(), p_z, params)
    return WorldPoint(x=float(xyz[0]), y=float(xyz[1]), z=float(xyz[2]))


def height_to_pz(params: CameraParams, person_height: float) -> float:
    """z-coordinate of a standing person's mid-height point: B - H/2."""
    b = params.mount_height_b
    if not (0 < person_height < 2 * b):
        raise InvalidHeight(
            f"person height {person_height} outside (0, {2 * b}) for mount height {b}"
        )
    return b - person_height / 2.0


# --- calibration -----------------------------------------------------------

@dataclass(frozen=True)
class FitReport:
    rmse_px: float
    iterations: int
    converged: bool


#: relative step for the central-difference Jacobian
_JAC_STEP = 1e-6
_MAX_ITERATIONS = 200
_REL_COST_TOL = 1e-12


def _residuals(omega: np.ndarray, world: np.ndarray, pixels: np.ndarray,
               mount_height_b: float) -> np.ndarray:
    params = CameraParams.from_vector(omega, mount_height_b)
    return (project_points(world, params) - pixels).ravel()


def _numeric_jacobian(omega: np.ndarray, world: np.ndarray, pixels: np.ndarray,
                      mount_height_b: float) -> np.ndarray:
    n_res = 2 * len(world)
    jac = np.empty((n_res, len(omega)))
    for k in range(len(omega)):
        h = _JAC_STEP * max(abs(omega[k]), 1.0)
        lo, hi = omega.copy(), omega.copy()
        lo[k] -= h
        hi[k] += h
        jac[:, k] = (
            _residuals(hi, world, pixels, mount_height_b)
            - _residuals(lo, world, pixels, mount_height_b)
        ) / (2 * h)
    return jac


def fit_params(
    correspondences: Sequence[tuple[WorldPoint, PixelPoint]],
    initial: CameraParams,
) -> tuple[CameraParams, FitReport]:
    """Fit the five USM intrinsics by damped (Levenberg-Marquardt) least squares.

    Minimizes the sum of squared pixel reprojection errors over the given
    3D-to-2D correspondences, starting from ``initial``.  The mount height is
    carried through unchanged.  Returns the fitted parameters and a report;
    if the iteration cap is reached the best-so-far solution is returned with
    ``converged=False``.
    """
    if len(correspondences) < 5:
        raise SingularFit(
            f"need at least 5 correspondences for 5 parameters, got {len(correspondences)}"
        )
    world = np.array([c[0].as_array() for c in correspondences])
    pixels = np.array([c[1].as_array() for c in correspondences])
    b = initial.mount_height_b

    omega = initial.as_vector()
    res = _residuals(omega, world, pixels, b)
    cost = float(res @ res)
    lam = 1e-3
    converged = False
    iterations = 0

    for iterations in range(1, _MAX_ITERATIONS + 1):
        jac = _numeric_jacobian(omega, world, pixels, b)
        jtj = jac.T @ jac
        jtr = jac.T @ res
        diag = np.diag(jtj).copy()
        if np.any(diag <= 0) or not np.all(np.isfinite(jtj)):
            raise SingularFit("rank-deficient Jacobian: degenerate geometry")

        improved = False
        for _ in range(30):
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -jtr)
            except np.linalg.LinAlgError as exc:
                raise SingularFit("singular normal equations") from exc
            trial = omega + step
            if trial[1] <= 0 or trial[2] <= 0 or trial[0] < 0:
                lam *= 10.0
                continue
            trial_res = _residuals(trial, world, pixels, b)
            trial_cost = float(trial_res @ trial_res)
            if np.isfinite(trial_cost) and trial_cost < cost:
                rel_drop = (cost - trial_cost) / max(cost, 1e-300)
                omega, res, cost = trial, trial_res, trial_cost
                lam = max(lam * 0.3, 1e-12)
                improved = True
                if rel_drop < _REL_COST_TOL:
                    converged = True
                break
            lam *= 10.0
        if converged or not improved:
            converged = converged or not improved
            break

    rmse = math.sqrt(cost / (2 * len(world)))  # per residual coordinate
    fitted = CameraParams.from_vector(omega, b)
    return fitted, FitReport(rmse_px=rmse, iterations=iterations, converged=converged)


# --- correspondence file ---------------------------------------------------

CORRESPONDENCE_HEADER = ["x_in", "y_in", "z_in", "u_px", "v_px"]


def load_correspondences(path: str | Path) -> list[tuple[WorldPoint, PixelPoint]]:
    """Read calibration correspondences from CSV with header x_in,y_in,z_in,u_px,v_px."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CORRESPONDENCE_HEADER:
            from .errors import ParseError

            raise ParseError(
                f"{path}: expected header {','.join(CORRESPONDENCE_HEADER)}, got {header}"
            )
        for row in reader:
            x, y, z, u, v = (float(f) for f in row)
            out.append((WorldPoint(x, y, z), PixelPoint(u, v)))
    return out


def save_correspondences(
    path: str | Path, correspondences: Sequence[tuple[WorldPoint, PixelPoint]]
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CORRESPONDENCE_HEADER)
        for wp, px in correspondences:
            writer.writerow([repr(float(wp.x)), repr(float(wp.y)), repr(float(wp.z)),
                             repr(float(px.u)), repr(float(px.v))])
