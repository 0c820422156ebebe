"""Constant-velocity Kalman filter over (centre x, centre y, aspect ratio, height)."""

from __future__ import annotations

import numpy as np

from .motdata import BoundingBox

_F = np.eye(8)
_F[:4, 4:] = np.eye(4)
_H = np.eye(4, 8)

# noise scaled by box height, as in common SORT-family trackers
STD_POSITION = 1.0 / 20
STD_VELOCITY = 1.0 / 160


def box_to_measurement(box: BoundingBox) -> np.ndarray:
    cx, cy = box.center
    return np.array([cx, cy, box.w / box.h, box.h])


def measurement_to_box(z: np.ndarray) -> BoundingBox:
    cx, cy, a, h = (float(v) for v in z[:4])
    h = max(h, 1e-6)
    return BoundingBox.from_center(cx, cy, max(a * h, 1e-6), h)


class KalmanBoxFilter:
    """Linear-Gaussian box state with constant-velocity transition."""

    def __init__(self, box: BoundingBox):
        z = box_to_measurement(box)
        self.mean = np.concatenate([z, np.zeros(4)])
        h = box.h
        std = np.array([
            2 * STD_POSITION * h, 2 * STD_POSITION * h, 1e-2, 2 * STD_POSITION * h,
            10 * STD_VELOCITY * h, 10 * STD_VELOCITY * h, 1e-5, 10 * STD_VELOCITY * h,
        ])
        self.cov = np.diag(std**2)
        self.last_innovation = np.zeros(4)

    def _process_noise(self) -> np.ndarray:
        h = self.mean[3]
        std = np.array([
            STD_POSITION * h, STD_POSITION * h, 1e-2, STD_POSITION * h,
            STD_VELOCITY * h, STD_VELOCITY * h, 1e-5, STD_VELOCITY * h,
        ])
        return np.diag(std**2)

    def predict(self) -> None:
        self.mean = _F @ self.mean
        self.cov = _F @ self.cov @ _F.T + self._process_noise()

    def update(self, box: BoundingBox) -> None:
        z = box_to_measurement(box)
        h = self.mean[3]
        r = np.diag(np.array([STD_POSITION * h, STD_POSITION * h, 1e-1, STD_POSITION * h]) ** 2)
        s = _H @ self.cov @ _H.T + r
        gain = np.linalg.solve(s, _H @ self.cov).T
        innovation = z - _H @ self.mean
        self.mean = self.mean + gain @ innovation
        self.cov = (np.eye(8) - gain @ _H) @ self.cov
        self.last_innovation = innovation

    def warp(self, affine: np.ndarray) -> None:
        """Apply a 2x3 camera-motion affine to the position and velocity."""
        a = affine[:, :2]
        self.mean[:2] = a @ self.mean[:2] + affine[:, 2]
        self.mean[4:6] = a @ self.mean[4:6]

    @property
    def box(self) -> BoundingBox:
        return measurement_to_box(self.mean)

    @property
    def velocity(self) -> tuple[float, float]:
        return (float(self.mean[4]), float(self.mean[5]))
