"""Constant-velocity Kalman filter over box center and size.

State layout is ``[xc, yc, w, h, vxc, vyc, vw, vh]``; measurements are
``[xc, yc, w, h]``. Noise standard deviations scale with the box height.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .geometry import BoundingBox

#: 95% quantile of the chi-square distribution with 4 degrees of freedom.
CHI2_GATE_4DOF = 9.4877

MIN_SIZE = 1e-3


class KalmanError(ArithmeticError):
    """Raised when an innovation covariance is not positive definite."""


@dataclass
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray

    def copy(self) -> "KalmanState":
        return KalmanState(self.mean.copy(), self.covariance.copy())

    def to_box(self) -> BoundingBox:
        xc, yc, w, h = self.mean[:4]
        return BoundingBox.from_center(float(xc), float(yc), max(float(w), 0.0), max(float(h), 0.0))

    def tlwh(self) -> np.ndarray:
        xc, yc, w, h = self.mean[:4]
        return np.array([xc - w / 2.0, yc - h / 2.0, w, h])


def box_to_measurement(box: BoundingBox) -> np.ndarray:
    return np.array([box.x + box.w / 2.0, box.y + box.h / 2.0, box.w, box.h], dtype=np.float64)


class KalmanFilter:
    """Linear Kalman filter with a one-frame constant-velocity motion model.

    Args:
        std_weight_position: position/size noise as a fraction of box height.
        std_weight_velocity: velocity noise as a fraction of box height.
    """

    ndim = 4

    def __init__(self, std_weight_position: float = 1.0 / 20, std_weight_velocity: float = 1.0 / 160):
        self.std_weight_position = std_weight_position
        self.std_weight_velocity = std_weight_velocity
        self._motion_mat = np.eye(2 * self.ndim)
        for i in range(self.ndim):
            self._motion_mat[i, self.ndim + i] = 1.0
        self._update_mat = np.eye(self.ndim, 2 * self.ndim)

    def initiate(self, measurement: BoundingBox) -> KalmanState:
        z = box_to_measurement(measurement)
        if not np.all(np.isfinite(z)):
            raise ValueError(f"non-finite measurement {measurement}")
        if z[2] <= 0 or z[3] <= 0:
            raise ValueError(f"initiate needs a positive-size box, got {measurement}")
        mean = np.r_[z, np.zeros(self.ndim)]
        h = z[3]
        std = np.r_[np.full(4, 2 * self.std_weight_position * h), np.full(4, 10 * self.std_weight_velocity * h)]
        return KalmanState(mean, np.diag(np.square(std)))

    def process_noise(self, height: float) -> np.ndarray:
        std = np.r_[np.full(4, self.std_weight_position * height), np.full(4, self.std_weight_velocity * height)]
        return np.diag(np.square(std))

    def measurement_noise(self, height: float) -> np.ndarray:
        return np.diag(np.square(np.full(4, self.std_weight_position * height)))

    def predict(self, state: KalmanState) -> KalmanState:
        F = self._motion_mat
        mean = F @ state.mean
        cov = F @ state.covariance @ F.T + self.process_noise(state.mean[3])
        return KalmanState(mean, cov)

    def project(self, state: KalmanState):
        """Measurement-space mean and covariance (measurement noise included)."""
        H = self._update_mat
        mean = H @ state.mean
        cov = H @ state.covariance @ H.T + self.measurement_noise(state.mean[3])
        return mean, cov

    def update(self, state: KalmanState, measurement: BoundingBox) -> KalmanState:
        H = self._update_mat
        proj_mean, proj_cov = self.project(state)
        try:
            chol = scipy.linalg.cho_factor(proj_cov, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise KalmanError(f"singular innovation covariance: {exc}") from exc
        pht = state.covariance @ H.T
        gain = scipy.linalg.cho_solve(chol, pht.T, check_finite=False).T
        innovation = box_to_measurement(measurement) - proj_mean
        mean = state.mean + gain @ innovation
        # Joseph form keeps the covariance PSD under rounding
        ikh = np.eye(2 * self.ndim) - gain @ H
        R = self.measurement_noise(state.mean[3])
        cov = ikh @ state.covariance @ ikh.T + gain @ R @ gain.T
        cov = 0.5 * (cov + cov.T)
        mean[2] = max(mean[2], MIN_SIZE)
        mean[3] = max(mean[3], MIN_SIZE)
        return KalmanState(mean, cov)

    def gating_distance(self, state: KalmanState, candidates) -> np.ndarray:
        """Squared Mahalanobis distance of each candidate box to the projected state."""
        proj_mean, proj_cov = self.project(state)
        z = np.array([box_to_measurement(b) for b in candidates], dtype=np.float64).reshape(-1, 4)
        if len(z) == 0:
            return np.zeros(0)
        try:
            chol = np.linalg.cholesky(proj_cov)
        except np.linalg.LinAlgError as exc:
            raise KalmanError(f"singular projected covariance: {exc}") from exc
        d = z - proj_mean
        sol = scipy.linalg.solve_triangular(chol, d.T, lower=True, check_finite=False)
        return np.sum(sol * sol, axis=0)
