"""Reward-weighted forward-process policy loss on plain velocity vectors.

The loss contrasts two implicit policies built by extrapolating between the
old and current velocity predictors, weighted by the normalized reward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PolicyTriple:
    v_theta: np.ndarray
    v_theta_old: np.ndarray
    v_target: np.ndarray
    beta: float = 0.1
    r_tilde: float = 1.0

    def __post_init__(self):
        for name in ("v_theta", "v_theta_old", "v_target"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=np.float64)))
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0.0 <= self.r_tilde <= 1.0:
            raise ValueError(f"r_tilde must lie in [0, 1], got {self.r_tilde}")
        if not self.v_theta.shape == self.v_theta_old.shape == self.v_target.shape:
            raise ValueError("velocity vectors must share a shape")


def interpolate_policies(t: PolicyTriple) -> tuple[np.ndarray, np.ndarray]:
    """(v_plus, v_minus) = ((1-b) v_old + b v, (1+b) v_old - b v).

    Computed as v_old +/- b (v - v_old) so both share one rounded step and
    stay mirror images about v_old.
    """
    step = t.beta * (t.v_theta - t.v_theta_old)
    return t.v_theta_old + step, t.v_theta_old - step


def policy_loss(t: PolicyTriple) -> float:
    v_plus, v_minus = interpolate_policies(t)
    pos = float(np.sum((v_plus - t.v_target) ** 2))
    neg = float(np.sum((v_minus - t.v_target) ** 2))
    return t.r_tilde * pos + (1.0 - t.r_tilde) * neg


def loss_gradient(t: PolicyTriple) -> np.ndarray:
    """Gradient of :func:`policy_loss` with respect to ``v_theta``."""
    v_plus, v_minus = interpolate_policies(t)
    return 2.0 * t.beta * (t.r_tilde * (v_plus - t.v_target) - (1.0 - t.r_tilde) * (v_minus - t.v_target))
