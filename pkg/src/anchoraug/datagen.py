"""Seeded synthetic datasets.

Every generator draws from ``numpy.random.default_rng(seed)`` (PCG64);
Gaussian noise uses numpy's ziggurat sampler. The same seed always gives
bitwise identical output.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError


@dataclass(frozen=True)
class CosineConfig:
    """``y = cos(angular_freq * x) + N(0, noise_sd^2)`` on ``[x_lo, x_hi]``.

    ``grid=True`` places ``x`` on an equidistant grid including both
    endpoints, otherwise ``x`` is drawn uniformly.
    """

    n: int = 20
    x_lo: float = -3 * np.pi
    x_hi: float = 3 * np.pi
    angular_freq: float = 1.0
    noise_sd: float = 0.1
    grid: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if not self.x_hi > self.x_lo:
            raise ConfigError(f"need x_hi > x_lo, got [{self.x_lo}, {self.x_hi}]")
        if not self.noise_sd >= 0:
            raise ConfigError(f"noise_sd must be >= 0, got {self.noise_sd}")


# the 30-point illustration: x ~ U[-3, 3], y = cos(pi x), no noise
ILLUSTRATION_CONFIG = CosineConfig(n=30, x_lo=-3.0, x_hi=3.0, angular_freq=np.pi,
                              noise_sd=0.0, grid=False, seed=0)


def gen_cosine(cfg: CosineConfig):
    rng = np.random.default_rng(cfg.seed)
    if cfg.grid:
        x = np.linspace(cfg.x_lo, cfg.x_hi, cfg.n)
    else:
        x = rng.uniform(cfg.x_lo, cfg.x_hi, size=cfg.n)
    y = np.cos(cfg.angular_freq * x)
    if cfg.noise_sd > 0:
        y = y + rng.normal(0.0, cfg.noise_sd, size=cfg.n)
    return x[:, None], y


def gen_linear_scm(n, d=10, anchor_shift_strength=1.0, noise_sd=1.0, seed=0, q=4):
    """Linear model whose predictors are shifted by a latent anchor group.

    Sample ``i`` belongs to group ``a_i`` drawn uniformly from ``q`` groups,
    ``x_i = z_i + anchor_shift_strength * mu_{a_i}`` with ``z_i ~ N(0, I_d)``
    and unit vectors ``mu_r``, and ``y_i = x_i^T b + N(0, noise_sd^2)``.
    ``b ~ N(0, I_d)``. Draw train and test rows in one call (and split) so
    they share ``b`` and the group shifts.

    Returns
    -------
    x : ndarray (n, d)
    y : ndarray (n,)
    coef : ndarray (d,)
    anchor_labels : ndarray (n,)
    """
    if n < 1 or d < 1 or q < 1:
        raise ConfigError(f"need n, d, q >= 1, got n={n}, d={d}, q={q}")
    if not noise_sd >= 0:
        raise ConfigError(f"noise_sd must be >= 0, got {noise_sd}")
    rng = np.random.default_rng(seed)
    b = rng.normal(size=d)
    mu = rng.normal(size=(q, d))
    mu /= np.linalg.norm(mu, axis=1, keepdims=True)
    labels = rng.integers(q, size=n)
    x = rng.normal(size=(n, d)) + anchor_shift_strength * mu[labels]
    y = x @ b
    if noise_sd > 0:
        y = y + rng.normal(0.0, noise_sd, size=n)
    return x, y, b, labels
