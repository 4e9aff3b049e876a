"""Variables, noise models and the factor types of the PPP graph."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from ..errors import InvalidArgumentError
from ..gnss_models import CLOCK, POSITION, STATE_DIM, TROP, IfObservation, mapping_function

EPOCH = "x"
AMBIGUITY = "b"


_DIMS = {EPOCH: STATE_DIM, AMBIGUITY: 1}


class VariableKey(NamedTuple):
    kind: str
    index: object

    def __str__(self) -> str:
        return f"{self.kind}{self.index}"

    @property
    def dim(self) -> int:
        return _DIMS.get(self.kind, 1)

    def sort_key(self):
        if self.kind == EPOCH:
            return (0, self.index, "", 0)
        idx = self.index
        if isinstance(idx, tuple):
            return (1, 0, idx[0], idx[1])
        return (1, 0, str(idx), 0)


def X(k: int) -> VariableKey:
    return VariableKey(EPOCH, k)


def B(arc) -> VariableKey:
    return VariableKey(AMBIGUITY, arc)


class NoiseModel:
    """Gaussian noise with covariance ``Sigma``; whitening multiplies by ``Sigma^{-1/2}``.

    Accepts a scalar variance, a vector of variances or a full covariance.
    """

    __slots__ = ("dim", "sqrt_info", "diagonal")

    def __init__(self, covariance):
        cov = np.atleast_1d(np.asarray(covariance, dtype=float))
        if cov.ndim == 1:
            if not np.all(np.isfinite(cov)) or np.any(cov <= 0):
                raise InvalidArgumentError(f"noise variances must be positive and finite, got {cov}")
            self.dim = cov.size
            self.diagonal = True
            self.sqrt_info = 1.0 / np.sqrt(cov)
        else:
            if cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T, rtol=1e-12, atol=0.0):
                raise InvalidArgumentError("covariance must be square and symmetric")
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError as exc:
                raise InvalidArgumentError("covariance is not positive definite") from exc
            self.dim = cov.shape[0]
            self.diagonal = False
            # Sigma = L L^T, whitening matrix W = L^{-1}
            self.sqrt_info = np.linalg.solve(chol, np.eye(self.dim))

    @classmethod
    def sigmas(cls, sigmas) -> "NoiseModel":
        s = np.atleast_1d(np.asarray(sigmas, dtype=float))
        return cls(s * s)

    def whiten(self, v):
        if self.diagonal:
            return (self.sqrt_info * v.T).T if np.ndim(v) > 1 else self.sqrt_info * v
        return self.sqrt_info @ v

    def covariance(self) -> np.ndarray:
        if self.diagonal:
            return np.diag(1.0 / self.sqrt_info**2)
        w_inv = np.linalg.inv(self.sqrt_info)
        return w_inv @ w_inv.T


class GaussianFactor:
    """Linear whitened factor ``||A [x_k1; x_k2; ...] - b||^2`` over ``keys``."""

    __slots__ = ("keys", "A", "b", "dims")

    def __init__(self, keys, A: np.ndarray, b: np.ndarray, dims=None):
        self.keys = tuple(keys)
        self.A = A
        self.b = b
        self.dims = tuple(k.dim for k in self.keys) if dims is None else dims

    @property
    def rows(self) -> int:
        return self.b.shape[0]

    def error(self, delta: dict) -> np.ndarray:
        x = np.concatenate([np.atleast_1d(delta[k]) for k in self.keys]) if self.keys else np.zeros(0)
        return self.A @ x - self.b


class Factor:
    """Nonlinear factor with whitened error ``W (h(x) - z)``."""

    kind = "factor"
    keys: tuple
    noise: NoiseModel

    @property
    def dim(self) -> int:
        return self.noise.dim

    def unwhitened_error(self, values) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, values) -> np.ndarray:
        """Stacked Jacobian of ``h`` over the concatenated key blocks."""
        raise NotImplementedError

    def whitened_error(self, values) -> np.ndarray:
        return self.noise.whiten(self.unwhitened_error(values))

    def cost(self, values) -> float:
        e = self.whitened_error(values)
        return float(e @ e)

    def linearize(self, values) -> GaussianFactor:
        A = self.noise.whiten(self.jacobian(values))
        b = -self.whitened_error(values)
        return GaussianFactor(self.keys, A, b)

    @property
    def is_linear(self) -> bool:
        return False


class PriorFactor(Factor):
    kind = "prior"

    def __init__(self, key: VariableKey, mean, covariance):
        self.keys = (key,)
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        self.noise = covariance if isinstance(covariance, NoiseModel) else NoiseModel(covariance)
        if self.noise.dim != key.dim or self.mean.size != key.dim:
            raise InvalidArgumentError(f"prior on {key} has wrong dimension")

    def unwhitened_error(self, values):
        return np.atleast_1d(values[self.keys[0]]) - self.mean

    def jacobian(self, values):
        return np.eye(self.keys[0].dim)

    @property
    def is_linear(self) -> bool:
        return True


class BetweenFactor(Factor):
    """Motion model ``x_cur - x_prev - offset ~ N(0, diag(variances))``.

    ``offset`` (default zero) is a known displacement, e.g. the change of a
    reference trajectory. Components with infinite variance are left
    unconstrained (no row).
    """

    kind = "motion"

    def __init__(self, prev: VariableKey, cur: VariableKey, variances, offset=None):
        v = np.atleast_1d(np.asarray(variances, dtype=float))
        if v.size != prev.dim or prev.dim != cur.dim:
            raise InvalidArgumentError("between factor dimension mismatch")
        self.keys = (prev, cur)
        self.offset = np.zeros(v.size) if offset is None else np.atleast_1d(np.asarray(offset, dtype=float))
        if self.offset.size != v.size:
            raise InvalidArgumentError("between factor offset has wrong dimension")
        self.components = np.flatnonzero(np.isfinite(v))
        self.noise = NoiseModel(v[self.components])
        n = prev.dim
        sel = np.zeros((self.components.size, n))
        sel[np.arange(self.components.size), self.components] = 1.0
        self._H = np.hstack([-sel, sel])

    def unwhitened_error(self, values):
        d = np.atleast_1d(values[self.keys[1]]) - np.atleast_1d(values[self.keys[0]]) - self.offset
        return d[self.components]

    def jacobian(self, values):
        return self._H

    @property
    def is_linear(self) -> bool:
        return True


class LinearMeasurementFactor(Factor):
    """``z = sum_i H_i x_i + noise`` for fully linear fixtures."""

    kind = "linear"

    def __init__(self, keys: Sequence[VariableKey], blocks: Sequence[np.ndarray], z, covariance):
        self.keys = tuple(keys)
        self._H = np.hstack([np.atleast_2d(np.asarray(b, dtype=float)) for b in blocks])
        self.z = np.atleast_1d(np.asarray(z, dtype=float))
        self.noise = covariance if isinstance(covariance, NoiseModel) else NoiseModel(covariance)

    def unwhitened_error(self, values):
        x = np.concatenate([np.atleast_1d(values[k]) for k in self.keys])
        return self._H @ x - self.z

    def jacobian(self, values):
        return self._H

    @property
    def is_linear(self) -> bool:
        return True


_DIMS_X = (STATE_DIM,)
_DIMS_XB = (STATE_DIM, 1)


class _GnssFactor(Factor):
    def __init__(self, obs: IfObservation, sigma: float):
        if not sigma > 0:
            raise InvalidArgumentError("measurement sigma must be positive")
        self.obs = obs
        self.sigma = float(sigma)
        self.noise = NoiseModel(np.array([sigma * sigma]))
        self._m = mapping_function(obs.elevation)
        self._const = -obs.sat_clock_bias + obs.dry_zenith * self._m
        self._sat = tuple(float(v) for v in obs.sat_position)

    def _geometry(self, x) -> tuple:
        """``(predicted common part, line-of-sight row)`` at state ``x``."""
        x0, x1, x2, t, c = x.tolist()
        s0, s1, s2 = self._sat
        d0, d1, d2 = s0 - x0, s1 - x1, s2 - x2
        r = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
        return r + c + t * self._m + self._const, (-d0 / r, -d1 / r, -d2 / r)

    def _common(self, x: np.ndarray) -> float:
        return self._geometry(x)[0]

    def _state_row(self, x: np.ndarray) -> np.ndarray:
        los = self._geometry(x)[1]
        return np.array([los[0], los[1], los[2], self._m, 1.0])


class PseudorangeFactor(_GnssFactor):
    kind = "pseudorange"

    def __init__(self, key: VariableKey, obs: IfObservation, sigma: float):
        super().__init__(obs, sigma)
        self.keys = (key,)

    def unwhitened_error(self, values):
        return np.array([self._common(values[self.keys[0]]) - self.obs.pr_if])

    def jacobian(self, values):
        return self._state_row(values[self.keys[0]])[None, :]

    def linearize(self, values) -> GaussianFactor:
        pred, los = self._geometry(values[self.keys[0]])
        w = 1.0 / self.sigma
        A = np.array([[los[0] * w, los[1] * w, los[2] * w, self._m * w, w]])
        return GaussianFactor(self.keys, A, np.array([(self.obs.pr_if - pred) * w]), _DIMS_X)


class CarrierPhaseFactor(_GnssFactor):
    kind = "carrier_phase"

    def __init__(self, key: VariableKey, ambiguity_key: VariableKey, obs: IfObservation, sigma: float):
        super().__init__(obs, sigma)
        self.keys = (key, ambiguity_key)

    def unwhitened_error(self, values):
        amb = float(np.atleast_1d(values[self.keys[1]])[0])
        return np.array([self._common(values[self.keys[0]]) + amb - self.obs.cp_if])

    def jacobian(self, values):
        return np.append(self._state_row(values[self.keys[0]]), 1.0)[None, :]

    def linearize(self, values) -> GaussianFactor:
        pred, los = self._geometry(values[self.keys[0]])
        amb = float(values[self.keys[1]][0])
        w = 1.0 / self.sigma
        A = np.array([[los[0] * w, los[1] * w, los[2] * w, self._m * w, w, w]])
        return GaussianFactor(self.keys, A, np.array([(self.obs.cp_if - pred - amb) * w]), _DIMS_XB)
