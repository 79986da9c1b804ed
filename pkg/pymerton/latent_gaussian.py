#!/usr/bin/env python
# -*- coding: utf-8 -*-

# Copyright 2026 The pymerton Authors

# All Rights Reserved.
#
#    Licensed under the Apache License, Version 2.0 (the "License"); you may
#    not use this file except in compliance with the License. You may obtain
#    a copy of the License at
#
#         http://www.apache.org/licenses/LICENSE-2.0
#
#    Unless required by applicable law or agreed to in writing, software
#    distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
#    WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
#    License for the specific language governing permissions and limitations
#    under the License.

"""
The correlated standard-normal macro factor y_1..y_T.

The factor has unit marginal variance and a stationary correlation
d_|s-t| between terms s and t given by one of three kernels: exponential
decay theta^i, power decay (i+1)^-gamma, or no correlation at all. Paths are
returned as 1-D numpy arrays (several paths as the rows of a 2-D array).
"""

import logging

import numpy as np
from scipy import linalg
from scipy import signal

import pymerton.exceptions as exc
from pymerton import utils

logger = logging.getLogger(__name__)

EXPONENTIAL = "exp"
POWER = "pow"
INDEPENDENT = "none"

# Added once to the diagonal when the first Cholesky attempt fails.
JITTER = 1e-10


class CorrelationKernel(object):
    """
    Base class for the temporal correlation kernels. Subclasses define
    `family`, `value()` and `derivative()`; `param` is the single decay
    parameter (None for the independent kernel).
    """
    family = None
    param_name = None

    def __init__(self, param=None):
        self.param = self._check(param)

    def _check(self, param):
        return param

    def with_param(self, param):
        """Returns a kernel of the same family with a new parameter."""
        return self.__class__(param)

    def value(self, lag):
        raise NotImplementedError

    def derivative(self, lag):
        """Derivative of value(lag) with respect to the kernel parameter."""
        raise NotImplementedError

    def to_dict(self):
        return {"family": self.family, "param": self.param}

    def __eq__(self, other):
        return (isinstance(other, CorrelationKernel)
                and self.family == other.family
                and self.param == other.param)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash((self.family, self.param))

    def __repr__(self):
        if self.param_name is None:
            return "<%s>" % self.__class__.__name__
        return "<%s %s=%s>" % (self.__class__.__name__, self.param_name,
                self.param)


class ExponentialKernel(CorrelationKernel):
    """d_i = theta ** i, with 0 <= theta < 1."""
    family = EXPONENTIAL
    param_name = "theta"

    def _check(self, param):
        theta = float(param)
        if not 0.0 <= theta < 1.0:
            raise exc.InvalidParameter("The exponential kernel requires "
                    "0 <= theta < 1; got %r." % param)
        return theta

    def value(self, lag):
        return np.power(self.param, np.asarray(lag, dtype=float))

    def derivative(self, lag):
        lag = np.asarray(lag, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            deriv = lag * np.power(self.param, lag - 1)
        return np.where(lag > 0, deriv, 0.0)


class PowerKernel(CorrelationKernel):
    """d_i = (i + 1) ** -gamma, with gamma >= 0."""
    family = POWER
    param_name = "gamma"

    def _check(self, param):
        gamma = float(param)
        if not (np.isfinite(gamma) and gamma >= 0):
            raise exc.InvalidParameter("The power kernel requires gamma >= 0; "
                    "got %r." % param)
        return gamma

    def value(self, lag):
        return np.power(np.asarray(lag, dtype=float) + 1.0, -self.param)

    def derivative(self, lag):
        base = np.asarray(lag, dtype=float) + 1.0
        return -np.log(base) * np.power(base, -self.param)


class IndependentKernel(CorrelationKernel):
    """No temporal correlation: d_0 = 1 and d_i = 0 otherwise."""
    family = INDEPENDENT

    def _check(self, param):
        return None

    def value(self, lag):
        return (np.asarray(lag) == 0).astype(float)

    def derivative(self, lag):
        return np.zeros(np.shape(lag))


_kernel_classes = {
        EXPONENTIAL: ExponentialKernel,
        POWER: PowerKernel,
        INDEPENDENT: IndependentKernel,
        }


def kernel_from_name(family, param=None):
    """
    Returns the kernel for `family` ("exp", "pow" or "none"). The longer
    names "exponential", "power" and "independent" are accepted too.
    """
    name = {"exponential": EXPONENTIAL, "power": POWER,
            "independent": INDEPENDENT}.get(str(family).lower(),
            str(family).lower())
    try:
        cls = _kernel_classes[name]
    except KeyError:
        raise exc.InvalidParameter("Unknown kernel family '%s'; expected one "
                "of %s." % (family, ", ".join(sorted(_kernel_classes))))
    return cls(param)


def kernel_value(kernel, lag):
    """
    Returns d_lag for the kernel. Works elementwise when `lag` is an array.
    """
    if np.any(np.asarray(lag) < 0):
        raise exc.InvalidParameter("Lags must be non-negative.")
    val = kernel.value(lag)
    if np.ndim(val) == 0:
        return float(val)
    return val


def build_correlation_matrix(kernel, T):
    """
    Returns the T x T symmetric Toeplitz matrix with entries d_|s-t|.
    """
    T = int(T)
    if T < 1:
        raise exc.InvalidParameter("T must be at least 1; got %s." % T)
    return linalg.toeplitz(kernel_value(kernel, np.arange(T)))


def cholesky_factor(kernel, T, sigma=None):
    """
    Returns the lower Cholesky factor of the correlation matrix. If the
    factorization fails, JITTER is added to the diagonal and it is tried
    once more; a second failure raises NotPositiveDefinite.
    """
    if sigma is None:
        sigma = build_correlation_matrix(kernel, T)
    try:
        return linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError:
        logger.debug("Cholesky failed for %r at T=%s; retrying with jitter.",
                kernel, T)
    try:
        return linalg.cholesky(sigma + JITTER * np.eye(len(sigma)),
                lower=True)
    except linalg.LinAlgError:
        raise exc.NotPositiveDefinite("The correlation matrix of %r is not "
                "positive definite at T=%s." % (kernel, T))


def sample_path_ar1(theta, T, rng, size=None):
    """
    Draws y_1 ~ N(0, 1) and y_{t+1} = theta * y_t + sqrt(1 - theta^2) *
    xi_{t+1}. With `size`, returns `size` independent paths as rows.
    """
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise exc.InvalidParameter("theta must be in [0, 1]; got %r." % theta)
    T = int(T)
    if T < 1:
        raise exc.InvalidParameter("T must be at least 1; got %s." % T)
    rng = utils.make_rng(rng)
    rows = 1 if size is None else int(size)
    xi = rng.standard_normal((rows, T))
    scale = np.sqrt(1.0 - theta ** 2)
    paths = np.empty((rows, T))
    paths[:, 0] = xi[:, 0]
    if T > 1:
        zi = theta * xi[:, :1]
        paths[:, 1:], _ = signal.lfilter([scale], [1.0, -theta], xi[:, 1:],
                axis=1, zi=zi)
    return paths[0] if size is None else paths


def sample_path_general(kernel, T, rng):
    """
    Draws one path from N_T(0, Sigma) as L @ z, where L is the lower
    Cholesky factor of Sigma and z is i.i.d. standard normal.
    """
    return sample_paths(kernel, T, rng, size=None, method="cholesky")


def sample_paths(kernel, T, rng, size=None, method="auto"):
    """
    Draws `size` paths (rows) for any kernel. With method="recursion" the
    exponential and independent kernels are sampled by the O(T) AR(1)
    recursion; the power kernel always uses the Cholesky factor. "auto"
    picks the recursion whenever it applies.
    """
    rng = utils.make_rng(rng)
    if method not in ("auto", "cholesky", "recursion"):
        raise exc.InvalidParameter("Unknown sampling method '%s'." % method)
    if (method != "cholesky"
            and kernel.family in (EXPONENTIAL, INDEPENDENT)):
        theta = kernel.param if kernel.family == EXPONENTIAL else 0.0
        return sample_path_ar1(theta, T, rng, size=size)
    lower = cholesky_factor(kernel, T)
    rows = 1 if size is None else int(size)
    z = rng.standard_normal((rows, int(T)))
    paths = z @ lower.T
    return paths[0] if size is None else paths


def conditional_forecast(kernel, observed, horizon=1):
    """
    Returns the mean and variance of y_{t+h} given y_1..y_t = `observed`,
    from the Schur complement of the joint correlation matrix.
    """
    observed = np.asarray(observed, dtype=float)
    t = observed.size
    horizon = int(horizon)
    if t < 1:
        raise exc.InvalidParameter("At least one observation is required.")
    if horizon < 1:
        raise exc.InvalidParameter("The horizon must be at least 1; got %s."
                % horizon)
    lower = cholesky_factor(kernel, t)
    # Correlations between y_{t+h} and y_1..y_t
    cross = kernel_value(kernel, t + horizon - 1 - np.arange(t))
    cross = np.atleast_1d(cross)
    weights = linalg.cho_solve((lower, True), cross)
    mean = float(weights @ observed)
    variance = float(kernel_value(kernel, 0) - weights @ cross)
    # Rounding can leave a tiny negative value for near-unit theta.
    variance = max(variance, 1e-12)
    return mean, variance
