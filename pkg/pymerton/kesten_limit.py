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
The two-group intensity process and its strong-correlation limit.

A fraction `a` of the obligors (group 1) follows the macro factor; the rest
(group 2) default at an idiosyncratic rate lambda1 * z with z uniform on
[0, 1]. When rho_A and theta both go to 1 with sqrt(1 - theta^2) /
sqrt(1 - rho_A) held at b, the intensity becomes the Kesten recursion

    lambda_{t+1} = a * exp(beta * b * xi_{t+1}) * lambda_t + (1 - a) * eta_t

whose stationary law has a power tail with exponent kappa solving
E[(a * exp(beta * b * xi))^kappa] = 1.
"""

import logging

import numpy as np
from scipy import special

import pymerton.exceptions as exc
from pymerton import latent_gaussian as lg
from pymerton import merton_core
from pymerton.resource import BaseResult
from pymerton import utils

logger = logging.getLogger(__name__)

DEFAULT_BURN_IN = 10000
MIN_BURN_IN = 1000


class MixedParams(BaseResult):
    """
    Parameters of the two-group process: the group-1 share `a`, the rates
    `lambda0` and `lambda1`, the factor loading `alpha`, the AR(1) decay
    `theta`, the logistic slope `beta` and the limit constant `b`.
    """
    def __init__(self, a, lambda0, lambda1, alpha, theta=0.0,
            beta=merton_core.DEFAULT_BETA, b=1.0):
        a = float(a)
        if not 0.0 <= a <= 1.0:
            raise exc.InvalidParameter("a must be in [0, 1]; got %r." % a)
        utils.check_positive("lambda0", lambda0)
        utils.check_positive("lambda1", lambda1)
        utils.check_positive("alpha", alpha, allow_zero=True)
        utils.check_positive("beta", beta)
        utils.check_positive("b", b)
        theta = float(theta)
        if not 0.0 <= theta < 1.0:
            raise exc.InvalidParameter("theta must be in [0, 1); got %r."
                    % theta)
        super(MixedParams, self).__init__(a=a, lambda0=float(lambda0),
                lambda1=float(lambda1), alpha=float(alpha), theta=theta,
                beta=float(beta), b=float(b))

    @staticmethod
    def limit_constant(theta, rho_A):
        """b = sqrt(1 - theta^2) / sqrt(1 - rho_A)."""
        return float(np.sqrt(1.0 - theta ** 2) / np.sqrt(1.0 - rho_A))

    @property
    def beta_b(self):
        return self.beta * self.b


class MixedSeries(BaseResult):
    _non_display = ["intensity", "counts", "y", "z"]


class HillPlot(BaseResult):
    """Hill estimates and standard errors over a range of k_top."""
    _non_display = ["estimates", "standard_errors"]

    def to_rows(self):
        return [{"k_top": int(k), "kappa": float(est), "se": float(se)}
                for k, est, se in zip(self.k_values, self.estimates,
                self.standard_errors)]


def mixed_intensity(y, z, mp):
    """
    lambda(y, z) = a * lambda0 * exp(alpha * y) + (1 - a) * lambda1 * z.
    """
    z = np.asarray(z, dtype=float)
    if np.any((z < 0) | (z > 1)):
        raise exc.InvalidParameter("z must lie in [0, 1].")
    val = (mp.a * mp.lambda0 * np.exp(mp.alpha * np.asarray(y, dtype=float))
            + (1.0 - mp.a) * mp.lambda1 * z)
    if np.ndim(val) == 0:
        return float(val)
    return val


def mixed_mean(mp):
    """
    The mean intensity a * lambda0 * e^(alpha^2 / 2) + (1 - a) * lambda1 / 2.
    """
    return float(mp.a * mp.lambda0 * np.exp(0.5 * mp.alpha ** 2)
            + 0.5 * (1.0 - mp.a) * mp.lambda1)


def simulate_mixed(mp, T, rng=None):
    """
    Simulates the two-group process for T years: y follows the AR(1)
    factor with decay theta, z is drawn uniform each year and the counts
    are Poisson with the mixed intensity.
    """
    rng = utils.make_rng(rng)
    path_rng, z_rng, count_rng = utils.spawn_rngs(rng, 3)
    y = lg.sample_path_ar1(mp.theta, T, path_rng)
    z = z_rng.uniform(size=int(T))
    lam = mixed_intensity(y, z, mp)
    return MixedSeries(params=mp, y=y, z=z, intensity=lam,
            counts=count_rng.poisson(lam))


def simulate_kesten(a, beta_b, T, rng=None, burn_in=DEFAULT_BURN_IN,
        scale=1.0, eta=None):
    """
    Runs the Kesten recursion for burn_in + T steps and returns the last T
    values. `scale` multiplies the uniform innovation eta; passing `eta`
    replaces the uniform draws with that constant. The chain starts at the
    mean of the innovation.
    """
    a = float(a)
    if not 0.0 < a < 1.0:
        raise exc.InvalidParameter("The Kesten recursion needs 0 < a < 1; "
                "got %r." % a)
    utils.check_positive("beta_b", beta_b, allow_zero=True)
    utils.check_positive("scale", scale)
    T = int(T)
    burn_in = int(burn_in)
    if T < 1:
        raise exc.InvalidParameter("T must be at least 1; got %s." % T)
    if burn_in < 0:
        raise exc.InvalidParameter("burn_in must be non-negative; got %s."
                % burn_in)
    if burn_in < MIN_BURN_IN:
        logger.warning("A burn-in of %s steps may leave the chain far from "
                "its stationary law.", burn_in)
    if beta_b >= 1:
        logger.warning("beta * b = %s is not below 1; the tail exponent is "
                "%.4g.", beta_b, kesten_theoretical_exponent(a, beta_b)
                if beta_b > 0 else np.inf)
    rng = utils.make_rng(rng)
    steps = burn_in + T
    mult = (a * np.exp(beta_b * rng.standard_normal(steps))).tolist()
    if eta is None:
        add = ((1.0 - a) * scale * rng.uniform(size=steps)).tolist()
        lam = 0.5 * scale
    else:
        add = [(1.0 - a) * float(eta)] * steps
        lam = float(eta)
    out = np.empty(steps)
    for idx in range(steps):
        lam = mult[idx] * lam + add[idx]
        out[idx] = lam
    return out[burn_in:]


def kesten_theoretical_exponent(a, beta_b):
    """
    kappa = -2 * log(a) / (beta * b)^2, the positive root of
    E[(a * exp(beta * b * xi))^kappa] = 1 for standard normal xi.
    """
    a = float(a)
    if not 0.0 < a < 1.0:
        raise exc.InvalidParameter("a must be in (0, 1); got %r." % a)
    utils.check_positive("beta_b", beta_b)
    return float(-2.0 * np.log(a) / beta_b ** 2)


def kesten_moment(a, beta_b, kappa, nodes=64):
    """
    E[(a * exp(beta_b * xi))^kappa] by Gauss-Hermite quadrature.
    """
    x, w = special.roots_hermitenorm(int(nodes))
    vals = np.power(a * np.exp(beta_b * x), kappa)
    return float(np.dot(w, vals) / np.sqrt(2.0 * np.pi))


def _hill(log_desc, k_top):
    top = log_desc[:k_top]
    est = k_top / float(np.sum(top - log_desc[k_top]))
    return est, est / np.sqrt(k_top)


def _sorted_logs(samples, k_max):
    samples = np.asarray(samples, dtype=float).ravel()
    if np.any(~np.isfinite(samples)) or np.any(samples <= 0):
        raise exc.InvalidParameter("Hill estimation needs positive, finite "
                "samples.")
    if k_max < 1 or k_max >= samples.size / 10.0:
        raise exc.InsufficientSamples("k_top must be positive and below a "
                "tenth of the %s samples; got %s." % (samples.size, k_max))
    return np.sort(np.log(samples))[::-1]


def hill_tail_exponent(samples, k_top):
    """
    The Hill estimate of the tail exponent from the k_top largest samples,
    with its asymptotic standard error kappa / sqrt(k_top).
    """
    k_top = int(k_top)
    return _hill(_sorted_logs(samples, k_top), k_top)


def hill_plot(samples, k_values):
    """
    Hill estimates for each k_top in `k_values`, sorting the samples once.
    A flat stretch of the curve indicates a power tail.
    """
    k_values = sorted(set(int(k) for k in utils.coerce_to_list(k_values)))
    if not k_values:
        raise exc.InvalidParameter("No k_top values given.")
    log_desc = _sorted_logs(samples, k_values[-1])
    if k_values[0] < 1:
        raise exc.InsufficientSamples("k_top must be positive; got %s."
                % k_values[0])
    pairs = [_hill(log_desc, k) for k in k_values]
    return HillPlot(k_values=k_values, estimates=[p[0] for p in pairs],
            standard_errors=[p[1] for p in pairs], n=int(log_desc.size))
