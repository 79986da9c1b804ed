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
Variance scaling of the aggregated intensity, shock impact, and the phase
of the correlation kernel.

The scaling curve is the variance of the sample mean of the intensity,
V(lambda_T) / T^2 / V_bar, at dyadic horizons. It falls as 1/T when the
kernel is summable and as T^-gamma for power kernels with gamma < 1.
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

NORMAL = "normal"
CRITICAL = "critical"
SUPER_NORMAL = "super-normal"

FINITE = "finite"
LOG = "log"
POWER_LAW = "power-law"


class ScalingCurve(BaseResult):
    """
    Horizons T_j = 2^j and the normalized variance of the mean at each.
    """
    _non_display = ["values"]


class ImpactResult(BaseResult):
    """
    The cumulative log-intensity impact of a unit shock. `divergence`
    classifies the infinite-horizon sum; `growth_exponent` is 1 - gamma for
    power-law growth and None otherwise.
    """
    pass


def _lag_weights(kernel, T):
    lags = np.arange(1, T)
    return lg.kernel_value(kernel, lags), (T - lags).astype(float)


def aggregate_variance(kernel, T, V_bar=1.0):
    """
    V(lambda_T) = T * V_bar + 2 * V_bar * sum_{i=1}^{T-1} d_i * (T - i),
    the variance of the summed intensity in its linearized form.
    """
    T = int(T)
    if T < 1:
        raise exc.InvalidParameter("T must be at least 1; got %s." % T)
    utils.check_positive("V_bar", V_bar, allow_zero=True)
    if T == 1:
        return float(V_bar)
    dvals, counts = _lag_weights(kernel, T)
    return float(V_bar * (T + 2.0 * np.dot(dvals, counts)))


def aggregate_variance_exact(kernel, T, ip):
    """
    The exact variance of sum_t lambda0 * exp(alpha * y_t) for jointly
    normal y: lambda_bar^2 * sum_{s,t} (exp(alpha^2 * d_|s-t|) - 1).
    """
    T = int(T)
    if T < 1:
        raise exc.InvalidParameter("T must be at least 1; got %s." % T)
    lambda_bar, _ = merton_core.intensity_moments(ip)
    a2 = ip.alpha ** 2
    total = T * np.expm1(a2)
    if T > 1:
        dvals, counts = _lag_weights(kernel, T)
        total += 2.0 * np.dot(np.expm1(a2 * dvals), counts)
    return float(lambda_bar ** 2 * total)


def asymptotic_variance(kernel, T, V_bar=1.0):
    """
    The leading large-T form of aggregate_variance: proportional to T for
    summable kernels, 2 * V_bar * T * log T at gamma = 1, and
    2 * V_bar * T^(2 - gamma) / ((1 - gamma) * (2 - gamma)) below it.
    """
    T = float(T)
    if kernel.family == lg.INDEPENDENT:
        return V_bar * T
    if kernel.family == lg.EXPONENTIAL:
        theta = kernel.param
        return V_bar * T * (1.0 + theta) / (1.0 - theta)
    gamma = kernel.param
    if gamma > 1:
        return V_bar * T * (2.0 * special.zeta(gamma) - 1.0)
    if gamma == 1:
        return 2.0 * V_bar * T * np.log(T)
    return 2.0 * V_bar * T ** (2.0 - gamma) / ((1.0 - gamma) * (2.0 - gamma))


def scaling_curve(kernel, t_max, V_bar=1.0):
    """
    Returns the ScalingCurve with values aggregate_variance(T) / T^2 / V_bar
    at T = 1, 2, 4, ... <= t_max.
    """
    t_max = int(t_max)
    if t_max < 2:
        raise exc.InvalidParameter("t_max must be at least 2; got %s." % t_max)
    utils.check_positive("V_bar", V_bar)
    horizons = utils.dyadic_horizons(t_max)
    values = np.array([aggregate_variance(kernel, T, V_bar) / T ** 2 / V_bar
            for T in horizons])
    logger.debug("Scaling curve for %r at %s horizons.", kernel,
            len(horizons))
    return ScalingCurve(kernel=kernel.to_dict(), horizons=horizons,
            values=values)


def scaling_exponent(curve):
    """
    Returns (T_j, delta_j) pairs with delta_j = log2(values[j] /
    values[j + 1]) for each adjacent pair of dyadic horizons.
    """
    values = np.asarray(curve.values, dtype=float)
    horizons = np.asarray(curve.horizons)
    if values.size < 2:
        raise exc.InsufficientPoints("At least two horizons are needed to "
                "estimate the scaling exponent; got %s." % values.size)
    deltas = np.log2(values[:-1] / values[1:])
    return [(int(T), float(d)) for T, d in zip(horizons[:-1], deltas)]


def log_log_slope(curve, t_lo, t_hi):
    """
    Least-squares slope of log(values) against log(horizons) over the
    horizons in [t_lo, t_hi].
    """
    horizons = np.asarray(curve.horizons, dtype=float)
    values = np.asarray(curve.values, dtype=float)
    keep = (horizons >= t_lo) & (horizons <= t_hi)
    if keep.sum() < 2:
        raise exc.InsufficientPoints("Fewer than two horizons lie in "
                "[%s, %s]." % (t_lo, t_hi))
    slope, _ = np.polyfit(np.log(horizons[keep]), np.log(values[keep]), 1)
    return float(slope)


def predicted_delta(kernel, T):
    """
    The large-T value of the scaling exponent: 1 for summable kernels,
    gamma below the transition, and 1 - log2(1 + 1 / log2 T) at gamma = 1.
    """
    if kernel.family != lg.POWER or kernel.param > 1:
        return 1.0
    if kernel.param == 1:
        return float(1.0 - np.log2(1.0 + 1.0 / np.log2(T)))
    return float(kernel.param)


def delta_table(gammas, T, alpha=1.0):
    """
    The scaling exponent at horizon T for each power-kernel gamma. V_bar
    is computed from lambda0 = 1 and `alpha`; it is a common factor, so
    delta does not depend on it.
    """
    T = int(T)
    _, V_bar = merton_core.intensity_moments(
            merton_core.IntensityParams(1.0, alpha))
    if V_bar == 0:
        V_bar = 1.0
    rows = []
    for gamma in utils.coerce_to_list(gammas, float):
        kernel = lg.PowerKernel(gamma)
        lo = aggregate_variance(kernel, T, V_bar) / T ** 2
        hi = aggregate_variance(kernel, 2 * T, V_bar) / (2 * T) ** 2
        rows.append({"gamma": gamma, "T": T, "alpha": float(alpha),
                "delta": float(np.log2(lo / hi)),
                "predicted": predicted_delta(kernel, T),
                "phase": classify_phase(kernel)})
    return rows


def _impact_class(kernel):
    if kernel.family == lg.POWER and kernel.param <= 1:
        if kernel.param == 1:
            return LOG, 0.0
        return POWER_LAW, 1.0 - kernel.param
    return FINITE, None


def impact_ratio(kernel, alpha, shock=1.0, horizon=np.inf):
    """
    The cumulative impact alpha * shock * sum_{i=0}^{T-1} d_i on the future
    log-intensity of a one-off shock to the macro factor.

    For an infinite horizon the exponential kernel gives the closed form
    alpha * shock / (1 - theta). For power kernels with gamma > 1 the value
    is the bound alpha * shock * (1 + 1 / (gamma - 1)) and `exact_sum`
    holds alpha * shock * zeta(gamma); for gamma <= 1 the sum diverges.
    """
    utils.check_positive("alpha", alpha, allow_zero=True)
    if not np.isfinite(shock):
        raise exc.InvalidParameter("shock must be finite; got %r." % shock)
    divergence, growth = _impact_class(kernel)
    scale = alpha * shock
    if np.isinf(float(horizon)):
        horizon = "inf"
        if kernel.family == lg.INDEPENDENT:
            value = exact = scale
        elif kernel.family == lg.EXPONENTIAL:
            value = exact = scale / (1.0 - kernel.param)
        elif divergence == FINITE:
            value = scale * (1.0 + 1.0 / (kernel.param - 1.0))
            exact = scale * special.zeta(kernel.param)
        else:
            value = exact = np.sign(scale) * np.inf if scale else 0.0
    else:
        horizon = int(horizon)
        if horizon < 1:
            raise exc.InvalidParameter("The horizon must be at least 1; "
                    "got %s." % horizon)
        value = exact = scale * float(np.sum(lg.kernel_value(kernel,
                np.arange(horizon))))
    return ImpactResult(kernel=kernel.to_dict(), alpha=float(alpha),
            shock=float(shock), horizon=horizon, value=float(value),
            exact_sum=float(exact), divergence=divergence,
            growth_exponent=growth)


def impact_table(kernels, alpha, shock=1.0, horizons=(1, 10, 100, np.inf)):
    """Returns impact_ratio for every kernel at every horizon."""
    return [impact_ratio(kernel, alpha, shock, horizon)
            for kernel in kernels for horizon in horizons]


def classify_phase(kernel):
    """
    "normal" for exponential, independent and power kernels with gamma > 1;
    "critical" at gamma = 1; "super-normal" for gamma < 1.
    """
    if kernel.family != lg.POWER or kernel.param > 1:
        return NORMAL
    if kernel.param == 1:
        return CRITICAL
    return SUPER_NORMAL
