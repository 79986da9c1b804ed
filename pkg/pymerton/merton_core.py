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
The finite-N Merton default process and its Poisson limit.

Conditional on the macro factor y, each of N obligors defaults with
probability G(y). As N grows with N * p'^(1 / sqrt(1 - rho_A)) held fixed,
the default count becomes Poisson with the log-normal intensity
lambda0 * exp(alpha * y). Intensity functions use the flipped factor, so a
larger y means more defaults; the conditional PD uses the unflipped one.
Since y is symmetric the count laws are the same.
"""

from functools import lru_cache
import logging

import numpy as np
from scipy import integrate
from scipy import special
from scipy import stats

import pymerton.exceptions as exc
from pymerton import latent_gaussian
from pymerton.resource import BaseResult
from pymerton import utils

logger = logging.getLogger(__name__)

DEFAULT_BETA = 1.3

PROBIT = "probit"
LOGISTIC = "logistic"

# Adaptive Gauss-Hermite: start, cap and tolerance on the log integral.
QUAD_NODES = 64
QUAD_MAX_NODES = 512
QUAD_TOL = 1e-6

# Grid for the finite-N count law; the Binomial peak in y has width of
# order 1 / (alpha * sqrt(k)), far wider than the grid step.
_Y_GRID = np.linspace(-8.5, 8.5, 4001)


class MertonParams(BaseResult):
    """
    Parameters of the finite-N process: the long-term average PD
    `p_prime`, the asset correlation `rho_A`, the number of obligors `N`
    and the logistic slope `beta`.
    """
    def __init__(self, p_prime, rho_A, N, beta=DEFAULT_BETA):
        p_prime = float(p_prime)
        rho_A = float(rho_A)
        beta = float(beta)
        if not 0.0 < p_prime < 1.0:
            raise exc.InvalidParameter("p_prime must be in (0, 1); got %r."
                    % p_prime)
        if not 0.0 <= rho_A < 1.0:
            raise exc.InvalidParameter("rho_A must be in [0, 1); got %r."
                    % rho_A)
        if int(N) != N or N < 1:
            raise exc.InvalidParameter("N must be a positive integer; got %r."
                    % N)
        utils.check_positive("beta", beta)
        super(MertonParams, self).__init__(p_prime=p_prime, rho_A=rho_A,
                N=int(N), beta=beta)

    @property
    def threshold(self):
        """The default threshold Y with Phi(Y) = p_prime."""
        return float(special.ndtri(self.p_prime))

    @property
    def exponent(self):
        """c = 1 / sqrt(1 - rho_A)."""
        return 1.0 / np.sqrt(1.0 - self.rho_A)


class IntensityParams(BaseResult):
    """
    The Poisson limit: intensity lambda0 * exp(alpha * y) for a standard
    normal y.
    """
    def __init__(self, lambda0, alpha):
        lambda0 = float(lambda0)
        alpha = float(alpha)
        utils.check_positive("lambda0", lambda0)
        utils.check_positive("alpha", alpha, allow_zero=True)
        super(IntensityParams, self).__init__(lambda0=lambda0, alpha=alpha)


def conditional_pd(y, params, link=PROBIT):
    """
    The default probability of one obligor given the macro factor y.

    The probit link is the exact Merton form
    Phi((Y - sqrt(rho_A) * y) / sqrt(1 - rho_A)). The logistic link replaces
    Phi by its logistic approximation: expit(c * logit(p') - alpha * y),
    whose large-N limit is exactly the Poisson mixture at limit_map(params).
    """
    y = np.asarray(y, dtype=float)
    rho = params.rho_A
    if link == PROBIT:
        val = special.ndtr((params.threshold - np.sqrt(rho) * y)
                / np.sqrt(1.0 - rho))
    elif link == LOGISTIC:
        alpha = limit_alpha(params)
        val = special.expit(params.exponent * special.logit(params.p_prime)
                - alpha * y)
    else:
        raise exc.InvalidParameter("Unknown link '%s'; expected '%s' or '%s'."
                % (link, PROBIT, LOGISTIC))
    return float(val) if val.ndim == 0 else val


def logistic_phi(x, beta=DEFAULT_BETA):
    """The logistic approximation 1 / (1 + exp(-beta * x)) to Phi(x)."""
    val = special.expit(beta * np.asarray(x, dtype=float))
    return float(val) if np.ndim(val) == 0 else val


def limit_alpha(params):
    return params.beta * np.sqrt(params.rho_A / (1.0 - params.rho_A))


def limit_map(params):
    """
    Maps Merton parameters to the intensity parameters of the Poisson
    limit: lambda0 = N * p'^c and alpha = beta * sqrt(rho_A / (1 - rho_A)).
    """
    lambda0 = params.N * params.p_prime ** params.exponent
    return IntensityParams(lambda0, limit_alpha(params))


def moment_matched_map(params):
    """
    Returns the log-normal intensity with the same mean and variance as the
    exact conditional expected count N * G(y) under the probit link: mean
    N * p' and variance N^2 * (Phi_2(Y, Y; rho_A) - p'^2).
    """
    mean = params.N * params.p_prime
    if params.rho_A == 0:
        return IntensityParams(mean, 0.0)
    Y = params.threshold
    cov = [[1.0, params.rho_A], [params.rho_A, 1.0]]
    joint = stats.multivariate_normal(mean=[0.0, 0.0], cov=cov).cdf([Y, Y])
    var = params.N ** 2 * max(joint - params.p_prime ** 2, 0.0)
    alpha = np.sqrt(np.log1p(var / mean ** 2))
    return IntensityParams(mean * np.exp(-0.5 * alpha ** 2), alpha)


def small_pd_approximation(y, params):
    """The small-p form p'^c * exp(-alpha * y) of the conditional PD."""
    y = np.asarray(y, dtype=float)
    val = params.p_prime ** params.exponent * np.exp(-limit_alpha(params) * y)
    return float(val) if val.ndim == 0 else val


def intensity(y, ip):
    """lambda0 * exp(alpha * y), with the flipped factor convention."""
    val = ip.lambda0 * np.exp(ip.alpha * np.asarray(y, dtype=float))
    return float(val) if np.ndim(val) == 0 else val


def intensity_moments(ip):
    """
    Returns (lambda_bar, V_bar), the mean and variance of the log-normal
    intensity.
    """
    lambda_bar = ip.lambda0 * np.exp(0.5 * ip.alpha ** 2)
    V_bar = lambda_bar ** 2 * np.expm1(ip.alpha ** 2)
    return float(lambda_bar), float(V_bar)


def lognormal_intensity_density(lam, ip):
    """
    The density of lambda0 * exp(alpha * y), y ~ N(0, 1). Raises DomainError
    when alpha is 0, since the intensity is then a point mass.
    """
    if ip.alpha == 0:
        raise exc.DomainError("The intensity is degenerate at lambda0 when "
                "alpha = 0; it has no density.")
    val = stats.lognorm.pdf(lam, s=ip.alpha, scale=ip.lambda0)
    return float(val) if np.ndim(val) == 0 else val


def log_poisson(k, lam):
    """log Poisson(k; lam), extended to non-integer k through log Gamma."""
    k = np.asarray(k, dtype=float)
    return special.xlogy(k, lam) - lam - special.gammaln(k + 1.0)


@lru_cache(maxsize=None)
def _hermite_rule(nodes):
    x, w = special.roots_hermitenorm(nodes)
    # Weights of the outermost nodes underflow to zero.
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    # Folding exp(x^2 / 2) into the weights turns the rule into one for
    # plain integrals over the real line.
    return x, logw + 0.5 * x ** 2


def latent_mode(k, log_lambda0, alpha, mean, var):
    """
    Newton iterations for the mode of the (concave) log integrand
    k * (log_lambda0 + alpha * y) - lambda0 * exp(alpha * y)
    - (y - mean)^2 / (2 * var). Steps are clipped to two prior sds.
    """
    sd = np.sqrt(var)
    guess = (np.log(np.maximum(k, 0.5)) - log_lambda0) / alpha
    y = np.clip(guess, mean - 6 * sd, mean + 6 * sd)
    for _ in range(100):
        lam = np.exp(log_lambda0 + alpha * y)
        grad = alpha * (k - lam) - (y - mean) / var
        curv = alpha ** 2 * lam + 1.0 / var
        step = np.clip(grad / curv, -2 * sd, 2 * sd)
        y = y + step
        if np.all(np.abs(step) < 1e-12 * np.maximum(1.0, np.abs(y))):
            break
    lam = np.exp(log_lambda0 + alpha * y)
    curv = alpha ** 2 * lam + 1.0 / var
    return y, 1.0 / np.sqrt(curv)


def log_poisson_normal(k, lambda0, alpha, mean=0.0, var=1.0, tol=QUAD_TOL,
        nodes=QUAD_NODES, max_nodes=QUAD_MAX_NODES):
    """
    Returns log of the integral of Poisson(k; lambda0 * exp(alpha * y))
    against the N(mean, var) density in y.

    The integral is computed by Gauss-Hermite quadrature centred at the mode
    of the integrand and scaled by its curvature there. The node count
    starts at `nodes` and doubles, up to `max_nodes`, until two successive
    estimates agree within `tol`. All arguments broadcast.
    """
    k, lambda0, alpha, mean, var = np.broadcast_arrays(
            *[np.asarray(v, dtype=float) for v in (k, lambda0, alpha, mean,
            var)])
    scalar = k.ndim == 0
    k, lambda0, alpha, mean, var = [np.atleast_1d(v).ravel() for v in
            (k, lambda0, alpha, mean, var)]
    if np.any(lambda0 <= 0) or np.any(alpha < 0) or np.any(var < 0):
        raise exc.InvalidParameter("log_poisson_normal requires lambda0 > 0, "
                "alpha >= 0 and var >= 0.")
    log_lambda0 = np.log(lambda0)
    # Where the latent spread is zero the integral is a plain Poisson term.
    result = log_poisson(k, np.exp(log_lambda0 + alpha * mean))
    mixed = (alpha > 0) & (var > 0)
    if np.any(mixed):
        result[mixed] = _adaptive_quadrature(k[mixed], log_lambda0[mixed],
                alpha[mixed], mean[mixed], var[mixed], tol, nodes, max_nodes)
    return float(result[0]) if scalar else result


def _adaptive_quadrature(k, log_lambda0, alpha, mean, var, tol, nodes,
        max_nodes):
    mode, scale = latent_mode(k, log_lambda0, alpha, mean, var)
    const = -special.gammaln(k + 1.0) - 0.5 * np.log(2 * np.pi * var)

    def estimate(count):
        x, logw = _hermite_rule(count)
        y = mode[:, None] + scale[:, None] * x[None, :]
        eta = log_lambda0[:, None] + alpha[:, None] * y
        with np.errstate(over="ignore"):
            logf = (k[:, None] * eta - np.exp(eta)
                    - (y - mean[:, None]) ** 2 / (2 * var[:, None]))
        return np.log(scale) + const + special.logsumexp(logf + logw, axis=1)

    count = int(nodes)
    previous = estimate(count)
    while count < max_nodes:
        count *= 2
        # An element whose new estimate is not finite keeps its last one.
        current = estimate(count)
        current = np.where(np.isfinite(current), current, previous)
        with np.errstate(invalid="ignore"):
            change = np.abs(current - previous)
        if np.all(change < tol):
            return current
        previous = current
    logger.debug("Gauss-Hermite stopped at the cap of %s nodes.", max_nodes)
    return previous


def mixture_pmf(k, ip, tol=QUAD_TOL):
    """
    P[X = k] for the Poisson count with log-normal intensity. With
    alpha = 0 this is the exact Poisson(lambda0) pmf.
    """
    if ip.alpha == 0:
        val = stats.poisson.pmf(k, ip.lambda0)
    else:
        val = np.exp(log_poisson_normal(k, ip.lambda0, ip.alpha, tol=tol))
    return float(val) if np.ndim(val) == 0 else val


def mixture_pmf_table(ip, tol=QUAD_TOL, max_k=2 ** 21, chunk=4096):
    """
    Returns P[0..K] with K the first value at which the table holds at
    least 1 - tol of the mass. Raises DomainError if that takes more than
    `max_k` terms.
    """
    probs = []
    mass = 0.0
    start = 0
    while mass < 1.0 - tol:
        if start >= max_k:
            raise exc.DomainError("The count distribution for %r still has "
                    "mass %.3g beyond k=%s." % (ip, 1.0 - mass, max_k))
        ks = np.arange(start, start + chunk)
        block = np.atleast_1d(mixture_pmf(ks, ip))
        cum = mass + np.cumsum(block)
        done = np.nonzero(cum >= 1.0 - tol)[0]
        if done.size:
            probs.append(block[:done[0] + 1])
            break
        probs.append(block)
        mass = cum[-1]
        start += chunk
    return np.concatenate(probs)


def merton_pmf(k, params, link=PROBIT):
    """
    The exact finite-N count law: the integral of Binomial(k; N, G(y))
    against the standard normal density, by the trapezoid rule on a dense
    grid.
    """
    k = np.asarray(k)
    flat = np.atleast_1d(k).ravel()
    pd = conditional_pd(_Y_GRID, params, link=link)
    logpmf = stats.binom.logpmf(flat[:, None], params.N, pd[None, :])
    dens = np.exp(logpmf + stats.norm.logpdf(_Y_GRID)[None, :])
    val = integrate.trapezoid(dens, _Y_GRID, axis=1)
    return float(val[0]) if k.ndim == 0 else val.reshape(k.shape)


def total_variation(p, q):
    """Total variation distance between two pmfs on 0, 1, 2, ..."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    size = max(p.size, q.size)
    p = np.pad(p, (0, size - p.size))
    q = np.pad(q, (0, size - q.size))
    return 0.5 * float(np.sum(np.abs(p - q)))


def simulate_merton(params, kernel, T, rng, link=PROBIT, size=None):
    """
    Draws the default counts of the finite-N process for T terms: a latent
    path, then k_t ~ Binomial(N, G(y_t)). With `size`, returns that many
    independent series as rows.
    """
    rng = utils.make_rng(rng)
    y = latent_gaussian.sample_paths(kernel, T, rng, size=size)
    return rng.binomial(params.N, conditional_pd(y, params, link=link))


def simulate_poisson_lognormal(ip, kernel, T, rng, method="path", size=None):
    """
    Draws counts of the Poisson limit for T terms.

    method="path" samples the latent path and sets lambda_t = intensity(y_t).
    method="recursion" instead runs the intensity forward in log space,
    log lambda_{t+1} = theta * log lambda_t + (1 - theta) * log lambda0 +
    sqrt(1 - theta^2) * alpha * xi_{t+1}, which needs an exponential (or the
    independent) kernel.
    """
    rng = utils.make_rng(rng)
    if method == "path":
        y = latent_gaussian.sample_paths(kernel, T, rng, size=size)
        lam = intensity(y, ip)
    elif method == "recursion":
        lam = _intensity_recursion(ip, kernel, T, rng, size)
    else:
        raise exc.InvalidParameter("Unknown method '%s'; expected 'path' or "
                "'recursion'." % method)
    return rng.poisson(lam)


def _intensity_recursion(ip, kernel, T, rng, size):
    if kernel.family == latent_gaussian.EXPONENTIAL:
        theta = kernel.param
    elif kernel.family == latent_gaussian.INDEPENDENT:
        theta = 0.0
    else:
        raise exc.InvalidParameter("The intensity recursion needs an "
                "exponential kernel; got %r." % kernel)
    rows = 1 if size is None else int(size)
    xi = rng.standard_normal((rows, int(T)))
    log_lambda0 = np.log(ip.lambda0)
    loglam = np.empty_like(xi)
    loglam[:, 0] = log_lambda0 + ip.alpha * xi[:, 0]
    for t in range(1, int(T)):
        loglam[:, t] = (theta * loglam[:, t - 1]
                + (1.0 - theta) * log_lambda0
                + np.sqrt(1.0 - theta ** 2) * ip.alpha * xi[:, t])
    lam = np.exp(loglam)
    return lam[0] if size is None else lam
