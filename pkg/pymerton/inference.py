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
Estimation on yearly default counts.

The workflow runs in stages: counts are normalized to a common portfolio
of 3000 obligors; lambda0 and alpha are fitted by maximum likelihood with
independent latents; the latents are backed out pointwise and their ACF is
fitted by an exponential and a power decay; and finally the MAP estimate of
(lambda0, alpha, theta or gamma) is found under normal priors whose widths
are sc times the preliminary standard errors. In the MAP stage the latents
y_1..y_T are integrated out by the Laplace approximation and reported at
their conditional mode.
"""

import logging

import numpy as np
import pandas as pd
from scipy import linalg
from scipy import optimize
from scipy import special

import pymerton.exceptions as exc
from pymerton import latent_gaussian as lg
from pymerton import merton_core
from pymerton.resource import BaseResult
from pymerton import utils

logger = logging.getLogger(__name__)

PORTFOLIO_SIZE = 3000

# Bounds on the transformed coordinates of the MAP problem.
LOGIT_THETA_BOUND = 6.9
LOG_GAMMA_BOUNDS = (np.log(0.02), np.log(20.0))
LOG_ALPHA_BOUNDS = (np.log(1e-4), np.log(20.0))
LOG_LAMBDA0_BOUNDS = (np.log(1e-6), np.log(1e6))

# Newton iterations for the conditional mode of the latents.
MODE_MAXITER = 100
MODE_HALVINGS = 40
MODE_TOL = 1e-10
MODE_SLACK = 1e-12

PARAM_NAMES = {
        lg.EXPONENTIAL: ("lambda0", "alpha", "theta"),
        lg.POWER: ("lambda0", "alpha", "gamma"),
        lg.INDEPENDENT: ("lambda0", "alpha"),
        }


class PortfolioSeries(object):
    """
    Yearly obligor and default counts. `normalized` holds the counts
    rescaled to a portfolio of 3000 obligors once normalize_counts() has
    run, and is None before that.
    """
    def __init__(self, years, obligors, defaults, normalized=None):
        self.years = np.asarray(years, dtype=np.int64)
        self.obligors = np.asarray(obligors, dtype=np.int64)
        self.defaults = np.asarray(defaults, dtype=np.int64)
        if not (self.years.shape == self.obligors.shape
                == self.defaults.shape) or self.years.ndim != 1:
            raise exc.InvalidParameter("years, obligors and defaults must be "
                    "1-D sequences of equal length.")
        if np.any(self.defaults < 0):
            raise exc.InvalidParameter("Default counts must be non-negative.")
        if np.any(self.defaults > self.obligors):
            raise exc.InvalidParameter("Default counts cannot exceed obligor "
                    "counts.")
        if normalized is not None:
            normalized = np.asarray(normalized, dtype=float)
        self.normalized = normalized


    @classmethod
    def from_counts(cls, counts, size=PORTFOLIO_SIZE, start_year=1):
        """
        Wraps simulated counts as a normalized series on a portfolio of
        `size` obligors a year.
        """
        counts = np.asarray(counts, dtype=np.int64)
        years = start_year + np.arange(counts.size)
        obligors = np.full(counts.size, size, dtype=np.int64)
        return normalize_counts(cls(years, obligors, counts), size=size)


    @property
    def T(self):
        return int(self.years.size)


    def counts(self):
        """The counts used for estimation: normalized when available."""
        if self.normalized is not None:
            return self.normalized
        return self.defaults.astype(float)


    def head(self, t):
        """Returns the series restricted to its first `t` years."""
        normalized = None if self.normalized is None else self.normalized[:t]
        return PortfolioSeries(self.years[:t], self.obligors[:t],
                self.defaults[:t], normalized)


    def to_frame(self):
        frame = pd.DataFrame({"year": self.years, "obligors": self.obligors,
                "defaults": self.defaults})
        if self.normalized is not None:
            frame["normalized"] = self.normalized
        return frame


    def __len__(self):
        return self.T


    def __eq__(self, other):
        if not isinstance(other, PortfolioSeries):
            return False
        same = (np.array_equal(self.years, other.years)
                and np.array_equal(self.obligors, other.obligors)
                and np.array_equal(self.defaults, other.defaults))
        if self.normalized is None or other.normalized is None:
            return same and self.normalized is other.normalized
        return same and np.array_equal(self.normalized, other.normalized)


    def __ne__(self, other):
        return not self.__eq__(other)


    __hash__ = None


    def __repr__(self):
        if not self.T:
            return "<PortfolioSeries empty>"
        return "<PortfolioSeries %s-%s T=%s>" % (self.years[0],
                self.years[-1], self.T)


def _counts(series):
    if isinstance(series, PortfolioSeries):
        return series.counts()
    return np.asarray(series, dtype=float)


def normalize_counts(series, size=PORTFOLIO_SIZE):
    """
    Returns a copy of the series with k*_t = (k_t / n_t) * size filled in.
    """
    if np.any(series.obligors <= 0):
        bad = series.years[series.obligors <= 0]
        raise exc.ZeroObligors("Obligor counts must be positive; year(s) %s "
                "have none." % ", ".join(str(y) for y in bad))
    normalized = series.defaults / series.obligors.astype(float) * size
    return PortfolioSeries(series.years, series.obligors, series.defaults,
            normalized)


class MleResult(BaseResult):
    """
    The independent-latent maximum likelihood fit. Unpacks as
    (lambda0, alpha, se_lambda0, se_alpha).
    """
    def __iter__(self):
        return iter((self.lambda0, self.alpha, self.se_lambda0,
                self.se_alpha))


def _marginal_nll(counts, lambda0, alpha):
    """-sum_t log of the Poisson/log-normal mixture probability of k*_t."""
    return -float(np.sum(merton_core.log_poisson_normal(counts, lambda0,
            abs(alpha))))


def _projected_grad_norm(grad, x, bounds):
    grad = np.array(grad, dtype=float)
    for idx, (lo, hi) in enumerate(bounds):
        if lo is not None and x[idx] <= lo and grad[idx] > 0:
            grad[idx] = 0.0
        if hi is not None and x[idx] >= hi and grad[idx] < 0:
            grad[idx] = 0.0
    return float(np.max(np.abs(grad))) if grad.size else 0.0


def _moment_start(counts):
    mean = float(np.mean(counts))
    if mean <= 0:
        raise exc.FitFailure("The series has no defaults; lambda0 cannot be "
                "estimated.")
    excess = float(np.var(counts)) - mean
    if excess > 0:
        alpha = np.sqrt(np.log1p(excess / mean ** 2))
    else:
        alpha = 0.05
    return mean * np.exp(-0.5 * alpha ** 2), alpha


def mle_independent(series, gtol=1e-6, maxiter=500):
    """
    Maximizes sum_t log P(k*_t; lambda0, alpha) over lambda0 > 0 and
    alpha >= 0, treating the latents as independent. Standard errors come
    from the inverse of the numerical observed information.
    """
    counts = _counts(series)
    if counts.size < 3:
        raise exc.InsufficientPoints("At least 3 years are needed for the "
                "maximum likelihood fit; got %s." % counts.size)
    lambda0, alpha = _moment_start(counts)

    def nll(x):
        return _marginal_nll(counts, np.exp(x[0]), x[1])

    def grad(x):
        return utils.central_gradient(nll, x)

    bounds = [LOG_LAMBDA0_BOUNDS, (0.0, 20.0)]
    x0 = np.array([np.log(lambda0), alpha])
    logger.debug("MLE start: lambda0=%.4g alpha=%.4g", lambda0, alpha)
    res = optimize.minimize(nll, x0, jac=grad, method="L-BFGS-B",
            bounds=bounds, options={"gtol": gtol, "maxiter": maxiter})
    grad_norm = _projected_grad_norm(res.jac, res.x, bounds)
    if not res.success and grad_norm > 1e-3:
        logger.warning("MLE did not converge: %s", res.message)
        raise exc.NonConvergence("The maximum likelihood fit did not "
                "converge: %s" % res.message, diagnostics={
                "message": str(res.message), "iterations": int(res.nit),
                "grad_norm": grad_norm, "objective": float(res.fun)})
    lambda0 = float(np.exp(res.x[0]))
    alpha = float(res.x[1])

    def natural_grad(theta):
        return utils.central_gradient(
                lambda p: _marginal_nll(counts, p[0], p[1]), theta)

    hess = utils.numerical_hessian(natural_grad, [lambda0, alpha])
    cov = utils.safe_inverse(hess)
    with np.errstate(invalid="ignore"):
        se = np.sqrt(np.diag(cov))
    logger.debug("MLE: lambda0=%.4g alpha=%.4g after %s iterations",
            lambda0, alpha, res.nit)
    return MleResult(lambda0=lambda0, alpha=alpha,
            se_lambda0=float(se[0]), se_alpha=float(se[1]),
            loglik=-float(res.fun), iterations=int(res.nit),
            converged=bool(res.success), grad_norm=grad_norm)


def infer_latents(series, lambda0, alpha):
    """
    Backs the latent path out of the counts pointwise:
    y_t = (log(k*_t + 0.5) - log lambda0) / alpha.
    """
    if alpha == 0:
        raise exc.DegenerateAlpha("The latents are not identified when "
                "alpha = 0.")
    counts = _counts(series)
    return (np.log(counts + 0.5) - np.log(lambda0)) / alpha


def sample_acf(path, max_lag):
    """
    The biased sample autocorrelation r_0..r_max_lag of a path:
    r_h = sum_t (y_t - m)(y_{t+h} - m) / sum_t (y_t - m)^2.
    """
    path = np.asarray(path, dtype=float)
    max_lag = int(max_lag)
    if max_lag < 1 or max_lag >= path.size:
        raise exc.InvalidParameter("max_lag must be in [1, T); got %s for "
                "T=%s." % (max_lag, path.size))
    dev = path - path.mean()
    denom = float(np.dot(dev, dev))
    if denom == 0:
        raise exc.ConstantSeries("The autocorrelation of a constant series "
                "is undefined.")
    size = path.size
    return np.array([np.dot(dev[:size - h], dev[h:]) / denom
            for h in range(max_lag + 1)])


class AcfFit(BaseResult):
    """
    A decay fit to the ACF. Unpacks as (param, se). For the exponential
    family `time_constant` is -1 / log(theta), the exp(-h / tau) form.
    """
    def __iter__(self):
        return iter((self.param, self.se))


def fit_acf(acf, family, max_lag=None):
    """
    Least-squares fit of log r_h over lags 1..max_lag, through the origin:
    log r_h = h * log(theta) for the exponential family and
    log r_h = -gamma * log(1 + h) for the power family. Non-positive r_h
    are dropped.
    """
    acf = np.asarray(acf, dtype=float)
    if max_lag is None:
        max_lag = acf.size - 1
    max_lag = int(max_lag)
    if max_lag < 2 or max_lag >= acf.size:
        raise exc.InvalidParameter("max_lag must be in [2, %s]; got %s."
                % (acf.size - 1, max_lag))
    lags = np.arange(1, max_lag + 1)
    vals = acf[1:max_lag + 1]
    keep = vals > 0
    if keep.sum() < 2:
        raise exc.FitFailure("Fewer than two positive ACF values in lags "
                "1..%s." % max_lag)
    lags = lags[keep]
    logr = np.log(vals[keep])
    if family == lg.EXPONENTIAL:
        x = lags.astype(float)
    elif family == lg.POWER:
        x = -np.log1p(lags)
    else:
        raise exc.InvalidParameter("Cannot fit an ACF to family '%s'."
                % family)
    slope = float(np.dot(x, logr) / np.dot(x, x))
    resid = logr - slope * x
    rss = float(np.dot(resid, resid))
    dof = max(lags.size - 1, 1)
    se_slope = float(np.sqrt(rss / dof / np.dot(x, x)))
    info = {"family": family, "lags": lags, "residual": rss}
    if family == lg.EXPONENTIAL:
        theta = float(np.exp(slope))
        info.update(param=theta, se=theta * se_slope)
        if slope < 0:
            info.update(time_constant=-1.0 / slope,
                    se_time_constant=se_slope / slope ** 2)
        else:
            info.update(time_constant=np.inf, se_time_constant=np.nan)
    else:
        info.update(param=slope, se=se_slope)
    return AcfFit(info)


class Preliminary(BaseResult):
    """The independence MLE, the backed-out latents, their ACF and fits."""
    _non_display = ["latents", "acf"]


def default_max_lag(T):
    return max(2, min(20, int(T) // 5))


def preliminary_estimates(series, max_lag=None):
    """
    Runs the preliminary stages in one call: the independence MLE, the
    latent back-out, the sample ACF and both decay fits.
    """
    mle = mle_independent(series)
    latents = infer_latents(series, mle.lambda0, mle.alpha)
    if max_lag is None:
        max_lag = default_max_lag(latents.size)
    acf = sample_acf(latents, max_lag)
    fits = {}
    for family in (lg.EXPONENTIAL, lg.POWER):
        try:
            fits[family] = fit_acf(acf, family, max_lag)
        except exc.FitFailure as e:
            logger.warning("ACF fit for '%s' failed: %s", family, e)
            fits[family] = None
    return Preliminary(mle=mle, latents=latents, acf=acf,
            exponential=fits[lg.EXPONENTIAL], power=fits[lg.POWER],
            max_lag=int(max_lag))


class PriorSpec(object):
    """
    Independent normal priors on the natural parameters. Each prior has a
    mean and a base standard error; its sd is sc times that error. An
    infinite sd means a flat prior.
    """
    # Used when a preliminary standard error is missing or not positive.
    SE_FLOOR_REL = 0.1
    SE_FLOOR_ABS = 1e-3

    def __init__(self, family, means, ses, sc=1.0):
        self.family = family
        self.names = PARAM_NAMES[family]
        self.means = dict((name, float(means[name])) for name in self.names)
        self.ses = dict((name, self._floor(float(ses[name]),
                self.means[name])) for name in self.names)
        self.sc = float(sc)
        if not self.sc > 0:
            raise exc.InvalidParameter("sc must be positive; got %r." % sc)


    @classmethod
    def _floor(cls, se, mean):
        if np.isinf(se) and se > 0:
            return se
        floor = max(cls.SE_FLOOR_REL * abs(mean), cls.SE_FLOOR_ABS)
        if not np.isfinite(se) or se <= 0:
            return floor
        return max(se, cls.SE_FLOOR_ABS)


    @classmethod
    def from_preliminary(cls, prelim, family, sc=1.0):
        """
        Centres the priors on the preliminary estimates: lambda0 and alpha
        from the MLE and the decay parameter from the ACF fit of `family`.
        """
        means = {"lambda0": prelim.mle.lambda0, "alpha": prelim.mle.alpha}
        ses = {"lambda0": prelim.mle.se_lambda0, "alpha": prelim.mle.se_alpha}
        if family != lg.INDEPENDENT:
            fit = prelim.exponential if family == lg.EXPONENTIAL else \
                    prelim.power
            if fit is None:
                raise exc.FitFailure("No ACF fit is available for '%s'."
                        % family)
            name = PARAM_NAMES[family][2]
            means[name] = fit.param
            ses[name] = fit.se
        return cls(family, means, ses, sc)


    @classmethod
    def flat(cls, family, means=None):
        """Flat priors; the means only serve as starting values."""
        means = dict(means or {})
        defaults = {"lambda0": 1.0, "alpha": 1.0, "theta": 0.5, "gamma": 0.5}
        for name in PARAM_NAMES[family]:
            means.setdefault(name, defaults[name])
        ses = dict((name, np.inf) for name in PARAM_NAMES[family])
        return cls(family, means, ses)


    def scaled(self, sc):
        """Returns the same priors with a different sc."""
        return PriorSpec(self.family, self.means, self.ses, sc)


    def sd(self, name):
        return self.sc * self.ses[name]


    def logpdf(self, name, value):
        sd = self.sd(name)
        if np.isinf(sd):
            return 0.0
        return float(-0.5 * ((value - self.means[name]) / sd) ** 2
                - np.log(sd) - 0.5 * np.log(2 * np.pi))


    def dlogpdf(self, name, value):
        sd = self.sd(name)
        if np.isinf(sd):
            return 0.0
        return float(-(value - self.means[name]) / sd ** 2)


    def to_dict(self):
        return {"family": self.family, "sc": self.sc,
                "means": dict(self.means),
                "sds": dict((name, self.sd(name)) for name in self.names)}


    def __repr__(self):
        parts = ", ".join("%s=N(%.4g, %.4g)" % (name, self.means[name],
                self.sd(name)) for name in self.names)
        return "<PriorSpec sc=%s %s>" % (self.sc, parts)


def pointwise_loglik(counts, lambda0, alpha, y):
    """
    log Poisson(k*_t; lambda0 * exp(alpha * y_t)) for each t, with the
    factorial extended through log Gamma.
    """
    eta = np.log(lambda0) + alpha * np.asarray(y, dtype=float)
    counts = np.asarray(counts, dtype=float)
    return counts * eta - np.exp(eta) - special.gammaln(counts + 1.0)


class LatentMode(BaseResult):
    """
    The conditional mode y of the latents at fixed hyper-parameters, with
    a = Sigma^-1 y, the curvature weights w of the tempered log-likelihood
    and the lower Cholesky factor of B = I + W^1/2 Sigma W^1/2.
    """
    _non_display = ["y", "a", "lam", "w", "root_w", "lower", "sigma"]


class MapObjective(object):
    """
    The negative log posterior of (lambda0, alpha, theta or gamma) in
    transformed coordinates z = (log lambda0, log alpha, logit theta or
    log gamma), with the latents y_1..y_T integrated out by the Laplace
    approximation around their conditional mode, and its analytic gradient.

    The log-likelihood can be tempered by `temperature`; the priors never
    are. With `jacobian` the log-Jacobian of the transform is added, which
    makes exp(-value) a density in z (used by the sampler).
    """
    size = 3

    def __init__(self, counts, family, priors=None, temperature=1.0,
            jacobian=False):
        if family not in (lg.EXPONENTIAL, lg.POWER):
            raise exc.InvalidParameter("The Laplace objective needs family "
                    "'exp' or 'pow'; got '%s'." % family)
        self.counts = _counts(counts)
        self.T = self.counts.size
        self.family = family
        self.names = PARAM_NAMES[family]
        self.priors = priors if priors is not None else PriorSpec.flat(family)
        self.temperature = float(temperature)
        self.jacobian = jacobian
        self._lgam = special.gammaln(self.counts + 1.0)
        self._lags = np.arange(self.T)


    def bounds(self):
        if self.family == lg.EXPONENTIAL:
            kb = (-LOGIT_THETA_BOUND, LOGIT_THETA_BOUND)
        else:
            kb = LOG_GAMMA_BOUNDS
        return [LOG_LAMBDA0_BOUNDS, LOG_ALPHA_BOUNDS, kb]


    def kernel_param(self, u):
        """Returns the natural kernel parameter and its derivative in u."""
        if self.family == lg.EXPONENTIAL:
            theta = float(special.expit(u))
            return theta, theta * (1.0 - theta)
        gamma = float(np.exp(u))
        return gamma, gamma


    def unpack(self, z):
        """Returns (lambda0, alpha, param) for the vector z."""
        z = np.asarray(z, dtype=float)
        param, _ = self.kernel_param(z[2])
        return float(np.exp(z[0])), float(np.exp(z[1])), param


    def pack(self, lambda0, alpha, param):
        if self.family == lg.EXPONENTIAL:
            u = special.logit(np.clip(param, 1e-6, 1 - 1e-6))
        else:
            u = np.log(param)
        return np.array([np.log(lambda0), np.log(alpha), u], dtype=float)


    def kernel(self, z):
        param, _ = self.kernel_param(z[2])
        return lg.kernel_from_name(self.family, param)


    def _loglik(self, eta):
        with np.errstate(over="ignore", invalid="ignore"):
            return self.temperature * float(np.sum(self.counts * eta
                    - np.exp(eta) - self._lgam))


    def _factor(self, sigma, root_w):
        outer = root_w[:, None] * sigma * root_w[None, :]
        try:
            return linalg.cholesky(np.eye(self.T) + outer, lower=True)
        except (linalg.LinAlgError, ValueError):
            raise exc.NotPositiveDefinite("I + W^1/2 Sigma W^1/2 could not be "
                    "factored for the %s kernel." % self.family)


    def latent_mode(self, z):
        """
        Newton iterations for the mode of the tempered log-likelihood plus
        the N(0, Sigma) log density of y, started at y = 0. The iterate is
        kept as a with y = Sigma a, so Sigma is never inverted, and each
        step is halved until the objective does not decrease.
        """
        z = np.asarray(z, dtype=float)
        log_lambda0, alpha = float(z[0]), float(np.exp(z[1]))
        tau = self.temperature
        sigma = lg.build_correlation_matrix(self.kernel(z), self.T)

        def psi(a, y):
            return -0.5 * float(np.dot(a, y)) + self._loglik(log_lambda0
                    + alpha * y)

        a = np.zeros(self.T)
        y = np.zeros(self.T)
        current = psi(a, y)
        iteration = 0
        for iteration in range(1, MODE_MAXITER + 1):
            with np.errstate(over="ignore"):
                lam = np.exp(log_lambda0 + alpha * y)
            w = tau * alpha ** 2 * lam
            root_w = np.sqrt(w)
            lower = self._factor(sigma, root_w)
            b = w * y + tau * alpha * (self.counts - lam)
            target = b - root_w * linalg.cho_solve((lower, True),
                    root_w * (sigma @ b))
            step = target - a
            frac = 1.0
            # Rounding can leave a converged step a hair below the current
            # value, so the comparison allows a relative slack.
            floor = current - MODE_SLACK * (1.0 + abs(current))
            for _ in range(MODE_HALVINGS):
                trial_a = a + frac * step
                trial_y = sigma @ trial_a
                value = psi(trial_a, trial_y)
                if np.isfinite(value) and value >= floor:
                    break
                frac *= 0.5
            else:
                break
            moved = float(np.max(np.abs(trial_y - y)))
            a, y, current = trial_a, trial_y, value
            if moved < MODE_TOL:
                break
        else:
            logger.debug("Latent mode not settled after %s Newton steps.",
                    MODE_MAXITER)
        lam = np.exp(log_lambda0 + alpha * y)
        w = tau * alpha ** 2 * lam
        root_w = np.sqrt(w)
        lower = self._factor(sigma, root_w)
        return LatentMode(y=y, a=a, lam=lam, w=w, root_w=root_w, lower=lower,
                sigma=sigma, loglik=self._loglik(log_lambda0 + alpha * y),
                iterations=iteration)


    def latent_variance(self, mode):
        """
        The diagonal of (Sigma^-1 + W)^-1, the variance of each latent
        under the Laplace approximation.
        """
        cross = linalg.solve_triangular(mode.lower,
                mode.root_w[:, None] * mode.sigma, lower=True)
        return np.diag(mode.sigma) - np.sum(cross ** 2, axis=0)


    def sample_latents(self, z, rng, size=1):
        """
        Draws `size` latent paths from N(y_mode, (Sigma^-1 + W)^-1), one per
        row. A prior draw f ~ N(0, Sigma) is corrected by the pseudo-data
        update f - Sigma W^1/2 B^-1 (W^1/2 f + e).
        """
        rng = utils.make_rng(rng)
        mode = self.latent_mode(z)
        chol = lg.cholesky_factor(self.kernel(z), self.T, sigma=mode.sigma)
        prior = chol @ rng.standard_normal((self.T, int(size)))
        noise = rng.standard_normal((self.T, int(size)))
        rhs = mode.root_w[:, None] * prior + noise
        update = mode.sigma @ (mode.root_w[:, None]
                * linalg.cho_solve((mode.lower, True), rhs))
        return (mode.y[:, None] + prior - update).T


    def loglik_terms(self, z):
        """Pointwise untempered log-likelihood at the conditional mode."""
        lambda0, alpha, _ = self.unpack(z)
        return pointwise_loglik(self.counts, lambda0, alpha,
                self.latent_mode(z).y)


    def _laplace(self, mode):
        logdet = 2.0 * float(np.sum(np.log(np.diag(mode.lower))))
        return (-0.5 * float(np.dot(mode.a, mode.y)) + mode.loglik
                - 0.5 * logdet)


    def _prior_terms(self, z):
        lambda0, alpha, param = self.unpack(z)
        _, dparam_du = self.kernel_param(z[2])
        values = (lambda0, alpha, param)
        chain = (lambda0, alpha, dparam_du)
        logp = 0.0
        grad = np.zeros(3)
        for idx, name in enumerate(self.names):
            logp += self.priors.logpdf(name, values[idx])
            grad[idx] = self.priors.dlogpdf(name, values[idx]) * chain[idx]
        if self.jacobian:
            if self.family == lg.EXPONENTIAL:
                logp += z[0] + z[1] + np.log(param) + np.log1p(-param)
                grad += [1.0, 1.0, 1.0 - 2.0 * param]
            else:
                logp += z[0] + z[1] + z[2]
                grad += [1.0, 1.0, 1.0]
        return logp, grad


    def value(self, z):
        z = np.asarray(z, dtype=float)
        prior, _ = self._prior_terms(z)
        return -(self._laplace(self.latent_mode(z)) + prior)


    def value_and_grad(self, z):
        z = np.asarray(z, dtype=float)
        mode = self.latent_mode(z)
        _, alpha, _ = self.unpack(z)
        _, dparam_du = self.kernel_param(z[2])
        tau = self.temperature
        y, a, lam, w, sigma = mode.y, mode.a, mode.lam, mode.w, mode.sigma
        resid = self.counts - lam
        # R = W^1/2 B^-1 W^1/2
        rmat = mode.root_w[:, None] * linalg.cho_solve((mode.lower, True),
                np.diag(mode.root_w))
        variance = self.latent_variance(mode)
        # Derivative of the log-determinant term in the mode.
        dmode = -0.5 * variance * tau * alpha ** 3 * lam

        def shift(rhs):
            # (Sigma^-1 + W)^-1 rhs
            sr = sigma @ rhs
            return sr - sigma @ (rmat @ sr)

        grad = np.empty(3)
        grad[0] = (tau * np.sum(resid) - 0.5 * np.dot(variance, w)
                + np.dot(dmode, shift(-tau * alpha * lam)))
        dw_alpha = tau * alpha * lam * (2.0 + alpha * y)
        grad[1] = alpha * (tau * np.dot(resid, y)
                - 0.5 * np.dot(variance, dw_alpha)
                + np.dot(dmode, shift(tau * (resid - alpha * lam * y))))
        dsigma = linalg.toeplitz(self.kernel(z).derivative(self._lags))
        dsa = dsigma @ a
        grad[2] = dparam_du * (0.5 * np.dot(a, dsa)
                - 0.5 * np.sum(rmat * dsigma)
                + np.dot(dmode, dsa - sigma @ (rmat @ dsa)))
        prior, dprior = self._prior_terms(z)
        grad += dprior
        return -(self._laplace(mode) + prior), -grad


    def gradient(self, z):
        return self.value_and_grad(z)[1]


    def safe_value_and_grad(self, z):
        """
        value_and_grad() for use inside an optimizer: a point where the
        latent mode cannot be found gets a large finite value so that the
        line search backs off.
        """
        try:
            val, grad = self.value_and_grad(z)
        except exc.NotPositiveDefinite:
            logger.debug("Latent mode failed at kernel coordinate %.4g.",
                    z[2])
            return 1e20, np.zeros(self.size)
        if not (np.isfinite(val) and np.all(np.isfinite(grad))):
            return 1e20, np.zeros(self.size)
        return val, grad


class FitResult(BaseResult):
    """
    The MAP fit of one model to one series: estimates and standard errors
    of lambda0, alpha and the decay parameter, the latent path at its
    conditional mode with its Laplace standard deviations, the log
    posterior at the optimum and the optimizer diagnostics.
    """
    _non_display = ["latents", "latent_sd", "standard_errors"]

    @property
    def param(self):
        if self.param_name is None:
            return None
        return self.estimates[self.param_name]

    def kernel(self):
        return lg.kernel_from_name(self.family, self.param)

    def intensity_params(self):
        return merton_core.IntensityParams(self.lambda0, self.alpha)


def _start_values(family, priors, kernel_init):
    lambda0 = max(priors.means["lambda0"], 1e-3)
    alpha = min(max(priors.means["alpha"], 0.05), 10.0)
    if family == lg.EXPONENTIAL:
        param = priors.means["theta"] if kernel_init is None else kernel_init
        param = min(max(param, 0.01), 0.99)
    else:
        param = priors.means["gamma"] if kernel_init is None else kernel_init
        param = min(max(param, 0.05), 5.0)
    return lambda0, alpha, param


def map_estimate(series, family, priors=None, kernel_init=None, rng=None,
        starts=5, gtol=1e-6, maxiter=500):
    """
    Maximizes the log posterior of (lambda0, alpha, theta or gamma) with
    the latents integrated out by the Laplace approximation, using L-BFGS-B
    in transformed coordinates. The first start is at the prior means; the
    others jitter it, and the best optimum wins. The latents are reported
    at their conditional mode under the estimates. Standard errors are the
    delta-method transform of the inverse Hessian.

    For the independent kernel the latents are integrated out exactly and
    only (lambda0, alpha) are optimized.
    """
    counts = _counts(series)
    if priors is None:
        priors = PriorSpec.flat(family)
    if family == lg.INDEPENDENT:
        return _map_marginal(counts, priors, gtol, maxiter)
    rng = utils.make_rng(rng)
    obj = MapObjective(counts, family, priors)
    bounds = obj.bounds()
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    base = np.clip(obj.pack(*_start_values(family, priors, kernel_init)), lo,
            hi)
    # Raises NotPositiveDefinite if the starting point is unusable.
    obj.value(base)

    best = None
    for start in range(max(int(starts), 1)):
        z0 = base.copy()
        if start:
            z0 = np.clip(z0 + rng.normal(0.0, 0.2, obj.size), lo, hi)
        res = optimize.minimize(obj.safe_value_and_grad, z0, jac=True,
                method="L-BFGS-B", bounds=bounds,
                options={"gtol": gtol, "maxiter": maxiter})
        logger.debug("MAP start %s (%s): objective %.6g after %s iterations",
                start, family, res.fun, res.nit)
        if best is None or res.fun < best.fun:
            best = res

    grad_norm = _projected_grad_norm(best.jac, best.x, bounds)
    converged = bool(best.success) or grad_norm < 1e-4
    if not converged:
        logger.warning("MAP fit (%s) did not converge: %s", family,
                best.message)
        raise exc.NonConvergence("The MAP fit for family '%s' did not "
                "converge: %s" % (family, best.message), diagnostics={
                "message": str(best.message), "iterations": int(best.nit),
                "grad_norm": grad_norm, "objective": float(best.fun)})

    z = best.x
    lambda0, alpha, param = obj.unpack(z)
    for idx, (low, high) in enumerate(bounds):
        if z[idx] <= low or z[idx] >= high:
            logger.warning("MAP estimate of %s (%s) is on its bound.",
                    obj.names[idx], family)
    mode = obj.latent_mode(z)
    hess = utils.numerical_hessian(obj.gradient, z)
    cov = utils.safe_inverse(hess)
    with np.errstate(invalid="ignore"):
        se_u = np.sqrt(np.diag(cov))
        latent_sd = np.sqrt(np.maximum(obj.latent_variance(mode), 0.0))
    _, dparam_du = obj.kernel_param(z[2])
    names = obj.names
    estimates = dict(zip(names, (lambda0, alpha, param)))
    ses = dict(zip(names, (lambda0 * se_u[0], alpha * se_u[1],
            dparam_du * se_u[2])))
    return FitResult(family=family, param_name=names[2],
            lambda0=lambda0, alpha=alpha,
            estimates=estimates, standard_errors=ses, latents=mode.y,
            latent_sd=latent_sd, objective=-float(best.fun),
            converged=converged, grad_norm=grad_norm,
            iterations=int(best.nit), starts=max(int(starts), 1),
            priors=priors.to_dict(), _z=z, _hessian=hess)


def _map_marginal(counts, priors, gtol, maxiter):
    lambda0, alpha = _moment_start(counts)
    lambda0 = priors.means["lambda0"] if np.isfinite(
            priors.sd("lambda0")) else lambda0
    alpha = max(alpha, 0.05)

    def neg_post(x):
        lam0, alp = np.exp(x)
        return (_marginal_nll(counts, lam0, alp)
                - priors.logpdf("lambda0", lam0) - priors.logpdf("alpha", alp))

    def grad(x):
        return utils.central_gradient(neg_post, x)

    bounds = [LOG_LAMBDA0_BOUNDS, LOG_ALPHA_BOUNDS]
    x0 = np.array([np.log(lambda0), np.log(alpha)])
    res = optimize.minimize(neg_post, x0, jac=grad, method="L-BFGS-B",
            bounds=bounds, options={"gtol": gtol, "maxiter": maxiter})
    grad_norm = _projected_grad_norm(res.jac, res.x, bounds)
    converged = bool(res.success) or grad_norm < 1e-4
    if not converged:
        raise exc.NonConvergence("The MAP fit for the independent kernel did "
                "not converge: %s" % res.message, diagnostics={
                "message": str(res.message), "iterations": int(res.nit),
                "grad_norm": grad_norm, "objective": float(res.fun)})
    lambda0, alpha = (float(v) for v in np.exp(res.x))
    hess = utils.numerical_hessian(grad, res.x)
    with np.errstate(invalid="ignore"):
        se_u = np.sqrt(np.diag(utils.safe_inverse(hess)))
    latents, latent_sd = merton_core.latent_mode(counts, np.log(lambda0),
            alpha, 0.0, 1.0)
    return FitResult(family=lg.INDEPENDENT, param_name=None,
            lambda0=lambda0, alpha=alpha,
            estimates={"lambda0": lambda0, "alpha": alpha},
            standard_errors={"lambda0": lambda0 * se_u[0],
            "alpha": alpha * se_u[1]}, latents=latents, latent_sd=latent_sd,
            objective=-float(res.fun), converged=converged,
            grad_norm=grad_norm, iterations=int(res.nit), starts=1,
            priors=priors.to_dict(), _z=res.x, _hessian=hess)
