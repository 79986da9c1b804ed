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
Posterior sampling and model comparison for the exponential and power
decay models: WAIC, WBIC and leave-future-out (LFO) scores, the choice of
the prior scale sc, and the split-chain R-hat diagnostic.

The sampler is an adaptive random-walk Metropolis over the transformed
hyper-parameters of the MAP problem, started around the MAP with proposals
shaped by the inverse Hessian there and refitted from the warmup draws.
Latent paths are drawn per kept draw from their Gaussian approximation.
Chains run one after the other, each with its own generator spawned from
the caller's, so results depend only on the seed.
"""

import logging

import numpy as np
from scipy import linalg
from scipy import special

import pymerton.exceptions as exc
from pymerton import inference
from pymerton import latent_gaussian as lg
from pymerton import merton_core
from pymerton.resource import BaseResult
from pymerton import utils

logger = logging.getLogger(__name__)

COMPARISON_SCHEMA = "pymerton.comparison/1"
DEFAULT_SC_GRID = (1, 2, 3, 4, 5, 10, 20)
CRITERIA = ("lfo", "waic", "wbic")

# Acceptance band the warmup steers the proposal scale into.
TARGET_ACCEPTANCE = (0.2, 0.4)
ADAPT_EVERY = 50
# Fractions of the warmup at which the proposal covariance is refitted from
# the chain, and the weight of the fitted covariance in the blend.
COV_UPDATES = (0.25, 0.5, 0.75)
COV_BLEND = 0.9
RHAT_THRESHOLD = 1.1


class PosteriorDraws(BaseResult):
    """
    Draws pooled over chains: `params` is S x P with columns `names`,
    `chain` holds the chain id of each draw and, for model posteriors,
    `latents` is S x T and `loglik` the S x T pointwise log-likelihood.
    """
    _non_display = ["params", "chain", "latents", "loglik", "logp"]

    def column(self, parameter):
        if isinstance(parameter, str):
            try:
                parameter = list(self.names).index(parameter)
            except ValueError:
                raise exc.InvalidParameter("No parameter named '%s'; have "
                        "%s." % (parameter, ", ".join(self.names)))
        return np.asarray(self.params)[:, parameter]

    def by_chain(self, parameter):
        """Returns the draws of one parameter as a chains x n array."""
        values = self.column(parameter)
        chain = np.asarray(self.chain)
        return np.array([values[chain == cid] for cid in np.unique(chain)])

    @property
    def size(self):
        return int(np.asarray(self.params).shape[0])


def _proposal_factor(cov, size):
    cov = np.asarray(cov, dtype=float)
    try:
        return linalg.cholesky(0.5 * (cov + cov.T), lower=True)
    except (linalg.LinAlgError, ValueError):
        diag = np.abs(np.diag(cov)) if cov.ndim == 2 else np.ones(size)
        diag = np.where(np.isfinite(diag) & (diag > 0), diag, 1e-2)
        return np.diag(np.sqrt(diag))


def _adapt_steps(warmup):
    """Warmup steps, on batch boundaries, that refit the proposal."""
    steps = set()
    for frac in COV_UPDATES:
        batches = max(1, int(round(frac * warmup / float(ADAPT_EVERY))))
        if batches * ADAPT_EVERY < warmup:
            steps.add(batches * ADAPT_EVERY)
    return steps


def _refit_proposal(history, initial_cov):
    """
    Blends the covariance of the second half of the warmup draws so far
    with the initial proposal covariance. Returns None when the draws have
    not moved in some coordinate.
    """
    window = history[history.shape[0] // 2:]
    if window.shape[0] <= 2 * window.shape[1]:
        return None
    emp = np.atleast_2d(np.cov(window, rowvar=False))
    if not (np.all(np.isfinite(emp)) and np.all(np.diag(emp) > 0)):
        return None
    blended = COV_BLEND * emp + (1.0 - COV_BLEND) * initial_cov
    try:
        return linalg.cholesky(blended, lower=True)
    except linalg.LinAlgError:
        return None


def random_walk_metropolis(log_density, start, proposal_cov, rng, warmup=1000,
        draws=1000, thin=5):
    """
    Runs one chain of random-walk Metropolis with Gaussian proposals
    scale * L @ e, where L L' is the proposal covariance. The scale starts
    at 2.38 / sqrt(d) and during warmup is shrunk or grown after every
    batch whose acceptance falls outside TARGET_ACCEPTANCE. At a few points
    of the warmup the covariance itself is re-estimated from the chain's
    draws, blended with `proposal_cov`, and the scale is reset.

    Returns (samples, logps, acceptance, scale) for the kept draws.
    """
    rng = utils.make_rng(rng)
    current = np.array(start, dtype=float)
    size = current.size
    lower = _proposal_factor(proposal_cov, size)
    initial_cov = lower @ lower.T
    scale = 2.38 / np.sqrt(size)
    logp = log_density(current)
    if not np.isfinite(logp):
        raise exc.InvalidParameter("The chain starts at a point of zero "
                "density.")
    warmup = int(warmup)
    refits = _adapt_steps(warmup)
    history = np.empty((warmup, size))
    samples = np.empty((int(draws), size))
    logps = np.empty(int(draws))
    accepted = 0
    batch = 0
    total = warmup + int(draws) * int(thin)
    for step in range(total):
        proposal = current + scale * (lower @ rng.standard_normal(size))
        logq = log_density(proposal)
        if np.isfinite(logq) and np.log(rng.uniform()) < logq - logp:
            current, logp = proposal, logq
            batch += 1
            if step >= warmup:
                accepted += 1
        if step < warmup:
            history[step] = current
            if (step + 1) % ADAPT_EVERY == 0:
                rate = batch / float(ADAPT_EVERY)
                if rate < TARGET_ACCEPTANCE[0]:
                    scale *= 0.7
                elif rate > TARGET_ACCEPTANCE[1]:
                    scale *= 1.4
                batch = 0
            if step + 1 in refits:
                refit = _refit_proposal(history[:step + 1], initial_cov)
                if refit is not None:
                    lower = refit
                    scale = 2.38 / np.sqrt(size)
        kept = step - warmup
        if kept >= 0 and (kept + 1) % thin == 0:
            idx = kept // thin
            samples[idx] = current
            logps[idx] = logp
    acceptance = accepted / float(max(int(draws) * int(thin), 1))
    return samples, logps, acceptance, scale


def sample_density(log_density, start, proposal_cov, rng=None, chains=4,
        warmup=1000, draws=1000, thin=5, names=None, spread=1.0):
    """
    Runs `chains` chains of random_walk_metropolis on any log density.
    Chain starts are drawn around `start` from N(start, spread^2 *
    proposal_cov); a start with zero density falls back to `start` itself.
    """
    rng = utils.make_rng(rng)
    start = np.asarray(start, dtype=float)
    lower = _proposal_factor(proposal_cov, start.size)
    params = []
    logps = []
    chain_ids = []
    acceptance = []
    for cid, crng in enumerate(utils.spawn_rngs(rng, chains)):
        init = start + spread * (lower @ crng.standard_normal(start.size))
        if not np.isfinite(log_density(init)):
            init = start
        samples, lps, acc, scale = random_walk_metropolis(log_density, init,
                proposal_cov, crng, warmup=warmup, draws=draws, thin=thin)
        logger.debug("Chain %s: acceptance %.3f, final scale %.4g", cid, acc,
                scale)
        params.append(samples)
        logps.append(lps)
        chain_ids.append(np.full(len(samples), cid))
        acceptance.append(acc)
    if names is None:
        names = ["x%s" % idx for idx in range(start.size)]
    return PosteriorDraws(params=np.vstack(params), names=list(names),
            chain=np.concatenate(chain_ids), logp=np.concatenate(logps),
            acceptance=acceptance, chains=int(chains), draws=int(draws),
            warmup=int(warmup), thin=int(thin))


def _laplace_cov(obj, z):
    hess = utils.numerical_hessian(obj.gradient, z)
    cov = utils.safe_inverse(hess)
    if not np.all(np.isfinite(cov)):
        return np.diag(np.full(z.size, 1e-2))
    return cov


def posterior_sample(series, family, priors, chains=4, draws=1000, rng=None,
        warmup=1000, thin=5, temperature=1.0, fit=None, check_rhat=True):
    """
    Samples the posterior of (lambda0, alpha, theta or gamma, y_1..y_T).
    The chains run over the three hyper-parameters, whose density has the
    latents integrated out by the Laplace approximation, and for every kept
    draw a latent path is drawn from the Gaussian approximation of the
    latents given that draw. The likelihood is raised to `temperature`;
    the priors are not. Chains start around the MAP (computed here unless
    `fit` is given) with proposals shaped by the inverse Hessian of the
    sampled density, and stay inside the bounds of the MAP problem.

    Raises NonConvergence when R-hat of any of the three parameters
    exceeds RHAT_THRESHOLD and `check_rhat` is set.
    """
    rng = utils.make_rng(rng)
    fit_rng, chain_rng, latent_rng = utils.spawn_rngs(rng, 3)
    counts = inference._counts(series)
    if fit is None:
        fit = inference.map_estimate(series, family, priors, rng=fit_rng)
    obj = inference.MapObjective(counts, family, priors,
            temperature=temperature, jacobian=True)
    z_map = np.asarray(fit._z, dtype=float)
    bounds = np.array(obj.bounds())

    def log_density(z):
        if np.any(z < bounds[:, 0]) or np.any(z > bounds[:, 1]):
            return -np.inf
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                val = -obj.value(z)
        except (exc.NotPositiveDefinite, exc.InvalidParameter):
            return -np.inf
        return val if np.isfinite(val) else -np.inf

    cov = _laplace_cov(obj, z_map)
    raw = sample_density(log_density, z_map, cov, chain_rng, chains=chains,
            warmup=warmup, draws=draws, thin=thin)
    zs = raw.params
    latents = np.empty((zs.shape[0], obj.T))
    for idx, z in enumerate(zs):
        latents[idx] = obj.sample_latents(z, latent_rng)[0]
    lambda0 = np.exp(zs[:, 0])
    alpha = np.exp(zs[:, 1])
    if family == lg.EXPONENTIAL:
        param = special.expit(zs[:, 2])
    else:
        param = np.exp(zs[:, 2])
    loglik = inference.pointwise_loglik(counts[None, :], lambda0[:, None],
            alpha[:, None], latents)
    draws_out = PosteriorDraws(params=np.column_stack([lambda0, alpha, param]),
            names=list(obj.names), chain=raw.chain, latents=latents,
            loglik=loglik, logp=raw.logp, acceptance=raw.acceptance,
            family=family, temperature=float(temperature),
            chains=raw.chains, draws=raw.draws, warmup=raw.warmup,
            thin=raw.thin)
    rhats = dict((name, rhat(draws_out, name)) for name in obj.names)
    draws_out.rhat = rhats
    logger.debug("Posterior (%s, temperature %.4g): R-hat %s", family,
            temperature, rhats)
    if check_rhat and max(rhats.values()) > RHAT_THRESHOLD:
        logger.warning("Sampler did not converge for '%s': R-hat %s", family,
                rhats)
        raise exc.NonConvergence("The posterior sampler for '%s' did not "
                "converge (max R-hat %.3f > %s)." % (family,
                max(rhats.values()), RHAT_THRESHOLD), diagnostics={
                "rhat": rhats, "acceptance": raw.acceptance})
    return draws_out


def rhat(draws, parameter):
    """
    The split-chain Gelman-Rubin potential scale reduction factor. Chains
    that are all the same constant give 1.0.
    """
    values = draws.by_chain(parameter)
    chains, size = values.shape
    if chains < 2 or size < 10:
        raise exc.InsufficientDraws("R-hat needs at least 2 chains of 10 "
                "draws; got %s chains of %s." % (chains, size))
    half = size // 2
    # Drop the first draw of odd-length chains so the halves match.
    values = values[:, size - 2 * half:]
    split = np.vstack([values[:, :half], values[:, half:]])
    means = split.mean(axis=1)
    within = float(np.mean(split.var(axis=1, ddof=1)))
    between = half * float(np.var(means, ddof=1))
    if within == 0:
        return 1.0 if between == 0 else np.inf
    var_plus = (half - 1.0) / half * within + between / half
    return float(np.sqrt(var_plus / within))


def _loglik_matrix(draws):
    if isinstance(draws, PosteriorDraws):
        return np.asarray(draws.loglik, dtype=float)
    return np.asarray(draws, dtype=float)


def waic_components(draws):
    """
    Returns (lppd, p_waic): lppd = sum_t log mean_s exp(ll_st) and
    p_waic = sum_t var_s(ll_st), with the unbiased variance when S > 1.
    """
    ll = _loglik_matrix(draws)
    size = ll.shape[0]
    lppd = float(np.sum(special.logsumexp(ll, axis=0) - np.log(size)))
    ddof = 1 if size > 1 else 0
    p_waic = float(np.sum(np.var(ll, axis=0, ddof=ddof)))
    return lppd, p_waic


def waic(draws):
    """WAIC = -2 * (lppd - p_waic); lower is better."""
    lppd, p_waic = waic_components(draws)
    return -2.0 * (lppd - p_waic)


def wbic_temperature(T):
    return 1.0 / np.log(T)


def wbic(series, family, priors, rng=None, chains=4, draws=1000, warmup=1000,
        thin=5, temperature=None, fit=None, check_rhat=True):
    """
    WBIC on the deviance scale: -2 * E[sum_t ll_t] under the posterior with
    the likelihood tempered at 1 / log T. Lower is better.
    """
    T = inference._counts(series).size
    if T < 2:
        raise exc.InsufficientPoints("WBIC needs at least 2 years; got %s."
                % T)
    if temperature is None:
        temperature = wbic_temperature(T)
    sample = posterior_sample(series, family, priors, chains=chains,
            draws=draws, rng=rng, warmup=warmup, thin=thin,
            temperature=temperature, fit=fit, check_rhat=check_rhat)
    return -2.0 * float(np.mean(np.sum(sample.loglik, axis=1)))


def default_t0_range(T):
    """
    Training-prefix lengths for LFO: 50..100 in steps of 5 for long series,
    30..42 for medium ones, and the second half otherwise.
    """
    T = int(T)
    if T > 100:
        return list(range(50, 101, 5))
    if T > 42:
        return list(range(30, 43))
    return list(range(max(3, T // 2), T))


def lfo_terms(series, family, priors, t0_range, rng=None, starts=5, gtol=1e-6,
        maxiter=500):
    """
    One leave-future-out term per t0: the MAP fit on years 1..t0, the
    forecast of y_{t0+1} from the fitted latents, and the log predictive
    probability of k*_{t0+1}.
    """
    counts = inference._counts(series)
    t0_range = [int(t0) for t0 in t0_range]
    if not t0_range:
        raise exc.InvalidParameter("The t0 range is empty.")
    if max(t0_range) >= counts.size:
        raise exc.InvalidParameter("Every t0 must be below T=%s; got %s."
                % (counts.size, max(t0_range)))
    if min(t0_range) < 3:
        raise exc.InvalidParameter("Every t0 must be at least 3; got %s."
                % min(t0_range))
    terms = []
    for t0, child in zip(t0_range, utils.spawn_rngs(rng, len(t0_range))):
        try:
            fit = inference.map_estimate(counts[:t0], family, priors,
                    rng=child, starts=starts, gtol=gtol, maxiter=maxiter)
            if family == lg.INDEPENDENT:
                mean, var = 0.0, 1.0
            else:
                mean, var = lg.conditional_forecast(fit.kernel(),
                        fit.latents, 1)
        except exc.PymertonException as e:
            err = utils.update_exc(e, "LFO refit at t0=%s" % t0)
            raise exc.LfoRefitFailed(err.message, t0=t0,
                    details=getattr(e, "details", None)) from e
        logp = merton_core.log_poisson_normal(counts[t0], fit.lambda0,
                fit.alpha, mean, var)
        terms.append({"t0": t0, "k": float(counts[t0]), "mean": mean,
                "var": var, "logp": float(logp), "lambda0": fit.lambda0,
                "alpha": fit.alpha, "param": fit.param})
    return terms


def lfo(series, family, priors, t0_range, rng=None, **kwargs):
    """LFO = -sum over t0 of the log predictive density. Lower is better."""
    terms = lfo_terms(series, family, priors, t0_range, rng=rng, **kwargs)
    return -float(sum(term["logp"] for term in terms))


class ScaleSelection(BaseResult):
    """The selected sc and its LFO score. Unpacks as (sc, score)."""
    def __iter__(self):
        return iter((self.sc, self.score))


def select_sc(series, family, sc_grid=DEFAULT_SC_GRID, t0_range=None,
        rng=None, prelim=None, **kwargs):
    """
    Evaluates LFO for each sc in the grid and returns the lowest. A sc whose
    refits fail scores inf and is skipped; ties go to the smaller sc.
    """
    grid = sorted(set(float(sc) for sc in sc_grid))
    if not grid:
        raise exc.InvalidParameter("The sc grid is empty.")
    counts = inference._counts(series)
    if t0_range is None:
        t0_range = default_t0_range(counts.size)
    if prelim is None:
        prelim = inference.preliminary_estimates(series)
    scores = {}
    for sc, child in zip(grid, utils.spawn_rngs(rng, len(grid))):
        try:
            priors = inference.PriorSpec.from_preliminary(prelim, family, sc)
            scores[sc] = lfo(series, family, priors, t0_range, rng=child,
                    **kwargs)
        except exc.PymertonException as e:
            logger.warning("sc=%s for '%s' failed: %s", sc, family, e)
            scores[sc] = np.inf
        logger.debug("LFO for '%s' at sc=%s: %.6g", family, sc, scores[sc])
    best = None
    for sc in grid:
        if np.isfinite(scores[sc]) and (best is None
                or scores[sc] < scores[best]):
            best = sc
    if best is None:
        raise exc.ModelSelectionFailed("No sc in %s gave a finite LFO score "
                "for '%s'." % (grid, family))
    return ScaleSelection(family=family, sc=best, score=scores[best],
            scores=dict((str(sc), scores[sc]) for sc in grid))


class ComparisonReport(BaseResult):
    """
    LFO, WAIC and WBIC for each model with the selected sc, and the winner
    of each criterion (lowest score; ties go to the first model listed).
    """
    def to_rows(self):
        """
        Rows in the layout of a model comparison table: one row per
        criterion with a column per model and the winner.
        """
        rows = []
        labels = list(self.labels)
        for crit in CRITERIA:
            row = {"criterion": crit.upper()}
            for label in labels:
                row[label] = self.models[label][crit]
            row["best"] = self.winners[crit]
            rows.append(row)
        row = {"criterion": "sc"}
        for label in labels:
            row[label] = self.models[label]["sc"]
        row["best"] = ""
        rows.append(row)
        return rows


def _labels(families):
    labels = []
    for family in families:
        label = family
        count = 2
        while label in labels:
            label = "%s#%s" % (family, count)
            count += 1
        labels.append(label)
    return labels


def compare_models(series, t0_range=None, rng=None, sc_grid=DEFAULT_SC_GRID,
        families=(lg.EXPONENTIAL, lg.POWER), sc=None, chains=4, draws=1000,
        warmup=1000, thin=5, starts=5, gtol=1e-6, maxiter=500,
        check_rhat=True):
    """
    Scores each family: sc by select_sc (unless `sc` is given), then the
    MAP fit, the posterior sample for WAIC and the tempered sample for WBIC.
    """
    rng = utils.make_rng(rng)
    counts = inference._counts(series)
    if t0_range is None:
        t0_range = default_t0_range(counts.size)
    t0_range = [int(t0) for t0 in t0_range]
    prelim = inference.preliminary_estimates(series)
    labels = _labels(families)
    fit_kw = {"starts": starts, "gtol": gtol, "maxiter": maxiter}
    sampler_kw = {"chains": chains, "draws": draws, "warmup": warmup,
            "thin": thin, "check_rhat": check_rhat}
    models = {}
    for label, family, frng in zip(labels, families,
            utils.spawn_rngs(rng, len(labels))):
        sel_rng, fit_rng, post_rng, wbic_rng, lfo_rng = utils.spawn_rngs(
                frng, 5)
        if sc is None:
            chosen, lfo_score = select_sc(series, family, sc_grid, t0_range,
                    rng=sel_rng, prelim=prelim, **fit_kw)
            priors = inference.PriorSpec.from_preliminary(prelim, family,
                    chosen)
        else:
            chosen = float(sc)
            priors = inference.PriorSpec.from_preliminary(prelim, family,
                    chosen)
            lfo_score = lfo(series, family, priors, t0_range, rng=lfo_rng,
                    **fit_kw)
        fit = inference.map_estimate(series, family, priors, rng=fit_rng,
                **fit_kw)
        sample = posterior_sample(series, family, priors, rng=post_rng,
                fit=fit, **sampler_kw)
        lppd, p_waic = waic_components(sample)
        wbic_score = wbic(series, family, priors, rng=wbic_rng, fit=fit,
                **sampler_kw)
        models[label] = {"family": family, "sc": chosen, "lfo": lfo_score,
                "waic": -2.0 * (lppd - p_waic), "wbic": wbic_score,
                "lppd": lppd, "p_waic": p_waic, "rhat": sample.rhat,
                "acceptance": sample.acceptance,
                "estimates": fit.estimates,
                "standard_errors": fit.standard_errors}
        logger.info("Model '%s': sc=%s LFO=%.4f WAIC=%.4f WBIC=%.4f", label,
                chosen, lfo_score, models[label]["waic"], wbic_score)
    winners = {}
    for crit in CRITERIA:
        scores = [models[label][crit] for label in labels]
        if not all(np.isfinite(scores)):
            raise exc.ModelSelectionFailed("A %s score is not finite: %s"
                    % (crit.upper(), dict(zip(labels, scores))))
        winners[crit] = labels[int(np.argmin(scores))]
    for label in labels:
        models[label]["best"] = [crit for crit in CRITERIA
                if winners[crit] == label]
    return ComparisonReport(schema=COMPARISON_SCHEMA, labels=labels,
            models=models, winners=winners, t0_range=t0_range,
            sc_grid=[float(s) for s in sc_grid], T=int(counts.size))
