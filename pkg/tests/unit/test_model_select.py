#!/usr/bin/env python
# -*- coding: utf-8 -*-

import unittest

from mock import patch

import numpy as np
from scipy import stats

import pymerton.exceptions as exc
from pymerton import inference
from pymerton import latent_gaussian as lg
from pymerton import merton_core
from pymerton import model_select as ms
from tests.unit import fakes



def _normal_density(x):
    return -0.5 * float(np.dot(x, x))


class SamplerTest(unittest.TestCase):
    def __init__(self, *args, **kwargs):
        super(SamplerTest, self).__init__(*args, **kwargs)

    def setUp(self):
        self.rng = np.random.default_rng(fakes.SEED)

    def tearDown(self):
        self.rng = None

    def test_standard_normal(self):
        draws = ms.sample_density(_normal_density, np.zeros(2), np.eye(2),
                self.rng, chains=4, warmup=500, draws=1000, thin=2)
        self.assertEqual(draws.params.shape, (4000, 2))
        np.testing.assert_allclose(draws.params.mean(axis=0), np.zeros(2),
                atol=0.15)
        np.testing.assert_allclose(draws.params.var(axis=0), np.ones(2),
                atol=0.2)
        self.assertEqual(draws.names, ["x0", "x1"])

    def test_gamma_poisson_posterior(self):
        # Gamma(2, 1) prior on a Poisson rate, sampled in log space.
        counts = np.array([3, 7, 4, 6, 5, 8, 2, 5, 4, 6])
        shape = 2.0 + counts.sum()
        rate = 1.0 + counts.size

        def log_density(u):
            return float(shape * u[0] - rate * np.exp(u[0]))

        start = np.array([np.log(counts.mean())])
        draws = ms.sample_density(log_density, start, [[0.05]], self.rng,
                chains=4, warmup=500, draws=1000, thin=3, names=["log_rate"])
        rates = np.exp(draws.column("log_rate"))
        self.assertAlmostEqual(rates.mean(), shape / rate, delta=0.1)
        self.assertAlmostEqual(rates.std(), np.sqrt(shape) / rate, delta=0.1)
        self.assertTrue(ms.rhat(draws, "log_rate") < 1.05)

    def test_acceptance_in_band(self):
        _, _, acceptance, scale = ms.random_walk_metropolis(_normal_density,
                np.zeros(3), np.eye(3), self.rng, warmup=2000, draws=500,
                thin=2)
        self.assertTrue(0.1 < acceptance < 0.6)
        self.assertTrue(scale > 0)

    def test_zero_density_start(self):
        def log_density(x):
            return -np.inf if x[0] < 0 else 0.0

        self.assertRaises(exc.InvalidParameter, ms.random_walk_metropolis,
                log_density, [-1.0], [[1.0]], self.rng)

    def test_deterministic(self):
        one = ms.sample_density(_normal_density, np.zeros(2), np.eye(2), 42,
                chains=2, warmup=100, draws=50, thin=1)
        two = ms.sample_density(_normal_density, np.zeros(2), np.eye(2), 42,
                chains=2, warmup=100, draws=50, thin=1)
        np.testing.assert_array_equal(one.params, two.params)

    def test_bad_proposal_falls_back_to_diagonal(self):
        cov = np.array([[1.0, 2.0], [2.0, 1.0]])
        draws = ms.sample_density(_normal_density, np.zeros(2), cov,
                self.rng, chains=2, warmup=100, draws=20, thin=1)
        self.assertEqual(draws.size, 40)

    def test_adapt_steps(self):
        self.assertEqual(ms._adapt_steps(1000), set([250, 500, 750]))
        self.assertEqual(ms._adapt_steps(100), set([50]))
        self.assertEqual(ms._adapt_steps(40), set())

    def test_refit_proposal(self):
        target = np.array([[1.0, 0.9], [0.9, 1.0]])
        history = self.rng.multivariate_normal(np.zeros(2), target, 4000)
        lower = ms._refit_proposal(history, np.eye(2))
        expected = (ms.COV_BLEND * np.cov(history[2000:], rowvar=False)
                + (1.0 - ms.COV_BLEND) * np.eye(2))
        np.testing.assert_allclose(lower @ lower.T, expected, atol=1e-12)
        self.assertIsNone(ms._refit_proposal(history[:8], np.eye(2)))
        stuck = np.column_stack([history[:, 0], np.ones(4000)])
        self.assertIsNone(ms._refit_proposal(stuck, np.eye(2)))

    def test_proposal_refitted_during_warmup(self):
        target = np.array([[1.0, 0.95], [0.95, 1.0]])
        precision = np.linalg.inv(target)

        def log_density(x):
            return -0.5 * float(x @ precision @ x)

        with patch.object(ms, "_refit_proposal",
                wraps=ms._refit_proposal) as refit:
            samples, _, acceptance, _ = ms.random_walk_metropolis(
                    log_density, np.zeros(2), 0.01 * np.eye(2), self.rng,
                    warmup=1000, draws=2000, thin=2)
        sizes = [call[0][0].shape[0] for call in refit.call_args_list]
        self.assertEqual(sizes, [250, 500, 750])
        self.assertTrue(0.1 < acceptance < 0.6)
        np.testing.assert_allclose(np.cov(samples, rowvar=False), target,
                atol=0.3)

    def test_posterior_draws_access(self):
        draws = ms.PosteriorDraws(params=np.arange(12.0).reshape(6, 2),
                names=["a", "b"], chain=np.array([0, 0, 0, 1, 1, 1]))
        np.testing.assert_array_equal(draws.column("b"), [1, 3, 5, 7, 9, 11])
        np.testing.assert_array_equal(draws.by_chain("a"), [[0, 2, 4],
                [6, 8, 10]])
        self.assertRaises(exc.InvalidParameter, draws.column, "c")

    def _draws(self, values):
        values = np.asarray(values, dtype=float)
        chains, size = values.shape
        return ms.PosteriorDraws(params=values.reshape(-1, 1), names=["a"],
                chain=np.repeat(np.arange(chains), size))

    def test_rhat(self):
        self.assertEqual(ms.rhat(self._draws(np.ones((3, 20))), "a"), 1.0)
        self.assertTrue(np.isinf(ms.rhat(self._draws(
                [np.ones(20), 2 * np.ones(20)]), "a")))
        mixed = self.rng.standard_normal((4, 500))
        self.assertTrue(ms.rhat(self._draws(mixed), "a") < 1.02)
        stuck = mixed + np.arange(4)[:, None] * 3.0
        self.assertTrue(ms.rhat(self._draws(stuck), "a") > ms.RHAT_THRESHOLD)

    def test_rhat_insufficient(self):
        self.assertRaises(exc.InsufficientDraws, ms.rhat,
                self._draws(np.zeros((1, 50))), "a")
        self.assertRaises(exc.InsufficientDraws, ms.rhat,
                self._draws(np.zeros((2, 9))), "a")



class CriteriaTest(unittest.TestCase):
    def __init__(self, *args, **kwargs):
        super(CriteriaTest, self).__init__(*args, **kwargs)

    def setUp(self):
        self.rng = np.random.default_rng(fakes.SEED)
        self.series = fakes.fake_series(T=20)

    def tearDown(self):
        self.rng = None

    def test_waic_components(self):
        ll = np.log(np.array([[0.5, 0.2], [0.3, 0.4]]))
        lppd, p_waic = ms.waic_components(ll)
        self.assertAlmostEqual(lppd, np.log(0.4) + np.log(0.3))
        expected = np.var(ll[:, 0], ddof=1) + np.var(ll[:, 1], ddof=1)
        self.assertAlmostEqual(p_waic, expected)
        self.assertAlmostEqual(ms.waic(ll), -2 * (lppd - p_waic))

    def test_waic_permutation_invariant(self):
        ll = self.rng.normal(-2.0, 0.5, size=(300, 12))
        shuffled = ll[self.rng.permutation(300)]
        self.assertAlmostEqual(ms.waic(shuffled), ms.waic(ll), places=9)
        lppd, p_waic = ms.waic_components(ll)
        self.assertTrue(lppd >= float(np.sum(ll.mean(axis=0))))
        self.assertTrue(p_waic > 0)

    def test_waic_single_draw(self):
        ll = np.log(np.array([[0.5, 0.2]]))
        lppd, p_waic = ms.waic_components(ll)
        self.assertAlmostEqual(lppd, np.log(0.1))
        self.assertEqual(p_waic, 0.0)

    def test_waic_accepts_draws(self):
        ll = np.log(np.array([[0.5, 0.2], [0.3, 0.4]]))
        draws = ms.PosteriorDraws(loglik=ll)
        self.assertEqual(ms.waic(draws), ms.waic(ll))

    def test_wbic_temperature(self):
        self.assertAlmostEqual(ms.wbic_temperature(np.exp(2.0)), 0.5)

    def test_wbic(self):
        loglik = np.array([[-1.0, -2.0], [-3.0, -2.0]])
        with patch.object(ms, "posterior_sample",
                return_value=ms.PosteriorDraws(loglik=loglik)) as sampler:
            score = ms.wbic(self.series, lg.EXPONENTIAL, fakes.toy_priors())
        self.assertAlmostEqual(score, 8.0)
        kwargs = sampler.call_args[1]
        self.assertAlmostEqual(kwargs["temperature"], 1.0 / np.log(20))

    def test_wbic_insufficient(self):
        self.assertRaises(exc.InsufficientPoints, ms.wbic, [5], lg.POWER,
                fakes.toy_priors(lg.POWER))

    def test_posterior_sample(self):
        priors = fakes.toy_priors()
        draws = ms.posterior_sample(self.series, lg.EXPONENTIAL, priors,
                chains=2, draws=50, warmup=200, thin=2, rng=self.rng,
                check_rhat=False)
        self.assertEqual(draws.params.shape, (100, 3))
        self.assertEqual(draws.latents.shape, (100, 20))
        self.assertEqual(draws.loglik.shape, (100, 20))
        self.assertEqual(draws.names, ["lambda0", "alpha", "theta"])
        self.assertEqual(sorted(draws.rhat), ["alpha", "lambda0", "theta"])
        self.assertTrue(np.all((draws.column("theta") > 0)
                & (draws.column("theta") < 1)))
        self.assertTrue(np.all(draws.column("alpha") > 0))

    def test_posterior_sample_unit_temperature(self):
        priors = fakes.toy_priors()
        plain = ms.posterior_sample(self.series, lg.EXPONENTIAL, priors,
                chains=2, draws=20, warmup=60, thin=1, rng=3,
                check_rhat=False)
        unit = ms.posterior_sample(self.series, lg.EXPONENTIAL, priors,
                chains=2, draws=20, warmup=60, thin=1, rng=3,
                check_rhat=False, temperature=1.0)
        np.testing.assert_array_equal(unit.params, plain.params)
        np.testing.assert_array_equal(unit.loglik, plain.loglik)

    def test_posterior_sample_non_convergence(self):
        priors = fakes.toy_priors()
        with patch.object(ms, "rhat", return_value=2.0):
            self.assertRaises(exc.NonConvergence, ms.posterior_sample,
                    self.series, lg.EXPONENTIAL, priors, chains=2, draws=20,
                    warmup=50, thin=1, rng=1)

    def test_default_t0_range(self):
        self.assertEqual(ms.default_t0_range(104), list(range(50, 101, 5)))
        self.assertEqual(ms.default_t0_range(43), list(range(30, 43)))
        self.assertEqual(ms.default_t0_range(20), list(range(10, 20)))
        self.assertEqual(ms.default_t0_range(5), [3, 4])



class LfoTest(unittest.TestCase):
    def __init__(self, *args, **kwargs):
        super(LfoTest, self).__init__(*args, **kwargs)

    def setUp(self):
        self.counts = np.array([3.0, 5.0, 7.0, 9.0, 11.0, 13.0])
        self.priors = fakes.toy_priors()

    def tearDown(self):
        self.counts = None

    def test_lfo_poisson_limit(self):
        # With alpha = 0 each term is a plain Poisson log probability.
        fit = fakes.FakeFit(lambda0=10.0, alpha=0.0)
        with patch.object(inference, "map_estimate",
                return_value=fit) as mapper:
            terms = ms.lfo_terms(self.counts, lg.EXPONENTIAL, self.priors,
                    [3, 4, 5], rng=1)
            score = ms.lfo(self.counts, lg.EXPONENTIAL, self.priors,
                    [3, 4, 5], rng=1)
        self.assertEqual([t["t0"] for t in terms], [3, 4, 5])
        self.assertEqual([t["k"] for t in terms], [9.0, 11.0, 13.0])
        expected = stats.poisson.logpmf([9, 11, 13], 10.0)
        np.testing.assert_allclose([t["logp"] for t in terms], expected)
        self.assertAlmostEqual(score, -expected.sum())
        first = mapper.call_args_list[0][0]
        np.testing.assert_array_equal(first[0], self.counts[:3])

    def test_lfo_uses_forecast(self):
        fit = fakes.FakeFit(lambda0=10.0, alpha=0.5, param=0.5,
                latents=np.array([0.0, 0.0, 2.0]))
        with patch.object(inference, "map_estimate", return_value=fit):
            terms = ms.lfo_terms(self.counts, lg.EXPONENTIAL, self.priors,
                    [3], rng=1)
        self.assertAlmostEqual(terms[0]["mean"], 1.0)
        self.assertAlmostEqual(terms[0]["var"], 0.75)

    def test_lfo_independent(self):
        fit = fakes.FakeFit(family=lg.INDEPENDENT, lambda0=10.0, alpha=0.5,
                param=None)
        with patch.object(inference, "map_estimate", return_value=fit):
            terms = ms.lfo_terms(self.counts, lg.INDEPENDENT, self.priors,
                    [4], rng=1)
        self.assertEqual((terms[0]["mean"], terms[0]["var"]), (0.0, 1.0))

    def test_lfo_term_recomputed_alone(self):
        counts = fakes.fake_counts(T=30)
        terms = ms.lfo_terms(counts, lg.EXPONENTIAL, self.priors, [20, 24],
                rng=3, starts=1)
        alone = ms.lfo_terms(counts, lg.EXPONENTIAL, self.priors, [24],
                rng=11, starts=1)[0]
        self.assertAlmostEqual(alone["logp"], terms[1]["logp"], delta=1e-10)
        fit = inference.map_estimate(counts[:24], lg.EXPONENTIAL, self.priors,
                starts=1)
        mean, var = lg.conditional_forecast(fit.kernel(), fit.latents, 1)
        logp = merton_core.log_poisson_normal(counts[24], fit.lambda0,
                fit.alpha, mean, var)
        self.assertAlmostEqual(logp, terms[1]["logp"], delta=1e-10)
        self.assertAlmostEqual(mean, terms[1]["mean"], delta=1e-10)

    def test_lfo_bad_range(self):
        for t0_range in ([], [6], [2, 3]):
            self.assertRaises(exc.InvalidParameter, ms.lfo_terms,
                    self.counts, lg.EXPONENTIAL, self.priors, t0_range)

    def test_lfo_refit_failure(self):
        boom = exc.NonConvergence("no progress", diagnostics={"nit": 3})
        with patch.object(inference, "map_estimate", side_effect=boom):
            try:
                ms.lfo_terms(self.counts, lg.EXPONENTIAL, self.priors, [3, 4])
            except exc.LfoRefitFailed as e:
                self.assertEqual(e.t0, 3)
                self.assertTrue("t0=3" in str(e))
                self.assertEqual(e.details, {"nit": 3})
            else:
                self.fail("LfoRefitFailed not raised")

    def test_select_sc(self):
        scores = {1.0: 5.0, 2.0: 3.0, 3.0: 3.0}

        def fake_lfo(series, family, priors, t0_range, rng=None, **kw):
            if priors.sc not in scores:
                raise exc.LfoRefitFailed("failed", t0=3)
            return scores[priors.sc]

        with patch.object(ms, "lfo", side_effect=fake_lfo):
            sel = ms.select_sc(self.counts, lg.EXPONENTIAL, [4, 3, 2, 1],
                    [3, 4], rng=1, prelim=fakes.fake_preliminary())
        sc, score = sel
        self.assertEqual(sc, 2.0)
        self.assertEqual(score, 3.0)
        self.assertTrue(np.isinf(sel.scores["4.0"]))
        self.assertEqual(sorted(sel.scores), ["1.0", "2.0", "3.0", "4.0"])

    def test_select_sc_all_fail(self):
        with patch.object(ms, "lfo", side_effect=exc.FitFailure("no")):
            self.assertRaises(exc.ModelSelectionFailed, ms.select_sc,
                    self.counts, lg.POWER, [1, 2], [3],
                    prelim=fakes.fake_preliminary())

    def test_select_sc_empty_grid(self):
        self.assertRaises(exc.InvalidParameter, ms.select_sc, self.counts,
                lg.POWER, [], [3], prelim=fakes.fake_preliminary())



class CompareModelsTest(unittest.TestCase):
    def __init__(self, *args, **kwargs):
        super(CompareModelsTest, self).__init__(*args, **kwargs)

    def setUp(self):
        self.series = fakes.fake_series(T=12)
        self.lfo_scores = {lg.EXPONENTIAL: 40.0, lg.POWER: 38.0}
        self.wbic_scores = {lg.EXPONENTIAL: 70.0, lg.POWER: 75.0}
        self.loglik = {lg.EXPONENTIAL: np.full((4, 12), -2.0),
                lg.POWER: np.full((4, 12), -2.5)}

    def tearDown(self):
        self.series = None

    def _select(self, series, family, *args, **kwargs):
        return ms.ScaleSelection(family=family, sc=2.0,
                score=self.lfo_scores[family], scores={})

    def _sample(self, series, family, priors, **kwargs):
        return ms.PosteriorDraws(loglik=self.loglik[family],
                rhat={"lambda0": 1.0}, acceptance=[0.3])

    def _wbic(self, series, family, priors, **kwargs):
        return self.wbic_scores[family]

    def _compare(self, **kwargs):
        with patch.object(inference, "preliminary_estimates",
                return_value=fakes.fake_preliminary()), \
                patch.object(ms, "select_sc", side_effect=self._select), \
                patch.object(inference, "map_estimate",
                return_value=fakes.FakeFit()), \
                patch.object(ms, "posterior_sample",
                side_effect=self._sample), \
                patch.object(ms, "wbic", side_effect=self._wbic):
            return ms.compare_models(self.series, rng=1, **kwargs)

    def test_compare(self):
        report = self._compare()
        self.assertEqual(report.schema, ms.COMPARISON_SCHEMA)
        self.assertEqual(report.labels, ["exp", "pow"])
        self.assertEqual(report.winners, {"lfo": "pow", "waic": "exp",
                "wbic": "exp"})
        self.assertAlmostEqual(report.models["exp"]["waic"], 48.0)
        self.assertAlmostEqual(report.models["pow"]["waic"], 60.0)
        self.assertEqual(report.models["exp"]["sc"], 2.0)
        self.assertEqual(report.models["exp"]["best"], ["waic", "wbic"])
        self.assertEqual(report.t0_range, list(range(6, 12)))
        self.assertEqual(report.T, 12)

    def test_to_rows(self):
        rows = self._compare().to_rows()
        self.assertEqual([r["criterion"] for r in rows], ["LFO", "WAIC",
                "WBIC", "sc"])
        self.assertEqual(rows[0], {"criterion": "LFO", "exp": 40.0,
                "pow": 38.0, "best": "pow"})
        self.assertEqual(rows[3]["best"], "")

    def test_fixed_sc_skips_selection(self):
        with patch.object(ms, "lfo", return_value=33.0) as lfo:
            report = self._compare(sc=5)
        self.assertEqual(lfo.call_count, 2)
        self.assertEqual(report.models["pow"]["sc"], 5.0)
        self.assertEqual(report.models["pow"]["lfo"], 33.0)
        # Ties go to the first model.
        self.assertEqual(report.winners["lfo"], "exp")

    def test_non_finite_score(self):
        self.wbic_scores[lg.POWER] = np.inf
        self.assertRaises(exc.ModelSelectionFailed, self._compare)

    def test_duplicate_labels(self):
        self.assertEqual(ms._labels(["exp", "exp", "pow", "exp"]),
                ["exp", "exp#2", "pow", "exp#3"])



if __name__ == "__main__":
    unittest.main()
