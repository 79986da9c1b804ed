#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Replicate studies on synthetic series: parameter recovery by the MAP fit
and the power of LFO to tell the decay models apart. These take minutes to
tens of minutes, so they are run by hand:

    python tests/integrated/acceptance.py --study recovery --replicates 50
"""

import argparse
import time

import pymerton
import pymerton.exceptions as exc
from pymerton import inference
from pymerton import latent_gaussian as lg
from pymerton import merton_core
from pymerton import model_select
from pymerton import utils

STUDIES = ("recovery", "selection")


class AcceptanceTester(object):
    def __init__(self, seed, replicates, sc=None):
        self.failures = []
        self.rng = utils.make_rng(seed)
        self.replicates = replicates
        self.sc = sc

    def synthetic(self, kernel, T, rng, lambda0=18.0, alpha=1.4):
        ip = merton_core.IntensityParams(lambda0, alpha)
        counts = merton_core.simulate_poisson_lognormal(ip, kernel, T, rng)
        return inference.PortfolioSeries.from_counts(counts)

    def run_tests(self, studies):
        if "recovery" in studies:
            print("Running parameter recovery...")
            self.recovery(lg.ExponentialKernel(0.89))
            self.recovery(lg.PowerKernel(0.6))
        if "selection" in studies:
            print("Running model selection power...")
            self.selection(lg.PowerKernel(0.5), lg.POWER)
            self.selection(lg.ExponentialKernel(0.6), lg.EXPONENTIAL)

    def recovery(self, kernel, T=104, share=0.8):
        truth = {"lambda0": 18.0, "alpha": 1.4,
                inference.PARAM_NAMES[kernel.family][2]: kernel.param}
        hits = dict((name, 0) for name in truth)
        sc = self.sc or 5.0
        for rep, rng in enumerate(utils.spawn_rngs(self.rng,
                self.replicates)):
            series = self.synthetic(kernel, T, rng)
            try:
                prelim = inference.preliminary_estimates(series)
                priors = inference.PriorSpec.from_preliminary(prelim,
                        kernel.family, sc)
                fit = inference.map_estimate(series, kernel.family, priors,
                        rng=rng)
            except exc.PymertonException as e:
                print(" - replicate %s failed: %s" % (rep, e))
                continue
            for name, value in truth.items():
                se = fit.standard_errors[name]
                if abs(fit.estimates[name] - value) <= 3 * se:
                    hits[name] += 1
        label = "RECOVERY %r" % kernel
        print("%s:" % label)
        for name in truth:
            rate = hits[name] / float(self.replicates)
            print(" - %s within 3 SE in %.0f%% of replicates" % (name,
                    100 * rate))
            if rate < share:
                self.failures.append("%s %s" % (label, name))
        print()

    def selection(self, kernel, expected, T=100, share=0.8):
        wins = 0
        for rep, rng in enumerate(utils.spawn_rngs(self.rng,
                self.replicates)):
            series = self.synthetic(kernel, T, rng)
            t0_range = model_select.default_t0_range(T)
            scores = {}
            try:
                prelim = inference.preliminary_estimates(series)
                for family in (lg.EXPONENTIAL, lg.POWER):
                    if self.sc is None:
                        _, scores[family] = model_select.select_sc(series,
                                family, t0_range=t0_range, rng=rng,
                                prelim=prelim)
                    else:
                        priors = inference.PriorSpec.from_preliminary(prelim,
                                family, self.sc)
                        scores[family] = model_select.lfo(series, family,
                                priors, t0_range, rng=rng)
            except exc.PymertonException as e:
                print(" - replicate %s failed: %s" % (rep, e))
                continue
            winner = min(scores, key=scores.get)
            print(" - replicate %s: exp %.3f pow %.3f -> %s" % (rep,
                    scores[lg.EXPONENTIAL], scores[lg.POWER], winner))
            if winner == expected:
                wins += 1
        rate = wins / float(self.replicates)
        label = "SELECTION %r" % kernel
        print("%s: '%s' wins LFO in %.0f%% of replicates" % (label, expected,
                100 * rate))
        if rate < share:
            self.failures.append(label)
        print()


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Run the replicate "
            "studies.")
    parser.add_argument("--study", "-s", action="append", choices=STUDIES,
            help="""Study to run. Can be specified multiple times. If not
            specified, all studies are run.""")
    parser.add_argument("--replicates", "-n", type=int, default=None,
            help="""Number of synthetic series per study; 50 for recovery
            and 20 for selection when not given.""")
    parser.add_argument("--seed", type=int, default=20240601)
    parser.add_argument("--sc", type=float, default=None,
            help="""Fixed prior scale. Without it, selection chooses sc by
            LFO and recovery uses 5.""")
    parser.add_argument("--debug", action="store_true")
    args = parser.parse_args()
    pymerton.set_debug(args.debug)

    start = time.time()
    failures = []
    for study in args.study or STUDIES:
        default = 50 if study == "recovery" else 20
        tester = AcceptanceTester(args.seed, args.replicates or default,
                args.sc)
        print("=" * 77)
        print("Starting study: %s" % study)
        print("=" * 77)
        tester.run_tests([study])
        failures.extend(tester.failures)

    print("=" * 77)
    if failures:
        print("The following studies failed:")
        for failure in failures:
            print(" -", failure)
    else:
        print("All studies passed!")
    end = time.time()
    print()
    print("Running the studies took %6.1f seconds." % (end - start))
    print()
