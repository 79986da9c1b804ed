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
The `pymerton` command-line tool.

    pymerton [--config FILE] [--section NAME] [--seed N] [--model FAMILY]
             [--out DIR] [--set KEY=VALUE ...] [--debug] COMMAND

COMMAND is one of simulate, scaling, impact, fit, compare or kesten. Every
artifact goes into the output directory and carries the seed and the
config it was made from. Exit status is 0 on success, 1 when the
computation fails and 2 for usage or configuration errors; failures print
an error document as JSON on stderr.
"""

import argparse
import json
import logging
import os
import sys
import time

import numpy as np
import pandas as pd

import pymerton
import pymerton.exceptions as exc
from pymerton import datasets
from pymerton import diffusion
from pymerton import inference
from pymerton import kesten_limit
from pymerton import latent_gaussian as lg
from pymerton import merton_core
from pymerton import model_select
from pymerton.resource import BaseResult
from pymerton import utils

logger = logging.getLogger(__name__)

INT_KEYS = ("T", "N", "t_max", "t0_start", "t0_stop", "t0_step", "max_lag",
        "chains", "draws", "warmup", "thin", "samples", "burn_in", "k_top",
        "quad_nodes", "opt_maxiter", "starts")
FLOAT_KEYS = ("p_prime", "rho_a", "beta", "lambda0", "alpha", "theta",
        "gamma", "shock", "sc", "a", "beta_b", "scale", "quad_tol",
        "opt_gtol")
FLOAT_LIST_KEYS = ("gammas", "thetas", "sc_grid")
POSITIVE_KEYS = ("T", "N", "t_max", "chains", "draws", "thin", "samples",
        "k_top", "quad_nodes", "opt_maxiter", "starts", "quad_tol",
        "opt_gtol")
CHOICES = {
        "model": (lg.EXPONENTIAL, lg.POWER, lg.INDEPENDENT),
        "kernel": (lg.EXPONENTIAL, lg.POWER, lg.INDEPENDENT),
        "process": ("merton", "limit"),
        "link": (merton_core.PROBIT, merton_core.LOGISTIC),
        }
# Settings that do not change any artifact and stay out of the config echo.
UNHASHED_KEYS = ("out", "debug")
MAX_SEED = 2 ** 64


def _convert(key, val, convert):
    try:
        return convert(val)
    except (TypeError, ValueError):
        raise exc.InvalidSetting("Setting '%s' has an invalid value %r."
                % (key, val))


def _horizon(val):
    val = str(val).strip().lower()
    if val in ("inf", "infinity"):
        return np.inf
    return int(val)


class RunConfig(BaseResult):
    """
    The typed, validated settings for one command run: one settings
    environment with the command-line overrides applied on top.
    """
    @classmethod
    def from_settings(cls, settings=None, env=None, overrides=None):
        if settings is None:
            settings = pymerton.settings
        raw = settings.as_dict(env=env)
        for key, val in (overrides or {}).items():
            if key not in pymerton.DEFAULTS:
                raise exc.InvalidSetting("The setting '%s' is not defined."
                        % key)
            if val is not None:
                raw[key] = val
        return cls(**cls._typed(raw))

    @staticmethod
    def _typed(raw):
        vals = {}
        for key, val in raw.items():
            if isinstance(val, str):
                val = val.strip()
            if val is None or val == "" or (isinstance(val, str)
                    and val.lower() == "none"):
                vals[key] = None
            elif key in INT_KEYS:
                vals[key] = _convert(key, val, int)
            elif key in FLOAT_KEYS:
                vals[key] = _convert(key, val, float)
            elif key in FLOAT_LIST_KEYS:
                vals[key] = _convert(key, val,
                        lambda v: utils.coerce_to_list(v, float))
            elif key == "horizons":
                vals[key] = _convert(key, val,
                        lambda v: utils.coerce_to_list(v, _horizon))
            elif key == "debug":
                vals[key] = pymerton._truthy(val)
            elif key == "seed":
                vals[key] = _convert(key, val, int)
            else:
                vals[key] = val
        if vals.get("seed") is None:
            raise exc.MissingSeed("A seed is required: pass --seed or set "
                    "'seed' in the config.")
        if not 0 <= vals["seed"] < MAX_SEED:
            raise exc.InvalidSetting("The seed must be an unsigned 64-bit "
                    "integer; got %s." % vals["seed"])
        for key in POSITIVE_KEYS:
            if vals.get(key) is None or not vals[key] > 0:
                raise exc.InvalidSetting("Setting '%s' must be positive; got "
                        "%r." % (key, vals.get(key)))
        for key, allowed in CHOICES.items():
            if vals.get(key) is not None and vals[key] not in allowed:
                raise exc.InvalidSetting("Setting '%s' must be one of %s; got "
                        "'%s'." % (key, ", ".join(allowed), vals[key]))
        return vals

    def echo(self):
        """The settings that determine the artifacts, as plain values."""
        return dict((key, val) for key, val in self.to_dict().items()
                if key not in UNHASHED_KEYS)

    @property
    def config_sha256(self):
        return datasets.config_checksum(self.echo())

    def build_kernel(self):
        family = self.kernel_family
        if family == lg.EXPONENTIAL:
            return lg.ExponentialKernel(self.theta)
        if family == lg.POWER:
            return lg.PowerKernel(self.gamma)
        return lg.IndependentKernel()

    @property
    def kernel_family(self):
        return self.kernel or self.model

    def t0_range(self, T):
        if self.t0_start is None:
            return model_select.default_t0_range(T)
        stop = self.t0_stop if self.t0_stop is not None else T - 1
        step = self.t0_step or 1
        return list(range(self.t0_start, stop + 1, step))

    def fit_options(self):
        return {"starts": self.starts, "gtol": self.opt_gtol,
                "maxiter": self.opt_maxiter}

    def sampler_options(self):
        return {"chains": self.chains, "draws": self.draws,
                "warmup": self.warmup, "thin": self.thin}


class BaseCommand(object):
    """
    The base class for all pymerton commands. Subclasses set `name` and
    implement `_run()`, which returns the paths of the artifacts written.
    """
    name = "base"

    def __init__(self, config):
        self.config = config
        self.rng = utils.make_rng(config.seed)
        self.times = []  # [("item", starttime, endtime), ...]

    def run(self):
        """Runs the command and returns the list of artifact paths."""
        out = self.config.out or "."
        if not os.path.isdir(out):
            os.makedirs(out)
        start = time.time()
        paths = self._run()
        self.times.append((self.name, start, time.time()))
        logger.info("Command '%s' wrote %s artifact(s) in %.2fs.", self.name,
                len(paths), time.time() - start)
        return paths

    def _run(self):
        raise NotImplementedError

    def get_timings(self):
        """Returns a list of all execution timings."""
        return self.times

    def path(self, filename):
        return os.path.join(self.config.out or ".", filename)

    def write_json(self, filename, document):
        return datasets.write_json(self.path(filename), document,
                self.config.seed, self.config.echo())

    def write_csv(self, filename, frame):
        return datasets.write_csv(self.path(filename), frame,
                self.config.seed, self.config.config_sha256)

    def load_series(self):
        return datasets.load_dataset(datasets.resolve_dataset(
                self.config.dataset))


class SimulateCommand(BaseCommand):
    """
    Simulates a series of yearly default counts from the finite-N Merton
    process or its Poisson limit. For the limit the count law is written
    too.
    """
    name = "simulate"

    def _run(self):
        cfg = self.config
        kernel = cfg.build_kernel()
        if cfg.process == "merton":
            params = merton_core.MertonParams(cfg.p_prime, cfg.rho_a, cfg.N,
                    cfg.beta)
            counts = merton_core.simulate_merton(params, kernel, cfg.T,
                    self.rng, link=cfg.link)
            summary = {"params": params, "limit": merton_core.limit_map(
                    params)}
        else:
            ip = merton_core.IntensityParams(cfg.lambda0, cfg.alpha)
            counts = merton_core.simulate_poisson_lognormal(ip, kernel, cfg.T,
                    self.rng)
            mean, var = merton_core.intensity_moments(ip)
            summary = {"params": ip, "intensity_mean": mean,
                    "intensity_variance": var}
        series = inference.PortfolioSeries.from_counts(counts, size=cfg.N)
        paths = [datasets.write_series(self.path("series.csv"), series,
                cfg.seed, cfg.config_sha256)]
        if cfg.process == "limit":
            pmf = merton_core.mixture_pmf_table(ip, tol=cfg.quad_tol)
            paths.append(self.write_csv("pmf.csv", pd.DataFrame({
                    "k": np.arange(pmf.size), "probability": pmf})))
        summary.update({"schema": "pymerton.simulation/1",
                "process": cfg.process, "kernel": kernel.to_dict(),
                "T": cfg.T, "count_mean": float(np.mean(counts)),
                "count_variance": float(np.var(counts))})
        paths.append(self.write_json("simulate.json", summary))
        return paths


class ScalingCommand(BaseCommand):
    """
    Scaling curves for every gamma (power kernel) and theta (exponential
    kernel) up to t_max, and the table of scaling exponents at t_max.
    """
    name = "scaling"

    def _run(self):
        cfg = self.config
        _, V_bar = merton_core.intensity_moments(
                merton_core.IntensityParams(cfg.lambda0, cfg.alpha))
        V_bar = V_bar or 1.0
        kernels = ([lg.PowerKernel(g) for g in cfg.gammas or []]
                + [lg.ExponentialKernel(t) for t in cfg.thetas or []])
        rows = []
        slopes = []
        for kernel in kernels:
            curve = diffusion.scaling_curve(kernel, cfg.t_max, V_bar)
            deltas = dict(diffusion.scaling_exponent(curve))
            for T, value in zip(curve.horizons, curve.values):
                rows.append({"family": kernel.family, "param": kernel.param,
                        "T": int(T), "value": float(value),
                        "delta": deltas.get(int(T), np.nan)})
            lo = max(2, cfg.t_max // 16)
            slopes.append({"kernel": kernel.to_dict(),
                    "phase": diffusion.classify_phase(kernel),
                    "slope": diffusion.log_log_slope(curve, lo, cfg.t_max),
                    "t_lo": lo, "t_hi": cfg.t_max})
        table = diffusion.delta_table(cfg.gammas or [], cfg.t_max, cfg.alpha)
        paths = [self.write_csv("scaling.csv", pd.DataFrame(rows,
                columns=["family", "param", "T", "value", "delta"]))]
        paths.append(self.write_csv("delta.csv", pd.DataFrame(table,
                columns=["gamma", "T", "alpha", "delta", "predicted",
                "phase"])))
        paths.append(self.write_json("scaling.json", {
                "schema": "pymerton.scaling/1", "V_bar": V_bar,
                "slopes": slopes, "delta_table": table}))
        return paths


class ImpactCommand(BaseCommand):
    """The cumulative impact of a unit shock for each kernel and horizon."""
    name = "impact"

    def _run(self):
        cfg = self.config
        kernels = ([lg.IndependentKernel()]
                + [lg.ExponentialKernel(t) for t in cfg.thetas or []]
                + [lg.PowerKernel(g) for g in cfg.gammas or []])
        results = diffusion.impact_table(kernels, cfg.alpha, cfg.shock,
                cfg.horizons)
        rows = [{"family": r.kernel["family"], "param": r.kernel["param"],
                "horizon": r.horizon, "value": r.value,
                "exact_sum": r.exact_sum, "divergence": r.divergence}
                for r in results]
        paths = [self.write_csv("impact.csv", pd.DataFrame(rows,
                columns=["family", "param", "horizon", "value", "exact_sum",
                "divergence"]))]
        paths.append(self.write_json("impact.json", {
                "schema": "pymerton.impact/1", "results": results}))
        return paths


class FitCommand(BaseCommand):
    """
    Preliminary estimates and the MAP fit of the configured model on the
    dataset. Without an explicit sc, sc is chosen by LFO over sc_grid.
    """
    name = "fit"

    def _run(self):
        cfg = self.config
        series = self.load_series()
        family = cfg.model
        select_rng, fit_rng = utils.spawn_rngs(self.rng, 2)
        prelim = inference.preliminary_estimates(series, cfg.max_lag)
        selection = None
        sc = cfg.sc
        if sc is None:
            selection = model_select.select_sc(series, family, cfg.sc_grid,
                    cfg.t0_range(series.T), rng=select_rng, prelim=prelim,
                    **cfg.fit_options())
            sc = selection.sc
        priors = inference.PriorSpec.from_preliminary(prelim, family, sc)
        fit = inference.map_estimate(series, family, priors, rng=fit_rng,
                **cfg.fit_options())
        return [self.write_json("fit.json", {"schema": "pymerton.fit/1",
                "family": family, "sc": sc, "sc_selection": selection,
                "preliminary": prelim, "fit": fit})]


class CompareCommand(BaseCommand):
    """LFO, WAIC and WBIC of the exponential and power models."""
    name = "compare"

    def _run(self):
        cfg = self.config
        series = self.load_series()
        opts = cfg.fit_options()
        opts.update(cfg.sampler_options())
        report = model_select.compare_models(series, cfg.t0_range(series.T),
                rng=self.rng, sc_grid=cfg.sc_grid, sc=cfg.sc, **opts)
        return [self.write_json("compare.json", report),
                self.write_csv("compare.csv", pd.DataFrame(report.to_rows(),
                columns=["criterion"] + list(report.labels) + ["best"]))]


class KestenCommand(BaseCommand):
    """
    Samples the Kesten recursion and estimates its tail exponent. Writes
    the largest samples and the Hill plot data.
    """
    name = "kesten"

    def _run(self):
        cfg = self.config
        samples = kesten_limit.simulate_kesten(cfg.a, cfg.beta_b, cfg.samples,
                self.rng, burn_in=cfg.burn_in, scale=cfg.scale)
        kappa = kesten_limit.kesten_theoretical_exponent(cfg.a, cfg.beta_b)
        estimate, se = kesten_limit.hill_tail_exponent(samples, cfg.k_top)
        limit = (samples.size - 1) // 10
        k_values = [k for k in (cfg.k_top // 4, cfg.k_top // 2, cfg.k_top,
                2 * cfg.k_top, 4 * cfg.k_top) if 1 <= k <= limit]
        plot = kesten_limit.hill_plot(samples, k_values)
        top = np.sort(samples)[::-1][:min(samples.size, 10 * cfg.k_top)]
        paths = [self.write_csv("tail.csv", pd.DataFrame({
                "rank": np.arange(1, top.size + 1), "value": top}))]
        paths.append(self.write_csv("hill.csv", pd.DataFrame(plot.to_rows(),
                columns=["k_top", "kappa", "se"])))
        paths.append(self.write_json("kesten.json", {
                "schema": "pymerton.kesten/1", "a": cfg.a,
                "beta_b": cfg.beta_b, "samples": int(samples.size),
                "kappa_theory": kappa,
                "moment_at_kappa": kesten_limit.kesten_moment(cfg.a,
                        cfg.beta_b, kappa, nodes=cfg.quad_nodes),
                "kappa_hill": estimate, "kappa_hill_se": se,
                "k_top": cfg.k_top, "hill_plot": plot}))
        return paths


_command_classes = {
        "simulate": SimulateCommand,
        "scaling": ScalingCommand,
        "impact": ImpactCommand,
        "fit": FitCommand,
        "compare": CompareCommand,
        "kesten": KestenCommand,
        }


def run_command(command, config):
    """
    Runs one command with a RunConfig and returns the artifact paths.
    Library errors propagate; main() turns them into exit statuses.
    """
    try:
        cls = _command_classes[command]
    except KeyError:
        raise exc.UnknownCommand("Unknown command '%s'; expected one of %s."
                % (command, ", ".join(sorted(_command_classes))))
    return cls(config).run()


def _parse_set(values):
    overrides = {}
    for item in values or []:
        if "=" not in item:
            raise exc.InvalidSetting("--set expects KEY=VALUE; got '%s'."
                    % item)
        key, val = item.split("=", 1)
        overrides[key.strip()] = val.strip()
    return overrides


def build_parser():
    parser = argparse.ArgumentParser(prog="pymerton",
            description="Merton default model simulation, variance scaling "
            "and decay-model comparison.")
    parser.add_argument("command", help="one of: %s"
            % ", ".join(sorted(_command_classes)))
    parser.add_argument("--config", help="INI file with the settings")
    parser.add_argument("--section", help="config section to use")
    parser.add_argument("--seed", help="unsigned 64-bit random seed")
    parser.add_argument("--model", choices=CHOICES["model"],
            help="decay model family")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
            help="override any setting; may be repeated")
    parser.add_argument("--debug", action="store_true",
            help="log to stderr")
    parser.add_argument("--version", action="version",
            version="pymerton %s" % pymerton.__version__)
    return parser


def _report(err, stream):
    stream.write(json.dumps(exc.to_error_document(err), sort_keys=True)
            + "\n")
    return getattr(err, "exit_status", 1)


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        settings = pymerton.settings
        if args.config:
            settings.read_config(args.config)
        if args.section:
            settings.environment = args.section
        overrides = _parse_set(args.set)
        overrides.update(dict((key, val) for key, val in (("seed", args.seed),
                ("model", args.model), ("out", args.out)) if val is not None))
        if args.debug:
            overrides["debug"] = "true"
        if args.command not in _command_classes:
            raise exc.UnknownCommand("Unknown command '%s'; expected one of "
                    "%s." % (args.command,
                    ", ".join(sorted(_command_classes))))
        config = RunConfig.from_settings(settings, overrides=overrides)
        if config.debug:
            pymerton.set_debug(True)
        paths = run_command(args.command, config)
    except exc.PymertonException as e:
        return _report(e, stderr)
    except Exception as e:
        logger.exception("Unexpected failure in '%s'.", args.command)
        return _report(e, stderr)
    for path in paths:
        stdout.write("%s\n" % path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
