#!/usr/bin/env python
# -*- coding: utf-8 -*-

import io
import json
import os
import unittest

from mock import patch

import numpy as np

import pymerton
import pymerton.exceptions as exc
from pymerton import cli
from pymerton import datasets
from pymerton import inference
from pymerton import latent_gaussian as lg
from pymerton import model_select
from pymerton import utils
from tests.unit import fakes



class RunConfigTest(unittest.TestCase):
    def __init__(self, *args, **kwargs):
        super(RunConfigTest, self).__init__(*args, **kwargs)

    def setUp(self):
        self.saved_env = fakes.clear_env()
        self.settings = fakes.fresh_settings()

    def tearDown(self):
        os.environ.update(self.saved_env)

    def _config(self, **overrides):
        overrides.setdefault("seed", "7")
        return cli.RunConfig.from_settings(self.settings, overrides=overrides)

    def test_typed_defaults(self):
        cfg = self._config()
        self.assertEqual(cfg.seed, 7)
        self.assertEqual(cfg.T, 104)
        self.assertEqual(cfg.gammas, [0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0])
        self.assertEqual(cfg.horizons, [1, 10, 100, 1000, np.inf])
        self.assertFalse(cfg.debug)
        self.assertIsNone(cfg.sc)
        self.assertEqual(cfg.kernel_family, lg.POWER)
        self.assertEqual(cfg.build_kernel(), lg.PowerKernel(0.64))

    def test_kernel_overrides_model(self):
        cfg = self._config(kernel="exp", model="pow")
        self.assertEqual(cfg.build_kernel(), lg.ExponentialKernel(0.89))
        cfg = self._config(model="none")
        self.assertEqual(cfg.build_kernel(), lg.IndependentKernel())

    def test_missing_seed(self):
        self.assertRaises(exc.MissingSeed, cli.RunConfig.from_settings,
                self.settings)

    def test_invalid_values(self):
        cases = [{"seed": "-1"}, {"seed": str(2 ** 64)}, {"seed": "x"},
                {"T": "abc"}, {"T": "0"}, {"chains": "-2"},
                {"model": "gauss"}, {"link": "cauchit"},
                {"gammas": "0.5,oops"}]
        for overrides in cases:
            self.assertRaises(exc.InvalidSetting, self._config, **overrides)

    def test_unknown_override(self):
        self.assertRaises(exc.InvalidSetting, self._config, flavor="x")

    def test_echo_and_hash(self):
        one = self._config(out="/tmp/a", debug="true")
        two = self._config(out="/tmp/b")
        self.assertFalse("out" in one.echo())
        self.assertFalse("debug" in one.echo())
        self.assertEqual(one.config_sha256, two.config_sha256)
        three = self._config(T="50")
        self.assertNotEqual(one.config_sha256, three.config_sha256)

    def test_t0_range(self):
        self.assertEqual(self._config().t0_range(104),
                list(range(50, 101, 5)))
        cfg = self._config(t0_start="10", t0_stop="12")
        self.assertEqual(cfg.t0_range(104), [10, 11, 12])
        cfg = self._config(t0_start="10", t0_step="3")
        self.assertEqual(cfg.t0_range(17), [10, 13, 16])

    def test_options(self):
        cfg = self._config(starts="2", draws="100")
        self.assertEqual(cfg.fit_options(), {"starts": 2, "gtol": 1e-6,
                "maxiter": 500})
        self.assertEqual(cfg.sampler_options(), {"chains": 4, "draws": 100,
                "warmup": 1000, "thin": 5})

    def test_config_section(self):
        with utils.SelfDeletingTempfile() as tmp:
            fakes.write_text(tmp, fakes.CONFIG_TEXT)
            self.settings.read_config(tmp)
        cfg = cli.RunConfig.from_settings(self.settings, env="small")
        self.assertEqual((cfg.seed, cfg.model, cfg.gamma, cfg.draws),
                (11, "pow", 0.5, 200))
        self.assertEqual(cfg.T, 104)
        cfg = cli.RunConfig.from_settings(self.settings)
        self.assertEqual((cfg.seed, cfg.model, cfg.T), (7, "exp", 50))



class MainTest(unittest.TestCase):
    def __init__(self, *args, **kwargs):
        super(MainTest, self).__init__(*args, **kwargs)
        self.orig_settings = pymerton.settings

    def setUp(self):
        self.saved_env = fakes.clear_env()
        pymerton.settings = fakes.fresh_settings()
        self.tmpdir = utils.SelfDeletingTempDirectory()
        self.dirname = self.tmpdir.__enter__()

    def tearDown(self):
        self.tmpdir.__exit__(None, None, None)
        pymerton.settings = self.orig_settings
        os.environ.update(self.saved_env)
        pymerton.set_debug(False)

    def _main(self, *argv):
        stdout = io.StringIO()
        stderr = io.StringIO()
        status = cli.main(list(argv), stdout=stdout, stderr=stderr)
        return status, stdout.getvalue(), stderr.getvalue()

    def _out(self, name):
        return os.path.join(self.dirname, name)

    def _read(self, path):
        with open(path, "rb") as ff:
            return ff.read()

    def _error(self, stderr):
        return json.loads(stderr.strip().splitlines()[-1])

    def test_scaling(self):
        out = self._out("run")
        status, stdout, stderr = self._main("scaling", "--seed", "3",
                "--out", out, "--set", "t_max=64", "--set", "gammas=0.5,1.0",
                "--set", "thetas=0.9")
        self.assertEqual(status, 0, stderr)
        names = sorted(os.path.basename(p) for p in stdout.split())
        self.assertEqual(names, ["delta.csv", "scaling.csv", "scaling.json"])
        with open(os.path.join(out, "scaling.json")) as ff:
            doc = json.load(ff)
        self.assertEqual(doc["seed"], 3)
        self.assertEqual(doc["schema"], "pymerton.scaling/1")
        self.assertEqual(len(doc["slopes"]), 3)
        self.assertEqual(datasets.read_artifact_header(os.path.join(out,
                "delta.csv"))[1], "3")

    def test_deterministic_outputs(self):
        args = {
                "scaling": ["--set", "t_max=64", "--set", "gammas=0.5",
                        "--set", "thetas=0.9"],
                "impact": ["--set", "gammas=0.5,2.0", "--set", "thetas=0.5",
                        "--set", "horizons=1,10,inf"],
                "kesten": ["--set", "samples=20000", "--set", "k_top=100",
                        "--set", "burn_in=1000"],
                "simulate": ["--set", "T=30", "--set", "alpha=0.5"],
                }
        for command, extra in args.items():
            outputs = []
            for run in ("one", "two"):
                out = self._out("%s-%s" % (command, run))
                status, stdout, stderr = self._main(command, "--seed", "99",
                        "--out", out, *extra)
                self.assertEqual(status, 0, stderr)
                outputs.append(dict((name, self._read(os.path.join(out,
                        name))) for name in sorted(os.listdir(out))))
            self.assertEqual(outputs[0], outputs[1])
            self.assertTrue(outputs[0])

    def test_seed_changes_outputs(self):
        outs = []
        for seed in ("1", "2"):
            out = self._out("seed-%s" % seed)
            status, _, stderr = self._main("kesten", "--seed", seed, "--out",
                    out, "--set", "samples=20000", "--set", "k_top=100",
                    "--set", "burn_in=1000")
            self.assertEqual(status, 0, stderr)
            outs.append(self._read(os.path.join(out, "tail.csv")))
        self.assertNotEqual(outs[0], outs[1])

    def test_simulate_series_loads(self):
        out = self._out("sim")
        status, _, stderr = self._main("simulate", "--seed", "5", "--out",
                out, "--set", "T=25", "--set", "alpha=0.5", "--set",
                "kernel=exp")
        self.assertEqual(status, 0, stderr)
        series = datasets.load_dataset(os.path.join(out, "series.csv"))
        self.assertEqual(series.T, 25)
        self.assertTrue(os.path.exists(os.path.join(out, "pmf.csv")))

    def test_simulate_merton(self):
        out = self._out("merton")
        status, _, stderr = self._main("simulate", "--seed", "5", "--out",
                out, "--set", "T=20", "--set", "process=merton", "--set",
                "N=500")
        self.assertEqual(status, 0, stderr)
        with open(os.path.join(out, "simulate.json")) as ff:
            doc = json.load(ff)
        self.assertEqual(doc["process"], "merton")
        self.assertFalse(os.path.exists(os.path.join(out, "pmf.csv")))

    def test_fit(self):
        data = fakes.write_text(self._out("data.csv"), fakes.DATASET_TEXT)
        out = self._out("fit")
        fit = fakes.FakeFit(family=lg.POWER, lambda0=20.0, alpha=1.1,
                param=0.7)
        with patch.object(inference, "preliminary_estimates",
                return_value=fakes.fake_preliminary()), \
                patch.object(inference, "map_estimate",
                return_value=fit) as mapper:
            status, _, stderr = self._main("fit", "--seed", "4", "--out", out,
                    "--set", "dataset=%s" % data, "--set", "sc=3")
        self.assertEqual(status, 0, stderr)
        priors = mapper.call_args[0][2]
        self.assertEqual(priors.sc, 3.0)
        with open(os.path.join(out, "fit.json")) as ff:
            doc = json.load(ff)
        self.assertEqual(doc["family"], "pow")
        self.assertEqual(doc["fit"]["lambda0"], 20.0)
        self.assertIsNone(doc["sc_selection"])

    def test_fit_bundled_series_by_name(self):
        with patch.object(inference, "preliminary_estimates",
                return_value=fakes.fake_preliminary()), \
                patch.object(inference, "map_estimate",
                return_value=fakes.FakeFit()) as mapper:
            status, _, stderr = self._main("fit", "--seed", "4", "--out",
                    self._out("fit"), "--set",
                    "dataset=synthetic_sg_1981_2023", "--set", "sc=2")
        self.assertEqual(status, 0, stderr)
        series = mapper.call_args[0][0]
        self.assertEqual((series.years[0], series.T), (1981, 43))

    def test_fit_selects_sc(self):
        data = fakes.write_text(self._out("data.csv"), fakes.DATASET_TEXT)
        sel = model_select.ScaleSelection(family="pow", sc=5.0, score=12.0,
                scores={"5.0": 12.0})
        with patch.object(inference, "preliminary_estimates",
                return_value=fakes.fake_preliminary()), \
                patch.object(model_select, "select_sc",
                return_value=sel), \
                patch.object(inference, "map_estimate",
                return_value=fakes.FakeFit()):
            status, _, stderr = self._main("fit", "--seed", "4", "--out",
                    self._out("fit"), "--set", "dataset=%s" % data)
        self.assertEqual(status, 0, stderr)
        with open(self._out(os.path.join("fit", "fit.json"))) as ff:
            doc = json.load(ff)
        self.assertEqual(doc["sc"], 5.0)
        self.assertEqual(doc["sc_selection"]["score"], 12.0)

    def test_compare(self):
        data = fakes.write_text(self._out("data.csv"), fakes.DATASET_TEXT)
        models = {"exp": {"lfo": 1.0, "waic": 2.0, "wbic": 3.0, "sc": 1.0},
                "pow": {"lfo": 0.5, "waic": 2.5, "wbic": 2.0, "sc": 2.0}}
        report = model_select.ComparisonReport(
                schema=model_select.COMPARISON_SCHEMA, labels=["exp", "pow"],
                models=models, winners={"lfo": "pow", "waic": "exp",
                "wbic": "pow"})
        out = self._out("cmp")
        with patch.object(model_select, "compare_models",
                return_value=report) as compare:
            status, _, stderr = self._main("compare", "--seed", "4", "--out",
                    out, "--set", "dataset=%s" % data, "--set", "draws=50")
        self.assertEqual(status, 0, stderr)
        self.assertEqual(compare.call_args[1]["draws"], 50)
        with open(os.path.join(out, "compare.csv")) as ff:
            lines = ff.read().splitlines()
        self.assertEqual(lines[1], "criterion,exp,pow,best")
        self.assertEqual(lines[2], "LFO,1,0.5,pow")

    def test_compare_bundled_dataset(self):
        out = self._out("bundled")
        status, _, stderr = self._main("compare", "--seed", "7", "--out",
                out, "--set", "sc=5", "--set", "t0_start=100", "--set",
                "t0_stop=103", "--set", "t0_step=3", "--set", "chains=4",
                "--set", "draws=250", "--set", "warmup=500", "--set",
                "thin=4", "--set", "starts=2")
        self.assertEqual(status, 0, stderr)
        with open(os.path.join(out, "compare.json")) as ff:
            doc = json.load(ff)
        self.assertEqual(doc["T"], 104)
        self.assertEqual(doc["t0_range"], [100, 103])
        for label in ("exp", "pow"):
            model = doc["models"][label]
            for crit in ("lfo", "waic", "wbic"):
                self.assertTrue(np.isfinite(model[crit]))
            self.assertTrue(max(model["rhat"].values())
                    < model_select.RHAT_THRESHOLD)
            self.assertTrue(model["p_waic"] > 0)

    def test_config_file_and_section(self):
        cfg = fakes.write_text(self._out("study.cfg"), fakes.CONFIG_TEXT)
        out = self._out("cfg")
        status, _, stderr = self._main("impact", "--config", cfg,
                "--section", "small", "--out", out, "--set",
                "horizons=1,10")
        self.assertEqual(status, 0, stderr)
        with open(os.path.join(out, "impact.json")) as ff:
            doc = json.load(ff)
        self.assertEqual(doc["seed"], 11)
        self.assertEqual(doc["config"]["gamma"], 0.5)

    def test_missing_seed(self):
        status, stdout, stderr = self._main("scaling", "--out",
                self._out("x"))
        self.assertEqual(status, 2)
        self.assertEqual(stdout, "")
        doc = self._error(stderr)
        self.assertEqual(doc["error"], "MissingSeed")
        self.assertEqual(doc["exit_status"], 2)

    def test_usage_errors(self):
        cases = [
                ("frobnicate", "--seed", "1"),
                ("scaling", "--seed", "1", "--set", "t_max"),
                ("scaling", "--seed", "1", "--set", "t_max=-4"),
                ("scaling", "--seed", "1", "--section", "nowhere"),
                ("scaling", "--seed", "1", "--config",
                        self._out("missing.cfg")),
                ]
        for argv in cases:
            status, _, stderr = self._main(*argv)
            self.assertEqual(status, 2, argv)
            self.assertEqual(self._error(stderr)["schema"], exc.ERROR_SCHEMA)

    def test_computation_errors(self):
        status, _, stderr = self._main("kesten", "--seed", "1", "--out",
                self._out("k"), "--set", "a=1.5")
        self.assertEqual(status, 1)
        self.assertEqual(self._error(stderr)["error"], "InvalidParameter")
        data = fakes.write_text(self._out("zero.csv"),
                fakes.DATASET_TEXT + "1935,0,0\n")
        status, _, stderr = self._main("fit", "--seed", "1", "--out",
                self._out("f"), "--set", "dataset=%s" % data)
        self.assertEqual(status, 1)
        self.assertEqual(self._error(stderr)["error"], "ZeroObligors")

    def test_unexpected_error(self):
        with patch.object(cli.ScalingCommand, "_run",
                side_effect=RuntimeError("kaboom")):
            status, _, stderr = self._main("scaling", "--seed", "1", "--out",
                    self._out("u"))
        self.assertEqual(status, 1)
        doc = self._error(stderr)
        self.assertEqual(doc["error"], "RuntimeError")
        self.assertEqual(doc["message"], "kaboom")

    def test_debug_flag(self):
        status, _, stderr = self._main("impact", "--seed", "1", "--out",
                self._out("d"), "--debug", "--set", "horizons=1")
        self.assertEqual(status, 0, stderr)
        self.assertTrue(pymerton.get_debug())

    def test_run_command(self):
        cfg = cli.RunConfig.from_settings(pymerton.settings,
                overrides={"seed": "1", "out": self._out("rc"),
                "horizons": "1", "gammas": "0.5", "thetas": ""})
        self.assertRaises(exc.UnknownCommand, cli.run_command, "plot", cfg)
        paths = cli.run_command("impact", cfg)
        self.assertEqual([os.path.basename(p) for p in paths],
                ["impact.csv", "impact.json"])

    def test_command_timings(self):
        cfg = cli.RunConfig.from_settings(pymerton.settings,
                overrides={"seed": "1", "out": self._out("t"),
                "horizons": "1"})
        cmd = cli.ImpactCommand(cfg)
        cmd.run()
        timings = cmd.get_timings()
        self.assertEqual(len(timings), 1)
        self.assertEqual(timings[0][0], "impact")
        self.assertTrue(timings[0][2] >= timings[0][1])



if __name__ == "__main__":
    unittest.main()
