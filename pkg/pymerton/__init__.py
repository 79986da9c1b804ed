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
pymerton simulates the Merton default model and its Poisson limit with a
log-normal intensity under temporally correlated macro factors, studies the
variance scaling of the intensity, and estimates and compares exponential
and power decay correlation models on yearly default counts.

Settings are read from `~/.pymerton.cfg` when it exists, from PYMERTON_*
environment variables, and from values set at runtime with `set_setting()`.
"""
import configparser
import logging
import os

from pymerton import exceptions as exc
from pymerton import utils
from pymerton import version

__version__ = version.version

logger = logging.getLogger("pymerton")
logger.addHandler(logging.NullHandler())

# Does the package log to stderr?
_debug = False
_debug_handler = None

DEFAULT_DATASET = os.path.join(os.path.dirname(os.path.abspath(__file__)),
        "data", "synthetic_all_1920_2023.csv")

# Every recognised key with its default value. Values read from a config
# file or the environment are strings; RunConfig converts them.
DEFAULTS = {
        "seed": None,
        "model": "pow",
        "process": "limit",
        "link": "probit",
        "T": "104",
        "N": "3000",
        "p_prime": "0.01",
        "rho_a": "0.2",
        "beta": "1.3",
        "lambda0": "18.1",
        "alpha": "1.4",
        "theta": "0.89",
        "gamma": "0.64",
        "kernel": None,
        "t_max": "16384",
        "gammas": "0.1,0.25,0.5,0.75,1.0,1.5,2.0",
        "thetas": "0.8,0.9,0.99,0.999",
        "shock": "1.0",
        "horizons": "1,10,100,1000,inf",
        "dataset": DEFAULT_DATASET,
        "sc": None,
        "sc_grid": "1,2,3,4,5,10,20",
        "t0_start": None,
        "t0_stop": None,
        "t0_step": None,
        "max_lag": None,
        "chains": "4",
        "draws": "1000",
        "warmup": "1000",
        "thin": "5",
        "a": "0.9",
        "beta_b": "0.5",
        "scale": "1.0",
        "samples": "1000000",
        "burn_in": "10000",
        "k_top": "1000",
        "quad_nodes": "64",
        "quad_tol": "1e-6",
        "opt_gtol": "1e-6",
        "opt_maxiter": "500",
        "starts": "5",
        "debug": "False",
        "out": "pymerton-out",
        }


class Settings(object):
    """
    Holds and manages the settings for pymerton. Settings live in named
    environments; the `[settings]` section of a config file is the
    "default" environment and any other section defines another one.
    """
    _environment = None
    env_dct = dict((key, "PYMERTON_%s" % key.upper()) for key in DEFAULTS)

    def __init__(self):
        self._settings = {"default": dict(DEFAULTS)}
        # Keys given explicitly, per environment; these win over PYMERTON_*.
        self._given = {"default": set()}
        self._default_set = False


    def get(self, key, env=None):
        """
        Looks up `key` in the named environment, or in the active one when
        `env` is None. A value set explicitly wins over the PYMERTON_*
        environment variable, which wins over the built-in default. Unknown
        keys return None.
        """
        if env is None:
            env = self.environment
        try:
            dct = self._settings[env]
        except KeyError:
            return None
        if key in self._given.get(env, ()):
            return dct[key]
        env_var = self.env_dct.get(key)
        if env_var:
            val = utils.env(env_var)
            if val:
                return val
        return dct.get(key)


    def set(self, key, val, env=None):
        """
        Stores `val` under `key` in the active environment, or in `env` when
        given. Only keys listed in DEFAULTS can be set, and setting "debug"
        switches stderr logging at once.
        """
        if env is None:
            env = self.environment
        else:
            if env not in self._settings:
                raise exc.EnvironmentNotFound("No settings environment is "
                        "named '%s'." % env)
        dct = self._settings[env]
        if key not in dct:
            raise exc.InvalidSetting("The setting '%s' is not defined." % key)
        dct[key] = val
        self._given.setdefault(env, set()).add(key)
        if key == "debug":
            set_debug(_truthy(val))


    def _getEnvironment(self):
        return self._environment or "default"

    def _setEnvironment(self, val):
        if val not in self._settings:
            raise exc.EnvironmentNotFound("No settings environment is named "
                    "'%s'." % val)
        self._environment = val

    environment = property(_getEnvironment, _setEnvironment, None,
            """Users can define several environments, for example one per
            dataset or study. This holds the name of the environment that
            settings are currently read from.""")


    @property
    def environments(self):
        return list(self._settings.keys())


    def read_config(self, config_file):
        """
        Loads every section of an INI file as an environment. A file that
        cannot be read or parsed, or that names an unknown setting, raises
        InvalidConfigurationFile.
        """
        cfg = configparser.ConfigParser(interpolation=None)
        # Keys such as "T" and "N" are case-sensitive.
        cfg.optionxform = str
        try:
            read = cfg.read(config_file)
        except configparser.Error as e:
            raise exc.InvalidConfigurationFile(str(e))
        if not read:
            raise exc.InvalidConfigurationFile("The config file '%s' could "
                    "not be read." % config_file)

        def safe_get(section, option, default=None):
            try:
                return cfg.get(section, option)
            except (configparser.NoSectionError, configparser.NoOptionError):
                return default

        for section in cfg.sections():
            unknown = set(cfg.options(section)) - set(DEFAULTS)
            if unknown:
                raise exc.InvalidConfigurationFile("Unknown setting(s) in "
                        "section '%s': %s" % (section,
                        ", ".join(sorted(unknown))))
            if section == "settings":
                section_name = "default"
                self._default_set = True
            else:
                section_name = section
            dct = self._settings[section_name] = dict(DEFAULTS)
            for key in DEFAULTS:
                dct[key] = safe_get(section, key, DEFAULTS[key])
            self._given[section_name] = set(cfg.options(section))

            # Without a [settings] section the first one read is the default.
            if not self._default_set:
                self._settings["default"] = self._settings[section]
                self._given["default"] = self._given[section]
                self._default_set = True


    def as_dict(self, env=None):
        """Returns every setting of an environment, resolved as by get()."""
        return dict((key, self.get(key, env=env)) for key in DEFAULTS)


def _truthy(val):
    if isinstance(val, str):
        return val.strip().lower() in ("1", "true", "yes", "on")
    return bool(val)


def get_environment():
    """
    The name of the active settings environment.
    """
    return settings.environment


def set_environment(env):
    """
    Makes `env` the active settings environment. Raises EnvironmentNotFound
    for a name no config file defined.
    """
    settings.environment = env


def list_environments():
    """
    Names of every settings environment read so far.
    """
    return settings.environments


def get_setting(key, env=None):
    """
    The resolved value of `key`, from `env` or the active environment.
    """
    return settings.get(key, env=env)


def set_setting(key, val, env=None):
    """
    Sets `key` for this process, in `env` or the active environment.
    """
    return settings.set(key, val, env=env)


def get_debug():
    return _debug


def set_debug(val):
    """
    Turns logging to stderr on or off. When on, a single StreamHandler is
    attached to the "pymerton" logger at DEBUG level.
    """
    global _debug, _debug_handler
    _debug = bool(val)
    if _debug:
        if _debug_handler is None:
            _debug_handler = logging.StreamHandler()
            _debug_handler.setFormatter(logging.Formatter(
                    "%(name)s %(levelname)s: %(message)s"))
            logger.addHandler(_debug_handler)
        logger.setLevel(logging.DEBUG)
    else:
        if _debug_handler is not None:
            logger.removeHandler(_debug_handler)
            _debug_handler = None
        logger.setLevel(logging.WARNING)


# ~/.pymerton.cfg is optional.
settings = Settings()
config_file = os.path.expanduser("~/.pymerton.cfg")
if os.path.exists(config_file):
    settings.read_config(config_file)
    set_debug(_truthy(get_setting("debug")))
