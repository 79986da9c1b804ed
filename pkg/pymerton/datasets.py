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
Reading default-count datasets and writing the CSV and JSON artifacts.

Datasets are UTF-8 CSV files with the header "year,obligors,defaults".
Lines starting with "#" are comments. Every artifact written here starts
with (CSV) or contains (JSON) the package version, the seed and the
SHA-256 of the canonical config, and is written atomically.
"""

import io
import logging
import os
import re

import numpy as np
import pandas as pd

import pymerton.exceptions as exc
from pymerton import inference
from pymerton.resource import _plain
from pymerton import utils
from pymerton.version import version

logger = logging.getLogger(__name__)

HEADER = ("year", "obligors", "defaults")
FLOAT_FORMAT = "%.10g"
DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")


def _data_lines(text):
    """1-based line numbers of the lines pandas treats as header or data."""
    return [num + 1 for num, line in enumerate(text.splitlines())
            if line.strip() and not line.lstrip().startswith("#")]


def _read_text(path):
    try:
        with io.open(path, "r", encoding="utf-8") as ff:
            return ff.read()
    except (IOError, OSError) as e:
        raise exc.ParseError("Cannot read dataset '%s': %s" % (path, e))
    except UnicodeDecodeError as e:
        raise exc.ParseError("Dataset '%s' is not valid UTF-8: %s" % (path,
                e))


def _field_count_error(text, lines):
    source = text.splitlines()
    width = len(source[lines[0] - 1].split(","))
    for num in lines[1:]:
        fields = source[num - 1].split("#")[0].split(",")
        if len(fields) != width:
            return exc.ParseError("Expected %s fields, found %s." % (width,
                    len(fields)), line=num, column=min(len(fields),
                    width) + 1)
    return exc.ParseError("The dataset could not be parsed.")


def _to_int(value, line, column, name):
    try:
        return int(str(value).strip())
    except (TypeError, ValueError):
        raise exc.ParseError("Field '%s' must be an integer; got %r."
                % (name, value), line=line, column=column)


def bundled_datasets():
    """
    The synthetic series shipped with the package, as a dict of name (the
    file name without ".csv") to path.
    """
    return dict((os.path.splitext(name)[0], os.path.join(DATA_DIR, name))
            for name in sorted(os.listdir(DATA_DIR)) if name.endswith(".csv"))


def resolve_dataset(name):
    """Returns the path of a bundled series by name; other values pass."""
    return bundled_datasets().get(name, name)


def load_dataset(path, size=inference.PORTFOLIO_SIZE):
    """
    Reads and validates a dataset file and returns the PortfolioSeries with
    normalized counts already filled in.
    """
    text = _read_text(path)
    lines = _data_lines(text)
    if not lines:
        raise exc.EmptyDataset("Dataset '%s' is empty." % path)
    try:
        frame = pd.read_csv(io.StringIO(text), comment="#", dtype=str,
                skipinitialspace=True, keep_default_na=False)
    except pd.errors.ParserError:
        raise _field_count_error(text, lines)
    columns = tuple(str(col).strip() for col in frame.columns)
    if columns != HEADER:
        raise exc.SchemaViolation("The header must be '%s'; got '%s'."
                % (",".join(HEADER), ",".join(columns)))
    if not len(frame):
        raise exc.EmptyDataset("Dataset '%s' has a header but no rows."
                % path)
    rows = []
    for idx, record in enumerate(frame.itertuples(index=False)):
        line = lines[idx + 1]
        rows.append([_to_int(val, line, col + 1, HEADER[col])
                for col, val in enumerate(record)])
    years, obligors, defaults = (np.array(col, dtype=np.int64)
            for col in zip(*rows))
    _check_schema(years, obligors, defaults, lines)
    series = inference.PortfolioSeries(years, obligors, defaults)
    logger.debug("Loaded %s years from '%s'.", series.T, path)
    return inference.normalize_counts(series, size=size)


def _check_schema(years, obligors, defaults, lines):
    steps = np.diff(years)
    if np.any(steps <= 0):
        idx = int(np.argmax(steps <= 0)) + 1
        kind = "duplicate" if steps[idx - 1] == 0 else "out-of-order"
        raise exc.SchemaViolation("Years must be strictly increasing; %s "
                "year %s on line %s." % (kind, years[idx], lines[idx + 1]))
    if np.any(obligors <= 0):
        idx = int(np.argmax(obligors <= 0))
        raise exc.SchemaViolation("Obligor counts must be positive; got %s "
                "in year %s (line %s)." % (obligors[idx], years[idx],
                lines[idx + 1]))
    if np.any(defaults < 0):
        idx = int(np.argmax(defaults < 0))
        raise exc.SchemaViolation("Default counts must not be negative; "
                "line %s." % lines[idx + 1])
    if np.any(defaults > obligors):
        idx = int(np.argmax(defaults > obligors))
        raise exc.SchemaViolation("Defaults exceed obligors in year %s "
                "(line %s)." % (years[idx], lines[idx + 1]))


def config_checksum(config):
    """The SHA-256 of the canonical JSON form of `config`."""
    return utils.get_checksum(utils.canonical_json(_plain(config)))


def artifact_header(seed, config_sha256):
    return "# pymerton %s seed=%s config_sha256=%s" % (version, seed,
            config_sha256)


def write_csv(path, frame, seed, config_sha256):
    """
    Writes a DataFrame as CSV behind the artifact comment line.
    """
    if not isinstance(frame, pd.DataFrame):
        frame = pd.DataFrame(frame)
    body = frame.to_csv(index=False, float_format=FLOAT_FORMAT,
            lineterminator="\n")
    return utils.atomic_write(path, "%s\n%s" % (artifact_header(seed,
            config_sha256), body))


def write_series(path, series, seed, config_sha256):
    """
    Writes the year, obligor and default columns of a series, which
    load_dataset() reads back into an equal series.
    """
    frame = series.to_frame()[list(HEADER)]
    return write_csv(path, frame, seed, config_sha256)


def write_json(path, document, seed, config):
    """
    Writes a JSON artifact carrying the seed, the config echo and its hash
    next to the fields of `document`.
    """
    doc = dict(_plain(document))
    doc["seed"] = seed
    doc["config"] = _plain(config)
    doc["config_sha256"] = config_checksum(config)
    doc.setdefault("version", version)
    return utils.atomic_write(path, utils.canonical_json(doc))


_HEADER_RE = re.compile(r"^# pymerton (\S+) seed=(\S+) config_sha256=(\S+)$")


def read_artifact_header(path):
    """
    Returns (version, seed, config_sha256) from the first line of a CSV
    artifact, or None when the line is missing.
    """
    with io.open(path, "r", encoding="utf-8") as ff:
        first = ff.readline().rstrip("\n")
    match = _HEADER_RE.match(first)
    return match.groups() if match else None
