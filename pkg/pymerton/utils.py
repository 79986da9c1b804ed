#!/usr/bin/env python
# -*- coding: utf-8 -*-

import hashlib
import json
import os
import shutil
import tempfile

import numpy as np

import pymerton.exceptions as exc


class SelfDeletingTempfile(object):
    """
    Context manager yielding the path of a new, empty file made by
    tempfile.mkstemp(). The file is removed on exit if it still exists.

    Usage::

        with SelfDeletingTempfile() as path:
            settings.read_config(path)
    """
    name = None

    def __enter__(self):
        fd, self.name = tempfile.mkstemp()
        os.close(fd)
        return self.name

    def __exit__(self, exc_type, exc_value, tb):
        if os.path.exists(self.name):
            os.unlink(self.name)


class SelfDeletingTempDirectory(object):
    """
    Context manager yielding the path of a new directory made by
    tempfile.mkdtemp(). The directory and everything written into it are
    removed on exit; the tests use it as a scratch output directory.
    """
    name = None

    def __enter__(self):
        self.name = tempfile.mkdtemp()
        return self.name

    def __exit__(self, exc_type, exc_value, tb):
        shutil.rmtree(self.name)


def get_checksum(content, encoding="utf8", algorithm="sha256"):
    """
    Returns the hex digest for the given content. If 'content' is a file
    path, that file is read and its contents used. Otherwise, 'content' is
    assumed to be the string or bytes whose checksum is desired. Text is
    encoded using the specified encoding.
    """
    md = hashlib.new(algorithm)
    if isinstance(content, str) and os.path.isfile(content):
        with open(content, "rb") as ff:
            md.update(ff.read())
        return md.hexdigest()
    if isinstance(content, str):
        content = content.encode(encoding)
    md.update(content)
    return md.hexdigest()


def canonical_json(obj):
    """
    Serialises `obj` the same way every time: sorted keys, fixed
    indentation and a trailing newline. Used for every JSON artifact and
    for the config hash, so equal objects give byte-identical files.
    """
    return json.dumps(obj, sort_keys=True, indent=2,
            default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError("Object of type %s is not JSON serialisable" %
            obj.__class__.__name__)


def atomic_write(path, text, encoding="utf-8"):
    """
    Writes `text` to `path` by writing a temp file in the same directory
    and renaming it over the target, so readers never see a partial file.
    """
    dirname = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(dirname):
        os.makedirs(dirname)
    fd, tmp = tempfile.mkstemp(dir=dirname, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding=encoding, newline="\n") as ff:
            ff.write(text)
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def coerce_to_list(val, convert=None):
    """
    For parameters that can take either a single value, a comma-separated
    string or a list of values, this function will ensure that the result
    is a list containing the passed values, optionally passed through
    `convert`.
    """
    if val is None or val == "":
        return []
    if isinstance(val, str):
        val = [part.strip() for part in val.split(",") if part.strip()]
    elif not isinstance(val, (list, tuple, np.ndarray)):
        val = [val]
    if convert is not None:
        val = [convert(v) for v in val]
    return list(val)


def update_exc(err, msg, before=True, separator=": "):
    """
    Puts `msg` in front of the message of `err` (behind it when `before`
    is False) and returns the same exception, so its type survives. Used
    to say which refit or grid point a failure came from.
    """
    emsg = getattr(err, "message", None) or str(err)
    if before:
        parts = (msg, separator, emsg)
    else:
        parts = (emsg, separator, msg)
    new_msg = "%s%s%s" % parts
    err.message = new_msg
    err.args = (new_msg, ) + err.args[1:]
    return err


def env(*args, **kwargs):
    """
    The value of the first of the named environment variables that is set
    and not empty, else the `default` keyword (an empty string when
    missing).
    """
    for arg in args:
        value = os.environ.get(arg, None)
        if value:
            return value
    return kwargs.get("default", "")


def make_rng(seed):
    """
    Returns a numpy Generator for `seed`. Generators are passed through
    unchanged so that functions can accept either.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_rngs(rng, count):
    """
    Derives `count` independent generators from `rng`. The children
    depend only on the state of `rng`, so a seeded parent always yields
    the same children.
    """
    seeds = make_rng(rng).integers(0, 2 ** 63 - 1, size=count)
    return [np.random.default_rng(int(s)) for s in seeds]


def dyadic_horizons(t_max):
    """Returns the powers of two 1, 2, 4, ... that do not exceed t_max."""
    if t_max < 1:
        return np.array([], dtype=np.int64)
    top = int(np.floor(np.log2(t_max)))
    return 2 ** np.arange(top + 1, dtype=np.int64)


def central_gradient(fnc, x, step=1e-6):
    """
    Central finite-difference gradient of the scalar function `fnc` at
    `x`. Steps are relative to the magnitude of each coordinate.
    """
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for idx in range(x.size):
        hh = step * max(1.0, abs(x[idx]))
        up = x.copy()
        dn = x.copy()
        up[idx] += hh
        dn[idx] -= hh
        grad[idx] = (fnc(up) - fnc(dn)) / (2 * hh)
    return grad


def numerical_hessian(grad, x, step=1e-5):
    """
    Hessian of a function whose gradient is `grad`, from central
    differences of the gradient. The result is symmetrised.
    """
    x = np.asarray(x, dtype=float)
    size = x.size
    hess = np.empty((size, size))
    for idx in range(size):
        hh = step * max(1.0, abs(x[idx]))
        up = x.copy()
        dn = x.copy()
        up[idx] += hh
        dn[idx] -= hh
        hess[:, idx] = (grad(up) - grad(dn)) / (2 * hh)
    return 0.5 * (hess + hess.T)


def safe_inverse(matrix):
    """
    Inverts `matrix`, returning a matrix of NaN instead of raising when it
    is singular. Used for standard errors, where NaN is the honest answer.
    """
    try:
        return np.linalg.inv(matrix)
    except np.linalg.LinAlgError:
        return np.full_like(np.asarray(matrix, dtype=float), np.nan)


def check_positive(name, value, allow_zero=False, error=exc.InvalidParameter):
    """Raises `error` unless `value` is a finite positive number."""
    ok = np.isfinite(value) and (value >= 0 if allow_zero else value > 0)
    if not ok:
        qual = "non-negative" if allow_zero else "positive"
        raise error("'%s' must be %s; got %r." % (name, qual, value))
    return value
