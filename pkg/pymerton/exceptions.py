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

ERROR_SCHEMA = "pymerton.error/1"


class PymertonException(Exception):
    """
    The base class for every exception raised by pymerton. The
    `exit_status` is what the command-line tool exits with when the
    exception escapes a command.
    """
    exit_status = 1

    def __init__(self, message=None, details=None):
        self.message = message or self.__class__.__name__
        self.details = details
        super(PymertonException, self).__init__(self.message)

    def __str__(self):
        return self.message


# Domain errors: the model or the data cannot support the request.

class ConstantSeries(PymertonException):
    pass

class DegenerateAlpha(PymertonException):
    pass

class DomainError(PymertonException):
    pass

class EmptyDataset(PymertonException):
    pass

class FitFailure(PymertonException):
    pass

class InsufficientDraws(PymertonException):
    pass

class InsufficientPoints(PymertonException):
    pass

class InsufficientSamples(PymertonException):
    pass

class InvalidParameter(PymertonException):
    pass

class ModelSelectionFailed(PymertonException):
    pass

class NotPositiveDefinite(PymertonException):
    pass

class SchemaViolation(PymertonException):
    pass

class ZeroObligors(PymertonException):
    pass


class NonConvergence(PymertonException):
    """
    Raised when an optimizer or sampler fails to converge. Whatever the
    routine knew at the time (iterations, gradient norm, R-hat values) is
    kept in `diagnostics`.
    """
    def __init__(self, message=None, diagnostics=None):
        super(NonConvergence, self).__init__(message, details=diagnostics)
        self.diagnostics = diagnostics or {}


class LfoRefitFailed(PymertonException):
    """
    A refit inside the leave-future-out loop failed; `t0` is the length
    of the training prefix that could not be fitted.
    """
    def __init__(self, message=None, t0=None, details=None):
        super(LfoRefitFailed, self).__init__(message, details=details)
        self.t0 = t0


class ParseError(PymertonException):
    """
    A dataset file could not be parsed. Line and column numbers are
    1-based and refer to the file as it is on disk.
    """
    def __init__(self, message=None, line=None, column=None):
        super(ParseError, self).__init__(message,
                details={"line": line, "column": column})
        self.line = line
        self.column = column

    def __str__(self):
        if self.line is None:
            return self.message
        return "%s (line %s, column %s)" % (self.message, self.line,
                self.column)


# Usage errors: the request itself is malformed.

class UsageError(PymertonException):
    exit_status = 2

class EnvironmentNotFound(UsageError):
    pass

class InvalidConfigurationFile(UsageError):
    pass

class InvalidSetting(UsageError):
    pass

class MissingSeed(UsageError):
    pass

class UnknownCommand(UsageError):
    pass


def to_error_document(err):
    """
    Returns a JSON-serialisable dict describing `err`. Exceptions that are
    not pymerton exceptions are reported with an exit status of 1.

    Usage::

        try:
            command.run()
        except Exception as e:
            doc = to_error_document(e)
            sys.exit(doc["exit_status"])
    """
    if isinstance(err, PymertonException):
        message = str(err)
        details = err.details
        status = err.exit_status
    else:
        message = str(err) or err.__class__.__name__
        details = None
        status = 1
    doc = {"schema": ERROR_SCHEMA,
            "error": err.__class__.__name__,
            "message": message,
            "exit_status": status,
            }
    if details is not None:
        doc["details"] = details
    return doc
