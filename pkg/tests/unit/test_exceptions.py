#!/usr/bin/env python
# -*- coding: utf-8 -*-

import json
import unittest

import pymerton.exceptions as exc



class ExceptionsTest(unittest.TestCase):
    def __init__(self, *args, **kwargs):
        super(ExceptionsTest, self).__init__(*args, **kwargs)

    def setUp(self):
        pass

    def tearDown(self):
        pass

    def test_default_message(self):
        err = exc.FitFailure()
        self.assertEqual(err.message, "FitFailure")
        self.assertEqual(str(err), "FitFailure")

    def test_exit_status(self):
        self.assertEqual(exc.DomainError.exit_status, 1)
        self.assertEqual(exc.InvalidSetting.exit_status, 2)
        self.assertEqual(exc.MissingSeed.exit_status, 2)
        self.assertTrue(issubclass(exc.UnknownCommand, exc.UsageError))
        self.assertTrue(issubclass(exc.UsageError, exc.PymertonException))

    def test_non_convergence_diagnostics(self):
        err = exc.NonConvergence("stuck", diagnostics={"rhat": 1.3})
        self.assertEqual(err.diagnostics, {"rhat": 1.3})
        self.assertEqual(err.details, {"rhat": 1.3})
        self.assertEqual(exc.NonConvergence("x").diagnostics, {})

    def test_lfo_refit_failed(self):
        err = exc.LfoRefitFailed("refit", t0=55)
        self.assertEqual(err.t0, 55)

    def test_parse_error(self):
        err = exc.ParseError("bad field", line=4, column=2)
        self.assertEqual(err.line, 4)
        self.assertEqual(err.column, 2)
        self.assertEqual(str(err), "bad field (line 4, column 2)")
        self.assertEqual(str(exc.ParseError("no file")), "no file")

    def test_error_document(self):
        doc = exc.to_error_document(exc.ParseError("bad", line=3, column=1))
        self.assertEqual(doc["schema"], exc.ERROR_SCHEMA)
        self.assertEqual(doc["error"], "ParseError")
        self.assertEqual(doc["exit_status"], 1)
        self.assertEqual(doc["details"], {"line": 3, "column": 1})
        # Must be serialisable as is.
        json.dumps(doc)

    def test_error_document_usage(self):
        doc = exc.to_error_document(exc.MissingSeed("no seed"))
        self.assertEqual(doc["exit_status"], 2)
        self.assertFalse("details" in doc)

    def test_error_document_foreign(self):
        doc = exc.to_error_document(ValueError("nope"))
        self.assertEqual(doc["error"], "ValueError")
        self.assertEqual(doc["message"], "nope")
        self.assertEqual(doc["exit_status"], 1)



if __name__ == "__main__":
    unittest.main()
