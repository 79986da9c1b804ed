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

import pymerton
from pymerton import datasets
from pymerton import inference

series = datasets.load_dataset(pymerton.DEFAULT_DATASET)
print("Dataset:", series)

prelim = inference.preliminary_estimates(series)
print("MLE:", prelim.mle)
print("ACF fit (exp):", prelim.exponential)
print("ACF fit (pow):", prelim.power)
print()

for family in ("exp", "pow"):
    priors = inference.PriorSpec.from_preliminary(prelim, family, sc=5)
    fit = inference.map_estimate(series, family, priors, rng=11)
    print("MAP fit (%s):" % family)
    for name in sorted(fit.estimates):
        print("  %-8s %8.4f +/- %.4f" % (name, fit.estimates[name],
                fit.standard_errors[name]))
