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
from pymerton import model_select

# A fixed sc and shorter chains keep this to a few minutes.
series = datasets.load_dataset(pymerton.DEFAULT_DATASET)
report = model_select.compare_models(series, rng=42, sc=5, draws=500,
        warmup=500)

for row in report.to_rows():
    print("%-10s exp: %-12.4f pow: %-12.4f best: %s" % (row["criterion"],
            row["exp"], row["pow"], row["best"]))
