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

import numpy as np

from pymerton import kesten_limit

b = kesten_limit.MixedParams.limit_constant(0.9, 0.98)
mp = kesten_limit.MixedParams(0.9, 18.0, 30.0, 1.4, theta=0.9, b=b)
print("Parameters:", mp)
print("beta * b: %.4f" % mp.beta_b)

sim = kesten_limit.simulate_mixed(mp, 20000, rng=5)
# Monte-Carlo standard error from the means of 40 consecutive blocks.
blocks = sim.counts.reshape(40, -1).mean(axis=1)
mc_se = blocks.std(ddof=1) / np.sqrt(blocks.size)
print("Mean count: %.2f +/- %.2f (expected %.2f)" % (sim.counts.mean(),
        mc_se, kesten_limit.mixed_mean(mp)))
