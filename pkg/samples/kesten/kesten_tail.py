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

rng = np.random.default_rng(3)
a, beta_b = 0.9, 0.5

kappa = kesten_limit.kesten_theoretical_exponent(a, beta_b)
print("Theoretical tail exponent: %.4f" % kappa)
print("E[a_t^kappa] at that exponent: %.6f" % kesten_limit.kesten_moment(a,
        beta_b, kappa))

samples = kesten_limit.simulate_kesten(a, beta_b, 10 ** 6, rng)
plot = kesten_limit.hill_plot(samples, [250, 500, 1000, 2000, 4000])
print()
print("Hill estimates:")
for row in plot.to_rows():
    print("  k_top=%(k_top)-6s kappa=%(kappa).4f se=%(se).4f" % row)
