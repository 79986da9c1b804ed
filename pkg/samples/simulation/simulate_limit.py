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

from pymerton import latent_gaussian as lg
from pymerton import merton_core

rng = np.random.default_rng(7)
ip = merton_core.IntensityParams(18.1, 1.4)

for kernel in (lg.IndependentKernel(), lg.ExponentialKernel(0.89),
        lg.PowerKernel(0.64)):
    counts = merton_core.simulate_poisson_lognormal(ip, kernel, 104, rng)
    print("Kernel:", kernel)
    print("  mean: %.2f  variance: %.2f  max: %s" % (counts.mean(),
            counts.var(), counts.max()))

mean, var = merton_core.intensity_moments(ip)
print()
print("Intensity mean: %.2f  variance: %.2f" % (mean, var))
