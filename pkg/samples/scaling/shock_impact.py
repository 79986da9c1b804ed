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

from pymerton import diffusion
from pymerton import latent_gaussian as lg

alpha = 1.4
kernels = [lg.ExponentialKernel(0.9), lg.PowerKernel(1.5), lg.PowerKernel(1.0),
        lg.PowerKernel(0.5)]

for kernel in kernels:
    print("Kernel:", kernel)
    for horizon in (1, 10, 100, np.inf):
        impact = diffusion.impact_ratio(kernel, alpha, horizon=horizon)
        print("  horizon %-5s impact %-10.4g (%s)" % (impact.horizon,
                impact.value, impact.divergence))
    print()
