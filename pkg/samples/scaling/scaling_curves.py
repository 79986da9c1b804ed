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

from pymerton import diffusion
from pymerton import latent_gaussian as lg

t_max = 2 ** 14
kernels = [lg.PowerKernel(g) for g in (0.25, 0.5, 1.0, 2.0)]
kernels.append(lg.ExponentialKernel(0.9))

for kernel in kernels:
    curve = diffusion.scaling_curve(kernel, t_max)
    slope = diffusion.log_log_slope(curve, t_max // 16, t_max)
    print("%-30s phase: %-12s slope: %.3f" % (kernel,
            diffusion.classify_phase(kernel), slope))

print()
print("Scaling exponents at T=%s:" % t_max)
for row in diffusion.delta_table([0.25, 0.5, 0.75, 1.0, 1.5], t_max):
    print("  gamma=%(gamma)s  delta=%(delta).3f  predicted=%(predicted).3f"
            % row)
