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

from pymerton import merton_core

params = merton_core.MertonParams(0.004, 0.2, 5000)
ip = merton_core.limit_map(params)
print("Merton parameters:", params)
print("Limit intensity:", ip)
print("Moment-matched intensity:", merton_core.moment_matched_map(params))

k = np.arange(200)
limit = merton_core.mixture_pmf(k, ip)
for link in (merton_core.PROBIT, merton_core.LOGISTIC):
    finite = merton_core.merton_pmf(k, params, link=link)
    print("Total variation (%s link): %.5f" % (link,
            merton_core.total_variation(finite, limit)))
