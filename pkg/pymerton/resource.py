# Copyright 2010 Jacob Kaplan-Moss

# Copyright 2011 OpenStack LLC.
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

"""
Base class for the result objects returned by the estimation and analysis
routines.
"""

import numpy as np


class BaseResult(object):
    """
    A result represents the outcome of one computation (a fit, a scaling
    curve, a model comparison). This is pretty much just a bag for
    attributes that also knows how to turn itself into plain JSON types.
    """
    # Atts not to display when showing the __repr__()
    _non_display = []


    def __init__(self, info=None, **kwargs):
        info = dict(info or {})
        info.update(kwargs)
        self._info = info
        self._add_details(info)


    def _add_details(self, info):
        """
        Takes the dict of computed values and sets the corresponding
        attributes on the object.
        """
        for (key, val) in info.items():
            setattr(self, key, val)


    def to_dict(self):
        """
        Returns the public attributes as a dict of JSON-compatible values:
        arrays become lists and numpy scalars become Python numbers.
        """
        keys = sorted(key for key in self.__dict__.keys() if key[0] != "_")
        return dict((key, _plain(getattr(self, key))) for key in keys)


    def __repr__(self):
        reprkeys = sorted(key for key in self.__dict__.keys()
                if (key[0] != "_")
                and (key not in self._non_display))
        info = ", ".join("%s=%s" % (key, _short(getattr(self, key)))
                for key in reprkeys)
        return "<%s %s>" % (self.__class__.__name__, info)


    def __eq__(self, other):
        """
        Two results are equal when they are of the same class and all of
        their public attributes are equal.
        """
        if not isinstance(other, self.__class__):
            return False
        return self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self.__eq__(other)

    __hash__ = None


def _plain(val):
    if isinstance(val, BaseResult):
        return val.to_dict()
    if isinstance(val, np.ndarray):
        return [_plain(v) for v in val.tolist()]
    if isinstance(val, (list, tuple)):
        return [_plain(v) for v in val]
    if isinstance(val, dict):
        return dict((str(k), _plain(v)) for k, v in val.items())
    if isinstance(val, np.integer):
        return int(val)
    if isinstance(val, (np.floating, float)):
        val = float(val)
        if np.isnan(val):
            return None
        if np.isinf(val):
            return "inf" if val > 0 else "-inf"
        return val
    if isinstance(val, np.bool_):
        return bool(val)
    return val


def _short(val):
    if isinstance(val, np.ndarray) and val.size > 6:
        return "array(shape=%s)" % (val.shape, )
    if isinstance(val, (list, tuple)) and len(val) > 6:
        return "[%s items]" % len(val)
    return val
