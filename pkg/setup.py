#!/usr/bin/env python

from setuptools import setup
import re

# Workaround for problems caused by this import
# It's either this or hardcoding the version.
#from pymerton.version import version
with open("pymerton/version.py", "rt") as vfile:
    version_text = vfile.read()
vmatch = re.search(r'version ?= ?"(.+)"$', version_text, re.M)
version = vmatch.groups()[0]

testing_requires = ["mock"]

setup(
    name="pymerton",
    version=version,
    description="Merton default model with correlated macro factors: "
            "simulation, variance scaling and decay-model comparison.",
    author="The pymerton Authors",
    keywords="credit risk default merton poisson lognormal long memory",
    classifiers=[
        "Development Status :: 4 - Beta",
        "License :: OSI Approved :: Apache Software License",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "pandas>=1.5",
    ] + testing_requires,
    packages=[
        "pymerton",
    ],
    package_data={
        "pymerton": ["data/*.csv"],
    },
    entry_points={
        "console_scripts": ["pymerton=pymerton.cli:main"],
    },
)
