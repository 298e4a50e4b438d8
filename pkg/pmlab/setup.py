#!/usr/bin/env python

# SPDX-FileCopyrightText: 2024 The pmlab Authors
#
# SPDX-License-Identifier: BSD-3-Clause

import configparser
import os

from setuptools import setup


def read(fname):
    return open(os.path.join(os.path.dirname(__file__), fname),
                encoding="UTF-8").read()


config = configparser.ConfigParser()
config.read_file(open(os.path.join(os.path.dirname(__file__), 'pmlab.cfg')))
info = dict(config.items('pmlab'))

requires = ['numpy >= 1.25', 'scipy >= 1.11']

setup(
    name='pmlab',
    version=info.get('version', '0.0.1'),
    description=info.get(
        'description',
        'Planted matching phase transition laboratory'),
    long_description=read('doc/index.rst'),
    author='The pmlab Authors',
    package_dir={'pmlab': '.'},
    packages=[
        'pmlab',
        'pmlab.command',
        'pmlab.tests',
        ],

    package_data={
        'pmlab': ['pmlab.cfg', 'doc/*.rst'],
        },

    classifiers=[
        'Development Status :: 4 - Beta',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Natural Language :: English',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Mathematics',
        ],
    license='BSD-3-Clause',
    python_requires='>=3.10',
    install_requires=requires,
    zip_safe=False,
    entry_points="""
    [console_scripts]
    pmlab = pmlab.cli:main
    """,
    test_suite='tests',
    )
