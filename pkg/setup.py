#!/usr/bin/env python

from setuptools import setup

setup(name='specflow',
      version='0.1',
      description='Spectral flow and Fredholm index verification for '
                  'paths of self-adjoint operators on a Hilbert scale',
      packages=['specflow', 'specflow.path_drivers', 'specflow.tests'],
      package_data={'specflow': ['fixtures/*.json']},
      install_requires=['numpy>=1.20', 'scipy>=1.6'],
      extras_require={'test': ['hypothesis', 'pytest']},
      entry_points={'console_scripts': ['specflow = specflow.cli:main']},
      )
