from codecs import open
from os import path

from setuptools import find_packages, setup

from drnash import version

here = path.abspath(path.dirname(__file__))

try:
    # Get the long description from the relevant file
    with open(path.join(here, 'README.rst'), encoding='utf-8') as f:
        long_description = f.read()
except:
    long_description = ''

setup(
    name='drnash',
    version=version,
    description='Demand-response equilibrium simulator for PV prosumers, a DR provider and a utility',
    long_description=long_description,
    license='MIT License',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Topic :: Scientific/Engineering',
    ],

    keywords='demand response prosumer nash equilibrium energy',
    install_requires=[
        'numpy',
        'pandas>=1.5',
        'text-unidecode'
    ],

    include_package_data=True,
    package_data={'drnash': ['scenarios/*.scenario']},
    packages=find_packages(include=['drnash', 'drnash.*']),
    entry_points={
        'console_scripts': ['drnash=drnash.cli:main'],
    },
)
