import os
from setuptools import find_packages, setup

with open(os.path.join(os.path.dirname(__file__), 'README.md')) as readme:
    README = readme.read()

setup(
    name='fsc-distill',
    version='0.1',
    packages=find_packages(exclude=['tests', 'tests.*']),
    include_package_data=True,
    package_data={'fsc_distill': ['bundled/*.json', 'bundled/*.csv']},
    description='Learn small finite-state controllers for POMDP strategies and evaluate them exactly',
    long_description=README,
    long_description_content_type='text/markdown',
    install_requires=[
        'django>=3.2',
        'numpy>=1.20',
        'scipy>=1.6',
        'pydantic>=2.0',
    ],
    entry_points={
        'console_scripts': [
            'fsc-distill = fsc_distill.__main__:main',
        ],
    },
    classifiers=[
        'Framework :: Django',
        'Intended Audience :: Science/Research',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
)
