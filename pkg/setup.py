#! /usr/bin/python
"""Setuptools-based setup script for cmind.

For a basic installation just type the command::

  python setup.py install

"""

from setuptools import setup, find_packages

setup(name='cmind',
      version='0.1.0',
      description='bug localization in C sources with a model on a leash',
      author='cmind developers',
      classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Developers',
        'License :: OSI Approved :: BSD License',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Topic :: Software Development :: Debuggers',
        'Topic :: Software Development :: Quality Assurance',
        ],
      packages=find_packages('src'),
      package_dir={'': 'src'},
      package_data={'cmind': ['prompts/templates/*.txt',
                              'data/obs_toolbar/*.txt',
                              'data/obs_toolbar/*.jsonl',
                              'data/obs_toolbar/*.rst',
                              'data/obs_toolbar/source/*/*']},
      license='BSD',
      long_description=open('README.rst').read(),
      python_requires='>=3.8',
      tests_require = ['pytest', 'hypothesis'],
      install_requires=['numpy', 'pandas>=0.23.0', 'matplotlib', 'networkx>=2.4', 'requests'],
      entry_points={'console_scripts': ['cmind=cmind.cli:main']},
      )
