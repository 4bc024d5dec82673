# -*- coding: utf-8 -*-
#
# cmind documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import os
import sys

sys.path.insert(0, os.path.abspath('../src'))

# -- General configuration ------------------------------------------------

extensions = ['sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.autosummary',
    'sphinx.ext.napoleon']

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

# General information about the project.
project = u'cmind'
author = u'cmind developers'
copyright = u'2026, ' + author

# The full version, including alpha/beta/rc tags.
from cmind import __version__ as release
version = release

language = None

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

pygments_style = 'sphinx'

todo_include_todos = False


# -- Options for HTML output ----------------------------------------------

import sphinx_rtd_theme
html_theme = 'sphinx_rtd_theme'
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]

html_static_path = ['_static']

htmlhelp_basename = 'cminddoc'


# -- Options for LaTeX output ---------------------------------------------

latex_elements = {}

latex_documents = [
    (master_doc, 'cmind.tex', u'cmind Documentation',
     author, 'manual'),
]


# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'cmind', u'cmind Documentation',
     [author], 1)
]


# -- Options for Texinfo output -------------------------------------------

texinfo_documents = [
    (master_doc, 'cmind', u'cmind Documentation',
     author, 'cmind', 'Bug localization in C sources.',
     'Miscellaneous'),
]


intersphinx_mapping = {'https://docs.python.org/': None,
                       'pandas': ('https://pandas.pydata.org/pandas-docs/stable/', None),
                       'networkx': ('https://networkx.org/documentation/stable/', None),
                       'requests': ('https://requests.readthedocs.io/en/latest/', None)}
