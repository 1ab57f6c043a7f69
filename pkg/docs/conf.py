#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Sphinx configuration of the otsp documentation.

import os
import sys

# Import the package from the source tree
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import otsp  # noqa: E402

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.viewcode']

source_suffix = '.rst'
master_doc = 'index'

project = u'OTSP'
author = otsp.AUTHOR
copyright = u'2026, {}'.format(author)
version = otsp.VERSION
release = otsp.VERSION

exclude_patterns = ['_build']
pygments_style = 'sphinx'
html_theme = 'alabaster'
