# -*- coding: utf-8 -*-
#
# lrtrap documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import sphinx_bootstrap_theme

import lrtrap

# -- General configuration ------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.viewcode",
    "sphinx.ext.mathjax",
    "sphinx.ext.doctest",
    "sphinx.ext.intersphinx",
    "numpydoc",
]

templates_path = ["_templates"]
source_suffix = ".rst"
master_doc = "index"

project = "lrtrap"
copyright = "2026, lrtrap developers"
author = "lrtrap developers"

version = lrtrap.__version__
release = lrtrap.__version__

language = "en"
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store", "tests/*"]
pygments_style = "sphinx"
todo_include_todos = False

# -- Options for HTML output ----------------------------------------------

html_theme = "bootstrap"
html_theme_path = sphinx_bootstrap_theme.get_html_theme_path()
html_title = "%s v%s Manual" % (project, version)

html_theme_options = {
    "navbar_title": "lrtrap",
    "navbar_sidebarrel": False,
}

htmlhelp_basename = "lrtrapdoc"

# -- Options for LaTeX output ---------------------------------------------

latex_elements = {}
latex_documents = [
    (master_doc, "lrtrap.tex", "lrtrap Documentation", author, "manual"),
]

# -- Options for manual page output ---------------------------------------

man_pages = [(master_doc, "lrtrap", "lrtrap Documentation", [author], 1)]

# -- Options for Texinfo output -------------------------------------------

texinfo_documents = [
    (
        master_doc,
        "lrtrap",
        "lrtrap Documentation",
        author,
        "lrtrap",
        "Trapping of excitations on chains with long-range couplings",
        "Miscellaneous",
    ),
]

# -----------------------------------------------------------------------------
# Autosummary
# -----------------------------------------------------------------------------

autosummary_generate = True

# avoid showing members twice
numpydoc_show_class_members = False
class_members_toctree = True
numpydoc_show_inherited_class_members = True
numpydoc_xref_param_type = True

autodoc_default_options = {"members": True, "undoc-members": True}

intersphinx_mapping = {
    "numpy": ("https://numpy.org/doc/stable/", None),
    "pandas": ("https://pandas.pydata.org/docs/", None),
    "python": ("https://docs.python.org/3.11/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
}

mathjax3_config = {
    "TeX": {"equationNumbers": {"autoNumber": "AMS", "useLabelIds": True}},
}
