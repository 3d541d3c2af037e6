"""Evidence-aware biomedical literature search and evaluation workbench."""

__version__ = "0.1.0"
