"""Quote recommendation workbench.

Builds context-quote datasets from raw corpora, trains a sememe-enhanced
dual-encoder retrieval model, evaluates ranked quote recommendations and
serves them over HTTP.
"""

__version__ = "0.1.0"
