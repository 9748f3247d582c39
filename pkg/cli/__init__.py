"""
Command-Line Interface Module

Provides the topoflux command: persistence diagrams, topological optimization,
regularized embeddings, circular pseudotime and runtime benchmarks.
"""

__version__ = "1.0.0"
