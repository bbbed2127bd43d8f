"""Operadic resolutions on labeled trees.

Set-level and chain-level cylinder constructions over composition
segments, free and pointed-free operads, the cotriple tower, bar and
cobar complexes, and exact integer homology for verifying the structural
comparison theorems at small arity.
"""

__version__ = "0.1.0"
