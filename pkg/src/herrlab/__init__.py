"""herrlab: Galois and Iwasawa cohomology via Lubin-Tate Herr complexes."""

__version__ = "0.1.0"
