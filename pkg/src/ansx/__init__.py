"""Asymmetric numeral systems: exact binary coding, table-based stream coding,
statistical self-analysis, output hardening and forbidden-symbol error correction."""

__version__ = "0.1.0"
FORMAT_VERSIONS = {"ANS1": 1, "ANSF": 1}
