"""pbwforge: exact PBW / canonical basis engine for symmetric affine quantum groups."""

__version__ = "0.1.0"
