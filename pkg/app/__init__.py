"""ltisym - symmetry certificates and canonical forms for LTI systems."""

__version__ = "1.0.0"
