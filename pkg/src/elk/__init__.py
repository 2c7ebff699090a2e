"""Reactive multicomponent electrolytes in one space dimension, with an entropy auditor."""

__version__ = "0.1.0"
