"""Toolkit for generating, reviewing, and publishing counterfactual questions
about small programs."""

__version__ = "0.1.0"
