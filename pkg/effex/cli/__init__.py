"""
Effex Command Line
==================

Entry points for the `effex` and `effex-corpus` tools.
"""

__all__ = ["run_effex", "run_corpus"]
