"""
Effex - User-Defined Effects over Call-by-Push-Value
====================================================

Reference implementation of four calculi sharing one call-by-push-value core:
the plain core (MAM), effect handlers (λeff), monadic reflection (λmon) and
delimited control with shift0/dollar (λdel).

Modules:
- core: syntax, surface language, type systems, reduction, denotations,
  translations between the calculi and a program generator
- cli: the `effex` and `effex-corpus` command-line tools
- utils: logging, configuration, validation and errors
"""

__version__ = "0.1.0"
