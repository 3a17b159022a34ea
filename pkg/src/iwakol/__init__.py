"""Exact arithmetic for Iwasawa algebra quotients, Fitting ideals, and
Kolyvagin derivative calculus over finite p-adic coefficient rings."""

__version__ = "0.1.0"
