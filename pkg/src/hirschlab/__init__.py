"""Numerical companion to harmonic measures on the Hirsch foliation.

Modules: ``circle`` (g-functions and g-measures for the doubling map),
``pants`` (admissible pants metrics and their audits), ``foliation``
(gluing and holonomy), ``diffusion`` (leafwise Brownian motion),
``measures`` (candidate harmonic measures and statistical tests) and
``cli``.
"""
__version__ = "0.1.0"
