"""
polyriesz: nonlocal energies of polygons.

Evaluates J_h(P) = ∫_P∫_P h(x - y) dx dy and its single-integral companion
E_h(P) = ∫_P h(x) dx on simple polygons, differentiates them with respect to
vertex positions, optimizes them under an area constraint and analyzes the
constrained Hessian spectra of regular polygons.
"""
import logging

__version__ = "0.3.0"

logging.getLogger("polyriesz").addHandler(logging.NullHandler())
