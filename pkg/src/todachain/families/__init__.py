"""Constructions of exact solution families."""
