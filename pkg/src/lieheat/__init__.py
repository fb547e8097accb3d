"""Lie expansions of time-ordered exponentials, heat-equation norm majorants,
and the noncommutative heat--Maurer--Cartan flow."""

__version__ = "0.1.0"
