"""Quasi-Lie schemes for Abel equations: exact vector-field algebra, the affine
group of curves, invariants, reductions and jet-space geometry."""

from .errors import (DimensionMismatch, Diverged, DomainError, InconsistencyError,
                     ParseError, QuasiLieError, ReductionError, SchemeError,
                     UnsupportedBranch)
from .expr import TFunc, parse
from .jets import Jet
from .vfalg import PolyVF, SchemeSpec, bracket, check_scheme, normalizer
from .abel import (AbelEquation, GroupCurve, GroupElement, compose, inverse,
                   pushforward)

__version__ = "0.1.0"
