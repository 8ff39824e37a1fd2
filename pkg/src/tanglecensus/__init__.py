"""Exact enumeration of colored prime alternating tangles.

Library surface: exact rings, truncated series, the diagram oracle, the
general-n and oriented (n = 2) census pipelines, critical constants, and
growth estimates.  See the CLI (``tanglecensus``) for the batch interface.
"""

from .rings import NPoly, Rational, ThetaElem, NotDivisible
from .series import (BiSeries, TruncSeries, OrderError, NonzeroConstantTerm,
                     NonUnitLeadingCoefficient, SingularLinearization,
                     series_geom, series_igeom, implicit_solve)

__version__ = "0.1.0"
