"""Two-dimensional large solutions and the boundary diagnostics computed from them."""

from .domain import Annulus, Disk, Domain2D, HalfStrip, LateralBC, SourceSpec, parse_domain, parse_source
from .solver import (Equation, Field2D, GridConfig, Nodes, build_nodes, large_solution_limit, probe_values,
                     solve_truncated)
