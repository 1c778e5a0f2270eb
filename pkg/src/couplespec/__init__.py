"""Spectral numerics for Laplacians with a coupling condition across an
interface circle (cylinder family L) or segment (strip family M)."""

from __future__ import annotations

__version__ = "0.1.0"

from .model import (DomainError, Kind, ModelSpec, L, M, ac_multiplicity, characteristic_roots,
                    singular_points, sl_regularity)
from .recurrence import (ConvergenceError, RecurrenceParams, RecurrenceSolution, casoratian,
                         fit_asymptotics, minimal_solution, propagate)
from .tridiag import SymTridiagonal, count_above, count_below, eigenvalues_bisect
from .spectral_l import (BoundState, DeficiencyVerdict, InconclusiveError, deficiency_probe,
                         eigenfunction_eval, find_bound_states, negative_spectrum_sweep,
                         secular_value)
from .spectral_m import (JacobiM, SandwichReport, build_jacobi, counting_curve,
                         m_find_bound_states, m_secular_value, sandwich_check)
from .report import SpectralReport, golden_compare
