"""Extremal N-soliton solutions of focusing NLS, the Painleve-III and
Painleve-V model Riemann-Hilbert problems on the unit circle, and the
experiments that compare the two."""

from .errors import (DataIOError, GeometryError, NumericalError, RogueError, ResolutionError,
                     SingularPointError, StructureError, ValidationError)
from .spectral import (Distribution, RandomEnsembleConfig, SpectralData, darboux_from_norming,
                       evolve_spectral_data, norming_constants_from_darboux, sample_ensemble)
from .soliton import (PrecisionPolicy, WaveField, darboux_evaluate, evaluate_field, extremal_peak,
                      oracle_evaluate)
from .rhp import (JumpMatrix, LaurentSeries, RhpSolution, cauchy_project, evaluate_off_contour,
                  extract_potential, solve, solve_collocation, solve_neumann)
from .models import (ModelParams, ScalingMap, blaschke, nsoliton_jump, piii_jump, pv_jump,
                     scaling_map, solve_model)
from .painleve import (PainleveParams, SampledFunction, extract_u_piii, extract_u_pv,
                       lax_residual_pv, nls_residual, piii_residual, pv_residual)
from .experiments import (ExperimentReport, GoodSetStats, convergence_table, good_set_probe,
                          l2_error, run_universality)

__version__ = "0.1.0"
