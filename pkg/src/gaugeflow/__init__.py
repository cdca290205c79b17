"""Consistent L²-gradient flows of surface energies with tangential
director fields: gauges of surface independence, observer-invariant time
derivatives, and a periodic film solver for the flat Frank–Oseen model."""

from .errors import (DegenerateMetric, GaugeflowError, ImmersionLost,
                     RankMismatch, SchemaMismatch, SolverFailure,
                     UnknownQuantity, UnsupportedConvention, ValidationError)
from .grid import ParameterGrid
from .surfaces import (AmbientField, SurfacePatch, film_chart, flat_chart,
                       fourier_ambient, fourier_proxies, fourier_scalar,
                       graph_chart, sin_cos_height, sphere_band)
from .geometry import (GeometryCache, TangentField, build_geometry, l2_inner,
                       l2_norm, normal_part, pointwise_inner, project_tangent,
                       scalar_field, to_ambient, with_variance)
from .operators import (bochner_laplacian, covariant_derivative, curl,
                        divergence)
from .deformation import (DeformationParts, GaugeSpec, TimeDerivSpec,
                          adjoint_divergence, decompose_deformation,
                          gauge_stress, geometric_deformation,
                          phi_minus_psi, tensor_deformation,
                          vector_deformation)
from .frankoseen import (EnergyBreakdown, FOParams, ShapeForce, StressRecord,
                         energy, molecular_field, shape_force, stresses)
from .verification import (OracleReport, SELECTORS, area_functional,
                           check_geometric_deformation,
                           check_geometry_basics, check_gradient_identities,
                           check_proxy_equivalence, check_shape_force_split,
                           check_tensor_gauge_matrix, check_vector_gauge_matrix,
                           fd_total_variation, frank_oseen_functional,
                           run_suite, standard_fields, standard_patch)
from .flatflow import (EnergyRow, FlowConfig, FlowState, InitialCondition,
                       Snapshot, Trajectory, VECTOR_GAUGES, dissipation_check,
                       energy_of, explicit_step, gauge_gradient_norms,
                       gradient_norm, init_state, run, step)

__version__ = "0.1.0"
