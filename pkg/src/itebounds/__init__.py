"""Worst-case prediction sets and sharp bounds for individual treatment effects.

Only the two arm-wise outcome distributions of a randomized trial are
identified; the joint law of (Y1, Y0) is not. Everything here quantifies over
all joints compatible with those margins.
"""

from .binary import (BinaryMarginals, BinarySet, TypeDistribution, binary_cdf_bounds,
                     binary_pmf_bounds, classify_best, feasible_t_range,
                     necessary_condition_valid_best, shortest_sets, type_distribution,
                     valid_sets, worst_case_coverage)
from .core import (BoundPair, Coupling, DeltaEvent, DiscretePMF, InfeasibleError, InputError,
                   StepCDF, StructureError, get_tolerance, read_pmf, verify_coupling)
from .estimators import (BinaryITEPredictor, DiscreteITEInterval, ITEPmfBounds,
                         MakarovCdfBounds)
from .frechet import frechet_cell_bounds, ite_pmf_bounds
from .intervals import (RealInterval, conservative_interval, minimal_valid_interval,
                        must_include_points, ordinal_trivial_check, ordinal_zero_pmf_check)
from .makarov import (cdf_bound_curve, cdf_to_pmf_bounds, makarov_lower, makarov_upper,
                      zero_exclusion)
from .oracle import TransportInstance, extremize_mass, worst_case_event_probability
from .regionmap import RegionMap, region_map, render_svg
from .trial import (TypeScenario, ate_ite_report, ate_wald_ci, estimate_marginals,
                    simulate_trial, stratified_report, total_probability_check)

__version__ = "0.1.0"
