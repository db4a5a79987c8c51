"""Computable geometry of Lipschitz-free spaces over finite pointed metric
spaces: free-space norms with dual certificates via a self-contained LP
solver, Lipschitz function machinery, Gromov-product pair classification,
and certified perturbation pipelines for strong subdifferentiability.
"""

__version__ = "0.1.0"

from .free_space import (FreeElement, FreeSpaceError, MoleculeCombination,
                         delta, dual_face, element_from_json,
                         face_coordinate_ranges, free_norm, is_gateaux,
                         molecule, norming_functional, optimal_representation,
                         pairing)
from .gromov import (PairError, PairGeometryReport, analyze_pair,
                     classify_space, family_trend, gromov_product)
from .lipschitz import (LipFunction, LipschitzError, aux_f_xy, cutoff_xi,
                        f_gamma_construct, from_values, g_gamma_construct,
                        lip_norm, mcshane_extend, pair_slope, peaking_check,
                        slope_matrix)
from .metric import (MetricError, MetricFamily, PointedMetricSpace, gallery,
                     gamma_fatten, gamma_thin, line_space, metric_segment,
                     radius_beta, subspace, uniform_discreteness_constant,
                     validate)
from .ssd import (AlignmentCertificate, ModulusCurve, PerturbationResult,
                  SsdError, almost_aligned_certificate,
                  bilipschitz_distortion, common_norming_witness,
                  exposedness_probe, face_distance, find_common_norming,
                  perturbation_pipeline, single_molecule_perturb)

__all__ = [name for name in dir() if not name.startswith("_")]
