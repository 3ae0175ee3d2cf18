"""Online vector balancing: keep every signed prefix sum small.

Vectors with entries in [-1, 1] arrive one at a time; each must get a
+-1 sign immediately.  The cosh-potential signer keeps the prefix sums
polylogarithmic for uncorrelated streams, an eigenbasis whitening step
extends that to arbitrary covariance, and Haar reductions carry the
guarantee to interval/box discrepancy and online fair division.  The
adversary and anticoncentration modules supply the matching lower
bounds and the certificates the upper bounds rely on.
"""

from .core import (CONFIG_FORMAT_VERSION, DiscrepancyState, DistributionSpec,
                   RunResult, SparseUpdate, hadamard_entry, hadamard_row,
                   load_spec_config, rademacher_symmetrize, sample,
                   spec_from_config, spec_to_config, stream_updates)
from .errors import (BalancerError, ConvergenceError, InvalidInstanceError,
                     InvariantViolationError, MemoryGuardError, PairingError,
                     PotentialOverflowError, StreamFormatError,
                     UnsupportedModeError)
from .rng import SeededRng
from .signer import CoshSigner, SignerConfig, run_stream
from .spectral import (CovarianceEstimate, EigenBasis, balance_general,
                       eigendecompose, estimate_covariance)
from .haar import (DyadicBox, DyadicInterval, HaarIndex, TensorHaarIndex,
                   box_coefficients, cell_index, evaluate, evaluate_tensor,
                   inner_product, interval_coefficients, reconstruct_box,
                   reconstruct_interval, scale_decomposition, second_moment,
                   tensor_inner_product, wavelets_up_to)
from .problems import (Allocation, CardinalEnvyResult, GeometricRun,
                       IntervalQuery, OrdinalEnvyResult, PointStream,
                       allocate_cardinal, allocate_ordinal, cardinal_envy,
                       count_interval, dyadic_box_discrepancy,
                       dyadic_interval_discrepancy, interval_signer,
                       max_dyadic_discrepancy, max_interval_discrepancy,
                       measure_ordinal_envy, tree_depth, tusnady_signer)
from .adversary import (AdversaryState, FractalInstance, FractalReport,
                        LowerBoundReport, adversary_run, certify_uncorrelated,
                        fractal_ratio, lower_bound_experiment,
                        orthogonal_adversary_next, sphere_growth,
                        sphere_stress)
from .anticonc import (AnticoncInstance, CertificationReport,
                       CounterexampleReport, VerificationResult,
                       aggregate_per_k, certify, hadamard_instance,
                       pairwise_counterexample, random_pairwise_instance,
                       random_uncorrelated_instance, verify_pairwise,
                       verify_uncorrelated)
from .harness import (ComparisonTable, ExperimentConfig, ExperimentOutcome,
                      GrowthFit, REGRESSION_SLACK, check_regression, compare,
                      compute_regression_metrics, correlated_spec,
                      fit_growth, load_regression_table, run_experiment)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
