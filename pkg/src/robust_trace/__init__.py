"""Robust low-rank trace regression by data shrinkage.

Heavy-tailed responses (and, if needed, designs) are truncated or shrunk
before the usual nuclear-norm penalized least squares is fit. The package
covers the linear model, compressed sensing, matrix completion and
multi-task regression, plus the l4-shrinkage covariance estimator and a
Monte Carlo harness comparing robust and standard fits.
"""

__version__ = "0.1.0"

from .datasets import (DenseDesign, DiagonalDesign, MultiResponse, SingletonDesign,
                       TraceDataset, mat, vec)
from .estimators import (LambdaRule, ProblemKind, ProblemSpec, ShrinkagePlan,
                         default_shrinkage, estimate, lambda_for, penalized_objective)
from .moments import (Regime, RobustMoments, SingletonScaling, moments_cs, moments_linear,
                      moments_mc, moments_multitask, sample_second_moment,
                      shrinkage_covariance, truncated_covariance_elementwise)
from .shrinkage import (RateFormula, ShrinkageKind, ShrinkageRule, shrink_norm,
                        threshold_from_rule, truncate_elementwise, truncate_scalar)
from .simulation import (ErrorTable, ExperimentSpec, MethodSpec, NoiseModel, SampleLaw,
                         TargetNormalization, covariance_benchmark, draw_covariance_samples,
                         generate_dataset,
                         make_low_rank_target, run_monte_carlo, sample_noise)
from .solvers import (AdmmConfig, CdConfig, FitResult, PrsmConfig, admm_matrix_completion,
                      cd_lasso, nuclear_norm, project_box, project_psd,
                      prsm_compressed_sensing, prsm_multitask, svd_soft_threshold)
