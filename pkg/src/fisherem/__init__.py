"""Model-based clustering in a discriminative latent subspace (Fisher-EM)."""

from .driver import FitConfig, FitResult, aitken_converged, best_of, clustering_accuracy, fit
from .errors import DegenerateGroupError, FisherEMError, FitError, SingularCovarianceError
from .estep import cost_gamma, log_likelihood, posteriors
from .fstep import fisher_axes, fisher_criterion, kernel_fisher_axes, soft_between_cov, total_cov
from .initialization import kmeans, pca_param_init, random_partition
from .model import (Dataset, DlmParameters, LatentVariance, ModelSpec, NoiseVariance, SoftPartition,
                    all_models, param_count, reconstruct_covariance, validate)
from .mstep import expected_complete_loglik, soft_moments, update_parameters
from .selection import aic, bic, grid_select, icl
from .simulate import SimSpec, preset, random_orthogonal, simulate_dlm

__version__ = "0.1.0"
