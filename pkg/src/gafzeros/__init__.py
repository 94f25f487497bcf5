"""Zero processes of Gaussian analytic functions and the Ginibre ensemble.

Simulation of the planar and hyperbolic families, certified zero counting,
exact overcrowding tails where the radial law is a product of independent
draws, closed-form deviation exponents, and the constructive coefficient
events that realize the lower bounds.
"""

from .models import (CoefficientDraw, GafModel, Kind, TruncatedGaf,
                     choose_truncation, covariance, expected_count, log_sigma,
                     make_truncated, sample_coefficients, sample_truncated,
                     sigma, split_streams, stream, tail_sd)
from .zeros import (CountResult, InconclusiveCount, JensenCheck,
                    RootsDidNotConverge, circle_mean_log_abs, count_in_disk,
                    count_with_retry, count_zeros_winding, find_roots,
                    jensen_residual, max_modulus, rouche_certify)
from .radial import (BernoulliProfile, RadialEnsemble, TailBracket,
                     bernoulli_probs, poisson_binomial_tail_log, sample_radii,
                     tail_log_bracket)
from .bounds import (ExponentRegime, SumNLogN, ginibre_tail_brackets, kappa,
                     kappa_argmax, poisson_kernel_bounds,
                     poisson_tail_log_upper, predicted_exponent, sum_n_log_n,
                     sum_n_log_n_closed_form)
from .events import (AggregateBlock, EventConstructionError, EventKind,
                     EventLogProb, EventSpec, FitResult, IndexBlock, Method,
                     TailEstimate, build_event, certified_event_count,
                     conditioned_sample, direct_mc_tail, domination_constant,
                     event_log_prob, event_log_prob_detail,
                     event_tail_estimate, event_tail_sup_bound, exponent_fit,
                     sample_satisfies, verify_domination)

__version__ = "0.1.0"
