"""Quantified reproducibility assessment of comparable evaluation experiments."""

__version__ = "0.1.0"

from .agreement import LabelGrid, aggregate_type3, cohen_kappa, fleiss_kappa, kripp_alpha
from .assessment import (AssessmentOptions, LevelledAssessment, SimilarityProfile, assess_study,
                         assess_type1, assess_type2, assess_type3, assess_type4, gate, partition,
                         similarity_profile)
from .bundle import dump_bundle, load_bundle, parse_bundle, shift_to_zero
from .correlation import (AlignedScoreMatrix, kendall_tau_b, kendall_w, pairwise_mean, pearson_r,
                          spearman_rho)
from .errors import (BundleSyntaxError, DomainError, GateRefusal, QRAError, SchemaError,
                     ValidationFailed)
from .findings import PairwiseSignTable, p_measure, pooled_p, sign_table
from .model import MeasureResult, PrecisionStats, StudyBundle, validate_bundle
from .precision import CvOptions, c4, ci_for_s_star, cv_star, unbiased_std
from .report import emit_report, read_report
