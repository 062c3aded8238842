"""Gumbel-max text watermarking with robust truncated goodness-of-fit detection.

The package covers the full pipeline on synthetic token sources: keyed
pseudorandom generation, watermark embedding with repeated-context masking,
human-edit simulation, detection through truncated goodness-of-fit / Higher Criticism /
sum-rule statistics, Monte Carlo calibration, and the phase-transition and
efficiency experiment harness.
"""

__version__ = "0.1.0"

from .prf import Key, prf_uniform, prf_vector
from .tokensource import (
    ToySource,
    delta_of,
    entropy_of,
    least_favorable,
    make_m1,
    make_m2,
    toy_next_dist,
)
from .pivotal import PivotSeries, alt_cdf, alt_pdf, alt_sample, pivot_series
from .watermark import GenConfig, TokenSeq, generate, generate_null, gumbel_decode
from .detectors import (
    ARS,
    LOG,
    HigherCriticism,
    ScoreKind,
    SumScore,
    TrGoF,
    detector_from_config,
    hc_plus,
    ind,
    k_s,
    k_s_plus,
    null_moments,
    opt,
    phi_s,
    reject_rule,
    score,
    sum_test,
    trgof_stat,
)
from .calibrate import (
    CalibrationResult,
    clt_critical,
    mc_critical,
    norm_quantile,
    tradeoff_curve,
)
from .edits import (
    EditPlan,
    EditSpec,
    ToleranceResult,
    apply_adversarial_edit,
    apply_random_edit,
    tolerance_limit,
)
from .experiments import (
    BoundarySpec,
    ExperimentGrid,
    MixtureConfig,
    boundary_grid,
    entropy_gap_check,
    histogram_study,
    sample_mixture,
)
from .efficiency import EfficiencyQuery, optimal_rate, rate_curve

__all__ = [name for name in dir() if not name.startswith("_")]
