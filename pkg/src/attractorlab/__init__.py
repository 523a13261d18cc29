"""Numerical laboratory for attractors of planar polycycles and their products."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .numbers import LogValue, TowerValue, LogTime, tower_difference  # noqa: E402
from .maps import (  # noqa: E402
    SaddleParams,
    SaddleNodeParams,
    Loop,
    Biangle,
    ModifiedBowen,
    derived_constants,
    saddle_local,
    saddle_node_local,
    poincare_step,
    loop_zeta_step,
    mbe_tau_step,
    saddle_oracle,
)
from .timelines import (  # noqa: E402
    EventTimeline,
    LogLambda,
    LnLn,
    Zeta,
    generate_timeline,
    rescale,
    recurrence_residuals,
    geometric_ratios,
    loop_divergence,
    simultaneous_fraction,
)
from .intervals import ColorIntervalSet, color_intervals, overlap_report  # noqa: E402
from .certificates import SeparationCertificate, Refusal, separation_analysis  # noqa: E402
