"""Privacy auditing framed as bit transmission through an f-DP channel."""

from fdpaudit.bounds import (
    AuditResult,
    fdp_to_eps,
    floor_to_param,
    multirun_baseline,
    privacy_lower_bound,
)
from fdpaudit.channel import (
    Arrangement,
    AuditTranscript,
    MechanismKind,
    MechanismSpec,
    simulate,
)
from fdpaudit.estimate import CIMethod, advanced_ci, hoeffding_ci
from fdpaudit.limits import (
    LimitProfile,
    bit_error_floor,
    capacity,
    limit_profile,
    mi_upper_bound,
)
from fdpaudit.tradeoff import Family, TradeoffCurve, np_curve

__version__ = '0.1.0'
