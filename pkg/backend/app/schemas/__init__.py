from .channel import BlerPoint, BlerTable, McsEntry, SnrDomain, SnrValue
from .analytic import NcCode, ServiceTimeEstimate, TimingParams
from .combining import SignalMoments
from .simulation import Release, Scheme, ServiceRecord, SimConfig, SimResult, SummaryStats
from .optimizer import AnalyticScheme, McsChoice, Policy, PolicyCurve
from .manifest import ReportFormat, RunManifest

__all__ = [
    "BlerPoint",
    "BlerTable",
    "McsEntry",
    "SnrDomain",
    "SnrValue",
    "NcCode",
    "ServiceTimeEstimate",
    "TimingParams",
    "SignalMoments",
    "Release",
    "Scheme",
    "ServiceRecord",
    "SimConfig",
    "SimResult",
    "SummaryStats",
    "AnalyticScheme",
    "McsChoice",
    "Policy",
    "PolicyCurve",
    "ReportFormat",
    "RunManifest",
]
