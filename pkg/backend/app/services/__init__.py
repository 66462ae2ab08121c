"""
Services module for the service-time lab.
Contains channel models, analytic calculators, combining math, the
simulator, MCS optimization, studies, manifests and report writers.
"""

from . import (
    analytic,
    channel,
    combining,
    manifest,
    optimizer,
    reports,
    simulator,
    studies,
)

__all__ = [
    "analytic",
    "channel",
    "combining",
    "manifest",
    "optimizer",
    "reports",
    "simulator",
    "studies",
]
