from .attitude import AttitudeEstimate, AttitudeFilter
from .fieldmap import LandmarkMap
from .mcl import (MCLConfig, MonteCarloLocalizer, PoseBelief, mcl_correct,
                  mcl_predict, mcl_resample_estimate)

__all__ = [
    "AttitudeEstimate", "AttitudeFilter",
    "LandmarkMap",
    "MCLConfig", "MonteCarloLocalizer", "PoseBelief",
    "mcl_correct", "mcl_predict", "mcl_resample_estimate",
]
