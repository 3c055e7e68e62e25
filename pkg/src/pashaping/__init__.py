"""Probabilistic amplitude shaping with enumerative sphere shaping and CCDM.

Shapers map uniform bits to amplitude sequences and back exactly; the PAS
layer builds coded PAM frames around them; the channel and metrics modules
measure what they buy on AWGN and on a simulated fiber link.
"""

from ._backend import backend_name
from .ccdm import CcdmCode, CompositionMismatch, ccdm_code_for_rate, ccdm_composition_for_rate
from .core import (
    AmplitudeAlphabet,
    AmplitudeDistribution,
    Composition,
    DecodeFailure,
    RateLossReport,
    ShapingError,
    composition_from_distribution,
    entropy,
    fit_mb_for_entropy,
    mb_distribution,
    rate_loss,
)
from .ess import EnergyViolation, EnumerativeTrellis, EssCode, build_trellis, choose_emax_for_rate, ess_rate_loss
from .pas import PamConstellation, PasConfig, PasFrame, RandomParityFec, brgc_labels, pas_assemble, pas_disassemble

__all__ = [
    "AmplitudeAlphabet",
    "AmplitudeDistribution",
    "CcdmCode",
    "Composition",
    "CompositionMismatch",
    "DecodeFailure",
    "EnergyViolation",
    "EnumerativeTrellis",
    "EssCode",
    "PamConstellation",
    "PasConfig",
    "PasFrame",
    "RandomParityFec",
    "RateLossReport",
    "ShapingError",
    "backend_name",
    "brgc_labels",
    "build_trellis",
    "ccdm_code_for_rate",
    "ccdm_composition_for_rate",
    "choose_emax_for_rate",
    "composition_from_distribution",
    "entropy",
    "ess_rate_loss",
    "fit_mb_for_entropy",
    "mb_distribution",
    "pas_assemble",
    "pas_disassemble",
    "rate_loss",
]
