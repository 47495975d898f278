"""Singular-value-decomposed multicarrier Gaussian channel toolkit.

Submodules
----------
phase_space
    Phase-space samples, Gaussian modulation, unitary Fourier transforms.
channel
    Complex transmittance model, logical sub-channel selection, block law.
singular_layer
    Eigenchannel (SVD) layer, stream transmission, interference estimates.
allocation
    Modulation-variance allocation and capacity formulas.
partial_csi
    Statistics-only channel knowledge: averaged capacity and Jensen bounds.
precoding
    Interference projection and lattice (modulo) precoding.
decoding
    Per-stream MMSE estimation, sufficiency checks, successive decoding.
permutation_code
    Permutation-labeled constellations and error-probability bounds.
harness / cli
    JSON-configured scenario runner with CSV output.
"""

from . import (allocation, channel, decoding, harness, partial_csi,
               permutation_code, phase_space, precoding, singular_layer)
from .allocation import AllocationPlan, InfeasibleAllocationError, allocate
from .channel import ChannelModel, make_channel
from .decoding import build_decoder
from .phase_space import CvSample, CvVector, sample_gaussian_cv
from .precoding import RankDeficiencyError
from .singular_layer import SvdLayer, svd_of_channel

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "phase_space",
    "channel",
    "singular_layer",
    "allocation",
    "partial_csi",
    "precoding",
    "decoding",
    "permutation_code",
    "harness",
    "AllocationPlan",
    "InfeasibleAllocationError",
    "allocate",
    "ChannelModel",
    "make_channel",
    "build_decoder",
    "CvSample",
    "CvVector",
    "sample_gaussian_cv",
    "RankDeficiencyError",
    "SvdLayer",
    "svd_of_channel",
]
