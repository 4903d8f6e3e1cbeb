"""Discrete-event Monte-Carlo simulation and analysis of heralded single-photon
synchronization through a decaying quantum memory with realistic trigger
electronics, cross-validated against closed-form rate and noise models."""

__version__ = "0.1.0"

from .params import (ConfigError, DecayModel, DetectorParams, ElectronicsParams,
                     MemoryParams, RatesReport, SimParams, SourceParams, SystemConfig)

__all__ = [
    "ConfigError", "DecayModel", "DetectorParams", "ElectronicsParams",
    "MemoryParams", "RatesReport", "SimParams", "SourceParams", "SystemConfig",
    "__version__",
]
