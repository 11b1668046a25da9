"""Simulator for mediated multiparty semi-quantum secret sharing with single qubits."""

from .protocol import run_protocol, run_until_key
from .records import CheckConfig, ConfigurationError, ProtocolConfig, Transcript

__all__ = ["CheckConfig", "ConfigurationError", "ProtocolConfig", "Transcript", "run_protocol", "run_until_key"]
