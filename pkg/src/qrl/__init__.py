"""Single-pulse readout simulator for a flux-biased phase qubit."""

__version__ = "0.1.0"
