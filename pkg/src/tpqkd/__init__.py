"""High-dimensional time-phase QKD simulator with decoy states and SDP phase-error bounds."""

__version__ = "0.1.0"
