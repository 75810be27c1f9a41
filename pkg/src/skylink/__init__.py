"""skylink: dual-band cellular network simulator for a UAV user, with
double-deep-Q-learning trajectory and band-switch agents."""

__version__ = "0.1.0"
