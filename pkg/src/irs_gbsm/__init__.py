"""Non-stationary twin-cluster channel simulator for IRS-assisted MIMO links."""

__version__ = "0.1.0"
