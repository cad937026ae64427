"""Two-stage stochastic unit commitment with a UPFC under wind uncertainty."""

__version__ = "0.1.0"
