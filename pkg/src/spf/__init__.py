"""Feature front end for speech disentanglement: pitch flattening, VTLP, cepstral envelopes,
random resampling and one-hot pitch, plus a corpus pipeline around them."""
from .errors import (AlignmentError, ConfigError, InsufficientData, InvalidInput, SpfError,
                     StatsNotFound)

__version__ = "0.1.0"

__all__ = ["AlignmentError", "ConfigError", "InsufficientData", "InvalidInput", "SpfError",
           "StatsNotFound", "__version__"]
