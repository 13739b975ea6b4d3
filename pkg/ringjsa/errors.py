"""Exceptions raised by ringjsa

Every exception derives from :class:`RingJSAError`, itself a ``ValueError``.
Each class carries the exit code the command line interface uses when the
error reaches it; library code only raises.

=========  ==================================================
exit code  meaning
=========  ==================================================
2          input/output: unreadable or malformed input file
3          fitting window: missing or ambiguous resonance dip
4          configuration or physical parameter
5          instrument: scan range or Fabry-Pérot order overlap
6          data sufficiency
=========  ==================================================

"""

from typing import Optional


class RingJSAError(ValueError):
    """Base class, with the exit code used by the CLI"""

    exit_code: int = 4


class ParameterError(RingJSAError):
    """Invalid (non-finite, out of range) physical parameter"""


class ConfigError(ParameterError):
    """Invalid configuration, ``field`` is the dotted path of the culprit"""

    def __init__(self, field: str, msg: str):
        self.field = field
        super().__init__(f"{field}: {msg}" if field else msg)


class RegimeError(ParameterError):
    """Pump line too broad for the two-scale purity calculation"""


class CoverageError(RingJSAError):
    """Frequency grid does not cover the spectrum it samples"""


class ResolutionError(RingJSAError):
    """Spectral line not resolved by its frequency grid"""


class EmptySpectrumError(RingJSAError):
    """Filtering left no spectral content"""


class NumericError(RingJSAError):
    """Non-finite or degenerate numbers where a finite result is required"""


class DataError(RingJSAError):
    """Measured data violates a physical constraint (e.g. negative density)"""


class SpectrumParseError(RingJSAError):
    """Malformed spectrum or power series file"""

    exit_code = 2

    def __init__(self, msg: str, lineno: Optional[int] = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno else msg)


class FileFormatError(RingJSAError):
    """File type not supported for reading or writing"""

    exit_code = 2


class WindowError(RingJSAError):
    """Fit window with no dip, or more than one"""

    exit_code = 3


class EnvelopeError(RingJSAError):
    """Grating-coupler envelope fit failed"""

    exit_code = 3


class ScanRangeError(RingJSAError):
    """Seed or filter position outside the modelled spectral window"""

    exit_code = 5


class OrderOverlapError(RingJSAError):
    """Idler scan wider than a single Fabry-Pérot order"""

    exit_code = 5


class InsufficientDataError(RingJSAError):
    """Too few points to fit"""

    exit_code = 6
