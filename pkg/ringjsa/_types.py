from pathlib import Path
from typing import Tuple, Union

_path_t = Union[str, Path]  # file path type
_band_t = Tuple[float, float]  # wavelength interval (nm)
