import contextlib
from importlib.metadata import PackageNotFoundError, version

from . import (
    analysis,  # noqa F401
    dynamics,  # noqa F401
    model,  # noqa F401
    perturbation,  # noqa F401
    spectral,  # noqa F401
    utils,  # noqa F401
)

__version__ = "0+unknown"
with contextlib.suppress(PackageNotFoundError):
    __version__ = version("lrtrap")
