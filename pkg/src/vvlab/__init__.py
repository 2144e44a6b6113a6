"""Vanishing-viscosity laboratory for strictly hyperbolic systems with commuting viscosity."""

__version__ = "0.1.0"

from .errors import VVLabError  # noqa: E402
from .kernels import BACKEND  # noqa: E402
from .systems import BUILTIN_NAMES, SystemModel, builtin_system, check_hypotheses  # noqa: E402

__all__ = ["BACKEND", "BUILTIN_NAMES", "SystemModel", "VVLabError", "__version__", "builtin_system",
           "check_hypotheses"]
