"""Gibbs-sampler detection for integer least squares over {-1, +1}^n and
exact tools for studying how fast the sampler mixes."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    InvalidArgumentError,
    LatmixError,
    NumericalDegeneracyError,
    PreconditionError,
    ResourceLimitError,
)
from .model import (  # noqa: E402
    ProblemInstance,
    SpinState,
    gen_adversarial_instance,
    gen_gaussian_instance,
    gen_orthogonal_instance,
    gen_unit_sphere_instance,
    load_custom_instance,
    objective,
)

__all__ = [
    "InvalidArgumentError",
    "LatmixError",
    "NumericalDegeneracyError",
    "PreconditionError",
    "ProblemInstance",
    "ResourceLimitError",
    "SpinState",
    "gen_adversarial_instance",
    "gen_gaussian_instance",
    "gen_orthogonal_instance",
    "gen_unit_sphere_instance",
    "load_custom_instance",
    "objective",
]
