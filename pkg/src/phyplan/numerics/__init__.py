from phyplan.numerics.autodiff import NumericError, Var, gradient
from phyplan.numerics.lbfgs import LBFGSConfig, LBFGSResult, lbfgs_minimize, strong_wolfe
from phyplan.numerics.network import (
    DenseNetwork,
    GradientResult,
    ShapeError,
    forward,
    forward_tangent,
    forward_with_input_jacobian,
    table1_sizes,
    xavier_init,
)
from phyplan.numerics.serialize import FormatError, network_from_bytes, network_to_bytes

__all__ = [
    "DenseNetwork",
    "FormatError",
    "GradientResult",
    "LBFGSConfig",
    "LBFGSResult",
    "NumericError",
    "ShapeError",
    "Var",
    "forward",
    "forward_tangent",
    "forward_with_input_jacobian",
    "gradient",
    "lbfgs_minimize",
    "network_from_bytes",
    "network_to_bytes",
    "strong_wolfe",
    "table1_sizes",
    "xavier_init",
]
