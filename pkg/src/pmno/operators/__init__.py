from .boundary import HardDirichlet, fourier_feature_jet, fourier_features, hard_bc_wrap
from .deeponet import DeepOnet, deeponet_combine, deeponet_forward
from .fno import Fno, coordinate_channels, fno_forward
from .layers import DenseStack

__all__ = [
    "DeepOnet",
    "DenseStack",
    "Fno",
    "HardDirichlet",
    "coordinate_channels",
    "deeponet_combine",
    "deeponet_forward",
    "fno_forward",
    "fourier_feature_jet",
    "fourier_features",
    "hard_bc_wrap",
]
