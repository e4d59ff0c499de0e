"""cascadenet - explicit ReLU networks for cascade iterates of refinable functions.

"""

__version__ = "0.1.0"

from .cpwl import CPwL, hat, special_hat
from .masks import Mask, transfer_matrices
from .cascade import apply_V, apply_Vn, cascade_Gn
from .network import ReluNet
from .compiler import CompileArtifact, Report, compile_Vng, verify

__all__ = [
    'CPwL',
    'hat',
    'special_hat',
    'Mask',
    'transfer_matrices',
    'apply_V',
    'apply_Vn',
    'cascade_Gn',
    'ReluNet',
    'CompileArtifact',
    'Report',
    'compile_Vng',
    'verify',
]
