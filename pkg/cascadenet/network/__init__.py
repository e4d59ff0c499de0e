from cascadenet.network.base import (
    IDENTITY,
    RELU,
    Layer,
    ReluNet,
    SizeReport,
    forward,
    size_report,
)
from cascadenet.network.combinators import (
    compose,
    pad,
    scale_input,
    scale_output,
    shift_input,
    split,
    stack,
    stack_all,
    sum_nets,
)
from cascadenet.network.lowering import is_lowered, lower, propagate_bounds

__all__ = [
    'IDENTITY',
    'RELU',
    'Layer',
    'ReluNet',
    'SizeReport',
    'compose',
    'forward',
    'is_lowered',
    'lower',
    'pad',
    'propagate_bounds',
    'scale_input',
    'scale_output',
    'shift_input',
    'size_report',
    'split',
    'stack',
    'stack_all',
    'sum_nets',
]
