from asrshrink.numkit.tensor import (  # noqa: F401
    NumericError, ShapeError, Tensor, as_tensor, backward, get_dtype, precision, precision_name, set_precision,
)
from asrshrink.numkit.macs import MacCounter  # noqa: F401
from asrshrink.numkit.ops import (  # noqa: F401
    add, add_all, cosine_sim, exp, gelu, layer_norm, linear, log, log_softmax, matmul, mul, reshape, softmax, sub,
    sum_all, transpose, unfold,
)
from asrshrink.numkit.check import gradcheck  # noqa: F401
from asrshrink.numkit.module import Module, init_normal, parameter, stage  # noqa: F401
