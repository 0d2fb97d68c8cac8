from asrshrink.encoder.checkpoint import CheckpointError, load_checkpoint, save_checkpoint  # noqa: F401
from asrshrink.encoder.config import EncoderConfig, ForwardMode, ModeError  # noqa: F401
from asrshrink.encoder.layers import ExitDecoder, Linear, LayerNorm, TransformerLayer, positional_encoding  # noqa: F401
from asrshrink.encoder.model import (  # noqa: F401
    ForwardResult, SpeechEncoder, decode_head, layerdrop_schedule, remove_layers,
)
