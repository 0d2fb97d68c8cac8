from asrshrink.trainer.config import TrainConfig  # noqa: F401
from asrshrink.trainer.loop import (  # noqa: F401
    DataValidationError, Example, Trainer, ValidationReport, finetune, finetune_two_step,
)
from asrshrink.trainer.optim import Adam  # noqa: F401
