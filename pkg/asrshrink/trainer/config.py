from asrshrink.util.config import Config


class TrainConfig(Config):
    """
    Attributes
    ----------
    epochs : int
        Maximum number of epochs (per phase for two-step training).
    batch_size : int
        Utterances per parameter update.
    lr : float
        Adam learning rate.
    betas : list[float]
        Adam moment decay rates.
    eps : float
        Adam denominator offset.
    seed : int
        Seed of batch order and training-time layerdrop.
    layerdrop : float
        Probability q of skipping each transformer layer during training.
    multi_exit : bool
        Sum the CTC losses of every decoder (exit decoders and the final one).
    two_step : bool
        Train encoder and final decoder first, then the exit decoders on the
        frozen encoder.
    patience : int
        Epochs without dev WER improvement before stopping; 0 disables.
    prefetch : int
        Prepared utterances buffered ahead of the update loop.
    log_path : Optional[str]
        Line-delimited JSON epoch log.
    checkpoint_path : Optional[str]
        Checkpoint written when training ends.
    strategy : Optional[dict]
        Description of the shrinking strategy, stored with the checkpoint.
    """
    epochs = 20
    batch_size = 8
    lr = 1e-3
    betas = [0.9, 0.999]
    eps = 1e-8
    seed = 0
    layerdrop = 0.0
    multi_exit = False
    two_step = False
    patience = 5
    prefetch = 16
    log_path = None
    checkpoint_path = None
    strategy = None

    def validate(self):
        self.require('epochs', lambda v: int(v) >= 0, 'must be non-negative')
        self.require('batch_size', lambda v: int(v) >= 1, 'must be positive')
        self.require('lr', lambda v: v > 0, 'must be positive')
        self.require('layerdrop', lambda v: 0.0 <= v < 1.0, 'must lie in [0, 1)')
        self.require('patience', lambda v: int(v) >= 0, 'must be non-negative')
        self.require('prefetch', lambda v: int(v) >= 1, 'must be positive')
        return self
