from asrshrink.ctc.decode import (  # noqa: F401
    BeamError, BeamParams, Hypothesis, beam_decode, beam_search, collapse, dump_nbest, fused_score, greedy_decode,
    greedy_path,
)
from asrshrink.ctc.loss import (  # noqa: F401
    BLANK, InfeasibleTargetError, ctc_loss, ctc_nll, is_feasible, min_frames, repeats,
)
