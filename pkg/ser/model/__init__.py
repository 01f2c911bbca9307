from .config import ModelConfig
from .dataobj import ForwardBundle
from .encoders import encode_speech, encode_text
from .fusion import HmaOutput, MirOutput, classify, classify_pooled, cme_block, fuse, hma, mir
from .heads import aec_decode_teacher_forced, aed_head, decoder_io
from .layers import Runtime
from .losses import Losses, compute_losses, joint_objective
from .modes import MODES, Mode, get_mode, mode_names
from .network import Supervision, forward_infer, forward_train, supervision
from .params import (AUX_PREFIXES, ModelParams, init_params, is_aux, missing_for_mode,
                     param_shapes, strip_aux)

"""
`model` is the multimodal emotion network: speech and text encoders,
error detection and correction heads, cross-modal fusion and the classifier.
"""
