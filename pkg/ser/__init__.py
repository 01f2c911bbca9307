from .coordinators import run_ablate, run_align, run_eval, run_gen_data, run_strip, run_train
from .util import TrainConfig, parse_list, setup_logging

"""
`ser` is a Python module for multimodal speech emotion recognition
with ASR error detection and correction as auxiliary tasks.
"""
