from .ablation import AblationRun, AblationTable, ablate
from .checkpoint import Checkpoint, CheckpointFormatError, load_checkpoint, save_checkpoint
from .evaluator import (Evaluator, MetricsReport, ModeMismatchError, confusion_matrix, evaluate,
                        metrics_row, recalls, uar, write_metrics_csv)
from .trainer import NonFiniteLossError, Trainer, model_config, train

"""
`harness` trains, evaluates and compares models, and stores them in checkpoints.
"""
