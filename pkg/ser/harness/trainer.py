import logging
from time import perf_counter
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..autodiff import AdamState, Tape, adam_step, gradient_map, zero_grad
from ..autodiff.ops import scale
from ..model import ModelConfig, forward_train, get_mode, init_params
from ..synthdata import Corpus, UtteranceExample
from ..util import TrainConfig
from .checkpoint import Checkpoint
from .evaluator import Evaluator, MetricsReport

# Seed-sequence stream tags
_STREAM_SHUFFLE = 0
_STREAM_DROPOUT = 1


class NonFiniteLossError(FloatingPointError):
    def __init__(self, batch_id: str, losses: Sequence[float]) -> None:
        super().__init__(f"non-finite loss in {batch_id}: {list(losses)}")
        self.batch_id = batch_id


def model_config(cfg: TrainConfig, corpus: Corpus) -> ModelConfig:
    """Architecture of a training run; the data-dependent extents come from the corpus."""
    config = ModelConfig(
        vocab_size=corpus.vocab_size,
        n_emotions=corpus.n_emotions,
        frame_dim=corpus.frame_dim,
        d=cfg.d,
        heads=cfg.heads,
        enc_layers_speech=cfg.enc_layers_speech,
        enc_layers_text=cfg.enc_layers_text,
        downsample=cfg.downsample,
        d_max=cfg.d_max,
        dropout=cfg.dropout,
        max_len=cfg.max_len,
        max_frames=cfg.max_frames,
        ffn_dim=cfg.ffn_dim,
    )
    config.validate()
    return config


class Trainer:
    """
    Mini-batch training of one (config, mode) pair with Adam.

    Every example is run on its own tape; its share of the mean batch loss is
    back-propagated into the parameters' accumulated gradients, and one Adam step
    follows each batch.
    """

    def __init__(self, cfg: TrainConfig, corpus: Corpus,
                 eval_examples: Optional[Sequence[UtteranceExample]] = None) -> None:
        cfg.validate()
        self.logger = logging.getLogger("MfAec.Trainer")
        self.cfg = cfg
        self.corpus = corpus
        self.eval_examples = eval_examples if eval_examples is not None else corpus.examples

        self.mode = get_mode(cfg.mode)
        self.config = model_config(cfg, corpus)
        self.params = init_params(self.config, self.mode, cfg.seed)
        self.adam = AdamState(lr=cfg.lr)
        self.dropout_rng = np.random.default_rng([cfg.seed, _STREAM_DROPOUT])

    def checkpoint(self) -> Checkpoint:
        return Checkpoint.from_params(
            self.params, self.config, self.mode.name, self.adam.t,
            {"seed": self.cfg.seed, "dropout": self.dropout_rng.bit_generator.state},
        )

    def batches(self, epoch: int) -> List[List[UtteranceExample]]:
        order = np.random.default_rng([self.cfg.seed, _STREAM_SHUFFLE, epoch]) \
            .permutation(len(self.corpus))
        size = self.cfg.batch_size
        return [[self.corpus.examples[i] for i in order[start:start + size]]
                for start in range(0, len(order), size)]

    def train_batch(self, batch: Sequence[UtteranceExample], batch_id: str) -> np.ndarray:
        """One optimization step. Returns the summed (emo, d, e, total) losses of the batch."""
        rng = self.dropout_rng if self.config.dropout > 0 else None
        zero_grad(self.params.values())
        sums = np.zeros(4)

        for example in batch:
            with Tape() as tape:
                _, losses = forward_train(example, self.params, self.config, self.mode,
                                          self.cfg.beta, self.cfg.gamma, self.cfg.text_source,
                                          rng)
                objective = scale(losses.total, 1.0 / len(batch))
            sums += losses.as_floats()

            if not np.all(np.isfinite(sums)):
                raise NonFiniteLossError(f"{batch_id} ({example.id})", sums)

            tape.backward(objective)

        adam_step(self.params, gradient_map(self.params), self.adam)
        self.logger.debug(f"{batch_id}: mean total loss {sums[3] / len(batch):.5f}")
        return sums

    def train_epoch(self, epoch: int) -> np.ndarray:
        """Returns the mean (emo, d, e, total) losses over the epoch."""
        sums = np.zeros(4)
        for batch_no, batch in enumerate(self.batches(epoch)):
            sums += self.train_batch(batch, f"epoch {epoch} batch {batch_no}")
        return sums / len(self.corpus)

    def evaluate(self, epoch: int) -> MetricsReport:
        evaluator = Evaluator(self.params, self.config, self.mode, self.cfg.text_source)
        return evaluator.evaluate(self.eval_examples, epoch)

    def run(self) -> Tuple[Checkpoint, List[MetricsReport]]:
        if not self.corpus.examples:
            raise ValueError("can't train on an empty corpus")

        reports: List[MetricsReport] = []
        for epoch in range(self.cfg.epochs):
            start = perf_counter()
            mean_emo, mean_d, mean_e, mean_total = self.train_epoch(epoch)

            last = epoch == self.cfg.epochs - 1
            if (epoch + 1) % self.cfg.eval_interval and not last:
                self.logger.info(f"Epoch {epoch}: loss {mean_total:.5f}")
                continue

            report = self.evaluate(epoch)
            report.loss_emo = float(mean_emo)
            report.loss_d = float(mean_d)
            report.loss_e = float(mean_e)
            report.wall_s = perf_counter() - start
            reports.append(report)

            self.logger.info(f"Epoch {epoch}: loss {mean_total:.5f} "
                             f"(emo {mean_emo:.5f}, aed {mean_d:.5f}, aec {mean_e:.5f}), "
                             f"UAR {report.uar:.4f}")

        return self.checkpoint(), reports


def train(cfg: TrainConfig, corpus: Corpus,
          eval_examples: Optional[Sequence[UtteranceExample]] = None) \
        -> Tuple[Checkpoint, List[MetricsReport]]:
    """Trains a model; with epochs=0 returns the initialization and no metrics."""
    return Trainer(cfg, corpus, eval_examples).run()
