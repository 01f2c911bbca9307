from typing import Callable, List, Optional

import numpy as np
import pytest

from ser.model import ModelConfig
from ser.synthdata import Corpus, CorpusSpec, CorruptionSpec, corrupt_corpus, gen_corpus
from ser.synthdata.dataobj import UtteranceExample
from ser.util import TrainConfig

ExampleFactory = Callable[..., UtteranceExample]


def tiny_model_config(**overrides: int) -> ModelConfig:
    values = dict(vocab_size=12, n_emotions=4, frame_dim=4, d=8, heads=2, enc_layers_speech=1,
                  enc_layers_text=1, downsample=2, d_max=4, max_len=12, max_frames=8,
                  ffn_dim=8)
    values.update(overrides)
    return ModelConfig(**values)  # type: ignore


@pytest.fixture
def tiny_config() -> ModelConfig:
    return tiny_model_config()


@pytest.fixture
def make_example(tiny_config: ModelConfig) -> ExampleFactory:
    """Random utterances fitting tiny_config. Unless given, the hypothesis is the
    transcript with one substitution and one insertion."""
    def factory(seed: int, m: int = 8, n: int = 5, asr: Optional[List[int]] = None,
                transcript: Optional[List[int]] = None,
                emotion: Optional[int] = None) -> UtteranceExample:
        rng = np.random.default_rng(seed)
        if transcript is None:
            transcript = [int(i) for i in rng.integers(4, tiny_config.vocab_size, size=n)]
        n = len(transcript)

        if asr is None:
            asr = list(transcript)
            if n >= 2:
                asr[1] = 4 + (asr[1] - 4 + 1) % (tiny_config.vocab_size - 4)
                asr.insert(n - 1, int(rng.integers(4, tiny_config.vocab_size)))

        return UtteranceExample(
            id=f"rand{seed}",
            frames=rng.normal(size=(m, tiny_config.frame_dim)),
            asr=asr,
            transcript=transcript,
            emotion=int(rng.integers(tiny_config.n_emotions)) if emotion is None else emotion,
        )

    return factory


@pytest.fixture
def tiny_corpus_spec() -> CorpusSpec:
    return CorpusSpec(vocab_size=12, n_emotions=4, alpha=0.9, keywords_per_emotion=2,
                      min_len=2, max_len=5, frame_dim=4, frames_per_token=2, noise=0.1,
                      emotion_offset=0.5, seed=3)


@pytest.fixture
def tiny_corpus(tiny_corpus_spec: CorpusSpec) -> Corpus:
    corpus = gen_corpus(tiny_corpus_spec, 16, seed=5)
    return corrupt_corpus(corpus, CorruptionSpec(p_sub=0.1, p_del=0.05, p_ins=0.05, seed=5))


@pytest.fixture
def tiny_train_config() -> TrainConfig:
    return TrainConfig(lr=3e-3, batch_size=4, epochs=2, seed=7, mode="full", d=8, heads=2,
                       enc_layers_speech=1, enc_layers_text=1, downsample=2, d_max=4,
                       max_len=12, max_frames=8, ffn_dim=8)
