import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from ..const import RESERVED_TOKENS
from .dataobj import Corpus, UtteranceExample
from .spec import CorpusSpec, CorruptionSpec

"""
Synthetic emotion corpus: token transcripts drawn from per-emotion keyword
distributions, speech frames made of per-token prototypes shifted by a
per-emotion offset, and a noisy channel turning transcripts into ASR hypotheses.

Every draw comes from a generator seeded with a pure function of the seeds
and the utterance index (or id), so generation order doesn't matter.
"""

_logger = logging.getLogger("MfAec.synthdata")

# Stream tags of the seed sequences
_STREAM_PROTOTYPES = 0
_STREAM_OFFSETS = 1
_STREAM_UTTERANCES = 2


class World(NamedTuple):
    """Fixed acoustic structure of a corpus spec, shared by every sample drawn from it"""
    prototypes: np.ndarray  # vocab_size × frame_dim
    offsets: np.ndarray     # n_emotions × frame_dim
    distributions: np.ndarray  # n_emotions × vocab_size


def make_world(spec: CorpusSpec) -> World:
    prototypes = np.random.default_rng([spec.seed, _STREAM_PROTOTYPES]) \
        .normal(size=(spec.vocab_size, spec.frame_dim))
    offsets = np.random.default_rng([spec.seed, _STREAM_OFFSETS]) \
        .normal(size=(spec.n_emotions, spec.frame_dim)) * spec.emotion_offset
    distributions = np.stack([spec.token_distribution(c) for c in range(spec.n_emotions)])
    return World(prototypes, offsets, distributions)


def utterance_id(index: int) -> str:
    return f"utt{index:06d}"


def gen_utterance(spec: CorpusSpec, world: World, index: int, seed: int) -> UtteranceExample:
    rng = np.random.default_rng([seed, _STREAM_UTTERANCES, index])

    emotion = int(rng.integers(spec.n_emotions))
    length = int(rng.integers(spec.min_len, spec.max_len + 1))
    tokens = rng.choice(spec.vocab_size, size=length, p=world.distributions[emotion])

    frames = np.repeat(world.prototypes[tokens] + world.offsets[emotion],
                       spec.frames_per_token, axis=0)
    if spec.noise > 0:
        frames = frames + rng.normal(scale=spec.noise, size=frames.shape)

    transcript = [int(i) for i in tokens]
    return UtteranceExample(utterance_id(index), frames, list(transcript), transcript, emotion)


def gen_corpus(spec: CorpusSpec, n_utterances: int, seed: Optional[int] = None,
               workers: int = 1) -> Corpus:
    """
    Draws n_utterances examples. seed (default: spec.seed) steers the sampling of
    utterances; prototypes and offsets always come from spec.seed, so that corpora drawn
    with different seeds share one acoustic world. ASR hypotheses start as transcript copies.
    """
    if n_utterances <= 0:
        raise ValueError(f"n_utterances must be positive (got {n_utterances})")
    spec.validate()

    seed = spec.seed if seed is None else seed
    world = make_world(spec)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            examples = list(pool.map(lambda i: gen_utterance(spec, world, i, seed),
                                     range(n_utterances)))
    else:
        examples = [gen_utterance(spec, world, i, seed) for i in range(n_utterances)]

    _logger.info(f"Generated {n_utterances} utterances (seed {seed})")
    return Corpus(spec.vocab_size, spec.n_emotions, spec.frame_dim, examples)


def corrupt(transcript: Sequence[int], spec: CorruptionSpec, utt_id: str,
            vocab_size: int) -> List[int]:
    """
    Passes a transcript through the noisy channel. For every token: substitute it
    with probability p_sub, delete it with probability p_del, otherwise keep it;
    then insert a random token after it with probability p_ins.
    """
    first_content = len(RESERVED_TOKENS)
    n_content = vocab_size - first_content
    if n_content < 2 and spec.p_sub > 0:
        raise ValueError("substitutions need at least 2 content tokens")

    rng = np.random.default_rng([spec.seed, zlib.crc32(utt_id.encode("utf-8"))])
    result: List[int] = []

    for token in transcript:
        u = rng.random()
        if u < spec.p_sub:
            # Uniform over the other content tokens
            pick = first_content + int(rng.integers(n_content - 1))
            result.append(pick if pick < token else pick + 1)
        elif u >= spec.p_sub + spec.p_del:
            result.append(token)

        if rng.random() < spec.p_ins:
            result.append(first_content + int(rng.integers(n_content)))

    return result


def corrupt_corpus(corpus: Corpus, spec: CorruptionSpec) -> Corpus:
    """Replaces the ASR hypotheses of every example with corrupted transcripts."""
    spec.validate()
    for example in corpus.examples:
        example.asr = corrupt(example.transcript, spec, example.id, corpus.vocab_size)
    return corpus
