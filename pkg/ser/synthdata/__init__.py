from .corpusfile import CorpusFormatError, Parser, read_corpus, write_corpus
from .dataobj import Corpus, UtteranceExample
from .generator import corrupt, corrupt_corpus, gen_corpus, make_world, utterance_id
from .spec import CorpusSpec, CorruptionSpec

"""
`synthdata` generates emotion-labelled synthetic utterances, simulates
ASR errors on their transcripts and stores corpora in line-oriented files.
"""
