import numpy as np
import pytest

from tvmask.corpus.packing import TaggedSequence
from tvmask.corpus.vocab import RESERVED_TOKENS, Vocabulary


@pytest.fixture
def letters_vocab():
    """Reserved tokens plus a handful of letter tokens; enough for masker tests."""
    letters = [chr(ord("a") + i) for i in range(15)]
    return Vocabulary(list(RESERVED_TOKENS) + letters)


def make_sequence(n=10, n_special_tail=2, pos_pattern=None, vocab_size=20):
    """TaggedSequence with [CLS] ... [SEP]/[PAD] tail; deterministic token ids."""
    token_ids = np.arange(5, 5 + n, dtype=np.int32) % vocab_size
    special = np.zeros(n, dtype=bool)
    special[0] = True
    if n_special_tail:
        special[-n_special_tail:] = True
    token_ids[0] = 2  # [CLS]
    if n_special_tail:
        token_ids[-n_special_tail] = 3  # [SEP]
        token_ids[len(token_ids) - n_special_tail + 1 :] = 0  # [PAD]
    if pos_pattern is None:
        pos_pattern = [0]
    pos = np.array([pos_pattern[i % len(pos_pattern)] for i in range(n)], dtype=np.int8)
    return TaggedSequence(token_ids, pos, special)
