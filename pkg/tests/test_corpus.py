import logging

import numpy as np
import pytest

from tvmask.corpus.packing import pack_sequences, pack_to_arrays
from tvmask.corpus.reader import CorpusFormatError, load_tagged_corpus
from tvmask.corpus.synth import generate_sentences, write_corpus
from tvmask.corpus.tokenizer import tokenize_aligned, tokenize_word
from tvmask.corpus.vocab import RESERVED_TOKENS, Vocabulary, build_vocab
from tvmask.postags import UPOS_TAGS, pos_id


def write(tmp_path, text, name="corpus.txt"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# ------------------------------------------------------------ reader

def test_reader_basic(tmp_path):
    path = write(tmp_path, "apple\tNOUN\nfalls\tVERB\n\nit\tPRON\n.\tPUNCT\n")
    sents = list(load_tagged_corpus(path))
    assert sents == [
        [("apple", pos_id("NOUN")), ("falls", pos_id("VERB"))],
        [("it", pos_id("PRON")), (".", pos_id("PUNCT"))],
    ]


def test_reader_space_separated(tmp_path):
    path = write(tmp_path, "apple NOUN\n\n")
    assert list(load_tagged_corpus(path)) == [[("apple", pos_id("NOUN"))]]


def test_reader_unknown_tag_maps_to_x(tmp_path, caplog):
    path = write(tmp_path, "blorp\tFOO\n\n")
    with caplog.at_level(logging.WARNING):
        sents = list(load_tagged_corpus(path))
    assert sents == [[("blorp", pos_id("X"))]]
    assert any("FOO" in rec.getMessage() for rec in caplog.records)


def test_reader_skips_empty_sentence_blocks(tmp_path):
    path = write(tmp_path, "\n\na\tDET\n\n\n\nb\tNOUN\n")
    sents = list(load_tagged_corpus(path))
    assert len(sents) == 2


def test_reader_malformed_line_reports_lineno(tmp_path):
    path = write(tmp_path, "ok\tNOUN\nbroken_line_without_tag\n")
    with pytest.raises(CorpusFormatError, match=":2:"):
        list(load_tagged_corpus(path))


def test_reader_empty_file_errors(tmp_path):
    path = write(tmp_path, "\n\n")
    with pytest.raises(CorpusFormatError, match="no sentences"):
        list(load_tagged_corpus(path))


def test_reader_missing_file():
    with pytest.raises(FileNotFoundError):
        list(load_tagged_corpus("/nonexistent/corpus.txt"))


# ------------------------------------------------------------ vocabulary

def test_build_vocab_tiny_corpus_keeps_whole_words():
    sentences = [[("a", 0), ("a", 0), ("b", 0)]]
    vocab = build_vocab(iter(sentences), 7)
    assert vocab.size == 7
    assert vocab.tokens[:5] == list(RESERVED_TOKENS)
    assert set(vocab.tokens[5:]) == {"a", "b"}
    # higher count first: "a" (2) before "b" (1)
    assert vocab.tokens[5] == "a"


def test_build_vocab_deterministic():
    sentences = [s for s in generate_sentences(2000, 5)]
    mapped = [[(f, pos_id(t)) for f, t in s] for s in sentences]
    v1 = build_vocab(iter(mapped), 300)
    v2 = build_vocab(iter(mapped), 300)
    assert v1.tokens == v2.tokens


def test_build_vocab_size_validation():
    with pytest.raises(ValueError):
        build_vocab(iter([[("a", 0)]]), 4)


def test_vocab_save_load_roundtrip(tmp_path):
    sentences = [[("hello", 0), ("world", 1)]]
    vocab = build_vocab(iter(sentences), 40)
    path = tmp_path / "vocab.txt"
    vocab.save(path)
    loaded = Vocabulary.load(path)
    assert loaded.tokens == vocab.tokens
    assert loaded.content_hash() == vocab.content_hash()
    # line number = id, reserved first
    lines = path.read_text().splitlines()
    assert lines[:5] == list(RESERVED_TOKENS)


def test_vocab_rejects_bad_reserved_order():
    with pytest.raises(ValueError):
        Vocabulary(["[PAD]", "[CLS]", "[UNK]", "[SEP]", "[MASK]", "a"])


# ------------------------------------------------------------ tokenizer

@pytest.fixture
def small_vocab():
    return Vocabulary(list(RESERVED_TOKENS) + ["keep", "##s", "doctor", "an", "##d"])


def test_tokenize_continuation_inherits_tag(small_vocab):
    frag = tokenize_aligned([("keeps", pos_id("VERB"))], small_vocab)
    keep = small_vocab.token_to_id["keep"]
    s = small_vocab.token_to_id["##s"]
    np.testing.assert_array_equal(frag.token_ids, [keep, s])
    assert list(frag.pos_ids) == [pos_id("VERB")] * 2
    assert list(frag.word_lengths) == [2]


def test_tokenize_whole_word(small_vocab):
    frag = tokenize_aligned([("doctor", pos_id("NOUN"))], small_vocab)
    np.testing.assert_array_equal(frag.token_ids, [small_vocab.token_to_id["doctor"]])
    assert list(frag.pos_ids) == [pos_id("NOUN")]


def test_tokenize_oov_is_unk_with_tag(small_vocab):
    frag = tokenize_aligned([("zzz", pos_id("ADJ"))], small_vocab)
    np.testing.assert_array_equal(frag.token_ids, [small_vocab.unk_id])
    assert list(frag.pos_ids) == [pos_id("ADJ")]


def test_tokenize_greedy_longest_match(small_vocab):
    # "and" -> "an" + "##d" (longest prefix first)
    assert tokenize_word("and", small_vocab) == [
        small_vocab.token_to_id["an"], small_vocab.token_to_id["##d"]
    ]


# ------------------------------------------------------------ packing

def build_from_text(sentences, vocab_size=256, L_seq=16):
    vocab = build_vocab(iter(sentences), vocab_size)
    frags = [tokenize_aligned(s, vocab) for s in sentences]
    return vocab, frags


def test_pack_layout_single_sentence():
    sentences = [[(w, 0) for w in ("v", "w", "x", "y", "z")]]
    vocab, frags = build_from_text(sentences, vocab_size=16, L_seq=8)
    seqs = list(pack_sequences(iter(frags), 8, vocab))
    assert len(seqs) == 1
    seq = seqs[0]
    assert seq.token_ids[0] == vocab.cls_id
    assert seq.token_ids[6] == vocab.sep_id
    assert seq.token_ids[7] == vocab.pad_id
    assert seq.special_mask.sum() == 3  # CLS, SEP, PAD
    assert list(seq.special_mask) == [True] + [False] * 5 + [True, True]


def test_pack_round_trip_and_tag_conservation():
    sentences = [[(f, pos_id(t)) for f, t in s] for s in generate_sentences(3000, 9)]
    vocab, frags = build_from_text(sentences, vocab_size=512)
    tokens, pos, special = pack_to_arrays(iter(frags), 32, vocab)
    # round-trip: non-special pieces in order reconstruct the tokenized corpus
    flat_tokens = tokens[~special]
    flat_pos = pos[~special]
    expected_tokens = np.concatenate([f.token_ids for f in frags])
    expected_pos = np.concatenate([f.pos_ids for f in frags])
    np.testing.assert_array_equal(flat_tokens, expected_tokens)
    np.testing.assert_array_equal(flat_pos, expected_pos)


def test_pack_deterministic():
    sentences = [[(f, pos_id(t)) for f, t in s] for s in generate_sentences(1500, 2)]
    vocab, frags = build_from_text(sentences, vocab_size=256)
    a = pack_to_arrays(iter(frags), 24, vocab)
    b = pack_to_arrays(iter(frags), 24, vocab)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_pack_words_not_split_unless_oversized():
    # two 4-piece words in a capacity-6 buffer: second word moves whole
    vocab = Vocabulary(list(RESERVED_TOKENS) + ["ab", "##a", "##b", "##c"])
    sentences = [[("abaabab", 0), ("abaabab", 1)]]  # ab ##a ##a ##b ##a ##b? depends
    frags = [tokenize_aligned(s, vocab) for s in sentences]
    wl = frags[0].word_lengths
    assert wl[0] == wl[1] >= 2
    seqs = list(pack_sequences(iter(frags), 8, vocab))
    # each sequence's non-special span must hold whole words only
    starts = np.cumsum([0] + list(wl))[:-1]
    word_of_piece = np.repeat(np.arange(len(wl)), wl)
    offset = 0
    for seq in seqs:
        body = seq.token_ids[~seq.special_mask]
        words_here = word_of_piece[offset : offset + len(body)]
        offset += len(body)
        for w in np.unique(words_here):
            assert np.count_nonzero(word_of_piece == w) == np.count_nonzero(words_here == w)


def test_pack_oversized_word_splits():
    vocab = Vocabulary(list(RESERVED_TOKENS) + ["a", "##a"])
    long_word = "a" * 20  # 20 pieces > capacity 6
    frags = [tokenize_aligned([(long_word, 0)], vocab)]
    seqs = list(pack_sequences(iter(frags), 8, vocab))
    total_pieces = sum(int((~s.special_mask).sum()) for s in seqs)
    assert total_pieces == 20
    assert len(seqs) == 4  # ceil(20 / 6)


def test_pack_min_length():
    vocab = Vocabulary(list(RESERVED_TOKENS) + ["a"])
    with pytest.raises(ValueError):
        list(pack_sequences(iter([]), 4, vocab))


# ------------------------------------------------------------ synthetic corpus

def test_synth_deterministic_and_tagged(tmp_path):
    p1 = tmp_path / "c1.txt"
    p2 = tmp_path / "c2.txt"
    n1 = write_corpus(p1, 5000, 123)
    n2 = write_corpus(p2, 5000, 123)
    assert n1 == n2 >= 5000
    assert p1.read_bytes() == p2.read_bytes()
    tags = {t for s in load_tagged_corpus(p1) for _, t in s}
    assert tags <= set(range(len(UPOS_TAGS)))


def test_synth_covers_all_categories(tmp_path):
    path = tmp_path / "c.txt"
    write_corpus(path, 60000, 1)
    seen = np.zeros(len(UPOS_TAGS), dtype=bool)
    for sent in load_tagged_corpus(path):
        for _, t in sent:
            seen[t] = True
    assert seen.all(), [UPOS_TAGS[i] for i in np.nonzero(~seen)[0]]
