"""Synthetic pre-tagged corpus for desk-scale runs.

Sentences come from a small template grammar over the 17 universal POS
categories. Function-word slots draw from small closed inventories and
content-word slots from large open ones with Zipf-like frequencies, so a
model trained on this corpus shows the same asymmetry as natural text:
function words become easy long before content words do.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

ONSETS = [
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t",
    "v", "w", "z", "bl", "br", "ch", "cl", "cr", "dr", "fl", "fr", "gl", "gr",
    "pl", "pr", "sh", "sl", "sm", "sp", "st", "str", "th", "tr",
]
NUCLEI = ["a", "e", "i", "o", "u", "ai", "ea", "ee", "ie", "oa", "oo", "ou"]
CODAS = ["", "", "n", "r", "s", "t", "l", "m", "d", "k", "nd", "nt", "rd", "rk", "rn", "st"]

PRON = ["it", "he", "she", "they", "we", "you", "i", "him", "her", "them",
        "us", "me", "who", "what", "his", "its", "their", "our", "your"]
DET = ["the", "a", "an", "this", "that", "these", "those", "some", "any",
       "each", "every", "no", "another"]
ADP = ["of", "in", "on", "at", "by", "with", "from", "to", "about", "over",
       "under", "between", "through", "during", "against", "across", "near"]
AUX = ["is", "are", "was", "were", "be", "been", "has", "have", "had", "do",
       "does", "did", "will", "would", "can", "could", "may", "might", "must", "should"]
CCONJ = ["and", "or", "but", "nor", "so", "yet"]
SCONJ = ["that", "because", "while", "although", "if", "when", "since", "unless", "until"]
PART = ["to", "not"]
INTJ = ["oh", "ah", "wow", "hey", "oops", "hmm", "yay", "ugh"]
PUNCT = [".", ",", ";", ":", "!", "?"]
SYM = ["$", "%", "+", "=", "&", "#"]
X_FORMS = ["etc", "i.e", "e.g", "qzx", "vvb"]
NUM_WORDS = ["one", "two", "three", "four", "five", "six", "seven", "eight",
             "nine", "ten", "twelve", "twenty", "fifty", "hundred", "thousand"]

VERB_SUFFIXES = ["", "s", "ed", "ing"]
VERB_SUFFIX_CDF = [0.45, 0.65, 0.85, 1.0]

# Each template is a list of slots; a slot is (TAG, keep_probability).
TEMPLATES = [
    [("DET", 1.0), ("ADJ", 0.5), ("NOUN", 1.0), ("AUX", 1.0), ("VERB", 1.0),
     ("ADP", 1.0), ("DET", 1.0), ("NOUN", 1.0), (".", 1.0)],
    [("PROPN", 1.0), ("VERB", 1.0), ("DET", 1.0), ("ADJ", 0.4), ("NOUN", 1.0),
     ("CCONJ", 0.6), ("PRON", 0.6), ("AUX", 0.6), ("ADJ", 0.6), (".", 1.0)],
    [("PRON", 1.0), ("AUX", 1.0), ("ADV", 0.7), ("VERB", 1.0), ("ADP", 1.0),
     ("DET", 1.0), ("NOUN", 1.0), (".", 1.0)],
    [("DET", 1.0), ("NOUN", 1.0), ("ADP", 1.0), ("DET", 0.7), ("NOUN", 1.0),
     ("VERB", 1.0), ("NUM", 0.8), ("NOUN", 1.0), (".", 1.0)],
    [("INTJ", 1.0), (",", 1.0), ("PRON", 1.0), ("VERB", 1.0), ("DET", 1.0),
     ("NOUN", 1.0), ("!", 1.0)],
    [("SCONJ", 1.0), ("PRON", 1.0), ("VERB", 1.0), (",", 1.0), ("DET", 1.0),
     ("NOUN", 1.0), ("AUX", 1.0), ("VERB", 1.0), ("ADV", 0.5), (".", 1.0)],
    [("PROPN", 1.0), ("CCONJ", 1.0), ("PROPN", 1.0), ("VERB", 1.0), ("ADP", 1.0),
     ("PROPN", 0.8), (".", 1.0)],
    [("DET", 1.0), ("ADJ", 0.6), ("NOUN", 1.0), ("PART", 1.0), ("VERB", 1.0),
     ("DET", 0.7), ("NOUN", 1.0), ("AUX", 0.5), ("ADJ", 0.5), (".", 1.0)],
    [("DET", 1.0), ("NOUN", 1.0), ("VERB", 1.0), ("SYM", 1.0), ("NUM", 1.0),
     ("ADP", 0.6), ("DET", 0.6), ("NOUN", 0.6), (".", 1.0)],
    [("PRON", 1.0), ("AUX", 1.0), ("PART", 1.0), ("VERB", 1.0), ("DET", 1.0),
     ("ADJ", 0.5), ("NOUN", 1.0), ("?", 1.0)],
    [("ADV", 1.0), (",", 1.0), ("DET", 1.0), ("NOUN", 1.0), ("ADP", 1.0),
     ("NUM", 1.0), ("NOUN", 1.0), ("AUX", 1.0), ("ADJ", 1.0), (".", 1.0)],
    [("X", 1.0), (",", 1.0), ("DET", 1.0), ("NOUN", 1.0), ("VERB", 1.0),
     ("NOUN", 0.7), (".", 1.0)],
]

TEMPLATE_CDF_WEIGHTS = [0.18, 0.14, 0.14, 0.12, 0.04, 0.10, 0.07, 0.10, 0.04, 0.04, 0.02, 0.01]


def _make_stem(rng: np.random.Generator, n_syllables: int) -> str:
    parts = []
    for _ in range(n_syllables):
        parts.append(ONSETS[rng.integers(len(ONSETS))])
        parts.append(NUCLEI[rng.integers(len(NUCLEI))])
    parts.append(CODAS[rng.integers(len(CODAS))])
    return "".join(parts)


def _make_inventory(rng: np.random.Generator, size: int, suffixes=("",),
                    capitalize=False) -> list[str]:
    forms: set[str] = set()
    out: list[str] = []
    while len(out) < size:
        stem = _make_stem(rng, int(rng.integers(1, 4)))
        suffix = suffixes[int(rng.integers(len(suffixes)))]
        form = stem + suffix
        if capitalize:
            form = form.capitalize()
        if form not in forms:
            forms.add(form)
            out.append(form)
    return out


def _zipf_cdf(n: int, exponent: float = 1.1) -> list[float]:
    probs = 1.0 / np.power(np.arange(1, n + 1, dtype=np.float64) + 1.0, exponent)
    cdf = np.cumsum(probs / probs.sum())
    cdf[-1] = 1.0
    return cdf.tolist()


@dataclass
class _Inventory:
    forms: list[str]
    cdf: list[float]

    def draw(self, rng: np.random.Generator) -> str:
        return self.forms[bisect.bisect_left(self.cdf, rng.random())]


def _build_lexicon(seed: int) -> dict[str, _Inventory]:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x1E11C0]))
    def inv(forms):
        return _Inventory(forms, _zipf_cdf(len(forms)))

    nouns = _make_inventory(rng, 2400, suffixes=("", "", "s", "tion", "ness", "er"))
    verbs = _make_inventory(rng, 1300)
    adjs = _make_inventory(rng, 900, suffixes=("", "ous", "ful", "ive", "al"))
    advs = [a + "ly" for a in _make_inventory(rng, 320)]
    propns = _make_inventory(rng, 900, capitalize=True)
    nums = NUM_WORDS + [str(int(v)) for v in rng.integers(0, 10000, size=120)]
    return {
        "NOUN": inv(nouns),
        "VERB": inv(verbs),
        "ADJ": inv(adjs),
        "ADV": inv(advs),
        "PROPN": inv(propns),
        "NUM": inv(list(dict.fromkeys(nums))),
        "INTJ": inv(INTJ),
        "PRON": inv(PRON),
        "DET": inv(DET),
        "ADP": inv(ADP),
        "AUX": inv(AUX),
        "CCONJ": inv(CCONJ),
        "SCONJ": inv(SCONJ),
        "PART": inv(PART),
        "PUNCT": inv(PUNCT),
        "SYM": inv(SYM),
        "X": inv(X_FORMS),
    }


def generate_sentences(n_tokens: int, seed: int):
    """Yield (form, tag) sentences totalling at least n_tokens tokens."""
    lexicon = _build_lexicon(seed)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5E27]))
    template_cdf = np.cumsum(TEMPLATE_CDF_WEIGHTS).tolist()
    template_cdf[-1] = 1.0
    emitted = 0
    while emitted < n_tokens:
        template = TEMPLATES[bisect.bisect_left(template_cdf, rng.random())]
        sentence = []
        for tag, keep_p in template:
            if keep_p < 1.0 and rng.random() >= keep_p:
                continue
            if tag in (".", ",", "!", "?", ";", ":"):
                sentence.append((tag, "PUNCT"))
                continue
            form = lexicon[tag].draw(rng)
            if tag == "VERB":
                form += VERB_SUFFIXES[bisect.bisect_left(VERB_SUFFIX_CDF, rng.random())]
            sentence.append((form, tag))
        emitted += len(sentence)
        yield sentence


def write_corpus(path, n_tokens: int, seed: int) -> int:
    """Write a tagged corpus file; returns the number of tokens written."""
    written = 0
    with open(path, "w", encoding="utf-8") as f:
        for sentence in generate_sentences(n_tokens, seed):
            for form, tag in sentence:
                f.write(f"{form}\t{tag}\n")
            f.write("\n")
            written += len(sentence)
    return written
