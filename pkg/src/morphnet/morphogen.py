"""Root lexicons, morphological rules, and train/test corpus construction.

Each rule maps a root plus inflection values to a surface phone sequence.
The recipes, written against the root ``vibun`` (consonants C1 C2 C3 where
a rule needs them):

==================  ========================================================
suffix              present +i, past +a
prefix              present i+, past a+
infix               k (present) or n (past) inserted after the first vowel
circumfix           present i...i, past a...a
mutation            past nasalizes the final vowel; present is the bare root
deletion            past drops the final segment; present is the bare root
template2           present C1 a C2 a C3, past C1 C2 a a C3
two_suffix          tense suffix (present a, past i) then aspect (perfect k,
                    progressive s): vibunak / vibunas / vibunik / vibunis
two_prefix          tense prefix (present k, past s) then aspect (perfect a,
                    progressive i): kavibun / kivibun / savibun / sivibun
prefix_suffix       tense prefix (present a, past o) plus aspect suffix
                    (perfect e, progressive u): avibune ... ovibunu
template3_favored   present C1aC2aC3a, past aC1C2aaC3, future aC1aC2C3a
template3_disfavored  present C1aC2C3aa, past aC1C2aC3a, future aC1aC3aC2
==================  ========================================================

The two reduplication kinds label two-syllable words for same-onset or
same-rime detection instead of applying an affix.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .phonology import (
    Inventory,
    REDUPLICATION_CODAS,
    is_consonant,
    is_vowel,
    nasal_counterpart,
    parse_surface,
    root_pattern,
)

ROOT_PATTERNS = ("CVC", "CVCVC", "CCC")

WORD_RULE_KINDS = (
    "suffix", "prefix", "infix", "circumfix", "mutation", "deletion",
    "template2", "two_suffix", "two_prefix", "prefix_suffix",
    "template3_favored", "template3_disfavored",
)
REDUPLICATION_RULE_KINDS = ("reduplication_onset", "reduplication_rime")
RULE_KINDS = WORD_RULE_KINDS + REDUPLICATION_RULE_KINDS

#: Rule kinds (1)-(10) of the general-performance study, in figure order.
GENERAL_RULE_KINDS = WORD_RULE_KINDS[:10]


@dataclass(frozen=True)
class Category:
    """One inflectional category: its name, values, and head encoding.

    ``encoding`` is "onehot" for one unit per value, or "unit" for the
    single-unit binary head used by the reduplication tasks.
    """

    name: str
    values: tuple[str, ...]
    encoding: str = "onehot"

    def __post_init__(self) -> None:
        if len(self.values) < 2:
            raise ValueError(f"category {self.name!r} needs >= 2 values")
        if self.encoding == "unit" and len(self.values) != 2:
            raise ValueError("unit encoding requires exactly 2 values")


TENSE2 = Category("tense", ("present", "past"))
TENSE3 = Category("tense", ("present", "past", "future"))
ASPECT = Category("aspect", ("perfect", "progressive"))

_RULE_CATEGORIES: dict[str, tuple[Category, ...]] = {
    **{k: (TENSE2,) for k in ("suffix", "prefix", "infix", "circumfix",
                              "mutation", "deletion", "template2")},
    **{k: (TENSE2, ASPECT) for k in ("two_suffix", "two_prefix",
                                     "prefix_suffix")},
    "template3_favored": (TENSE3,),
    "template3_disfavored": (TENSE3,),
    "reduplication_onset": (Category("same_onset", ("different", "same"),
                                     "unit"),),
    "reduplication_rime": (Category("same_rime", ("different", "same"),
                                    "unit"),),
    "syllable_id": (),
}


@dataclass(frozen=True)
class Rule:
    kind: str
    categories: tuple[Category, ...]

    @property
    def n_forms(self) -> int:
        n = 1
        for c in self.categories:
            n *= len(c.values)
        return n


def make_rule(kind: str) -> Rule:
    try:
        return Rule(kind, _RULE_CATEGORIES[kind])
    except KeyError:
        raise ValueError(f"unknown rule kind {kind!r}") from None


@dataclass(frozen=True)
class Root:
    id: int
    symbols: tuple[str, ...]

    @property
    def pattern(self) -> str:
        return root_pattern(self.symbols)

    @property
    def surface(self) -> str:
        return "".join(self.symbols)


@dataclass(frozen=True)
class Word:
    """One supervised example: surface form, root id, inflection ids."""

    surface: tuple[str, ...]
    root_id: int | None
    inflection_ids: tuple[int, ...]
    syllables: tuple[tuple[str, ...], ...] | None = None

    @property
    def text(self) -> str:
        return "".join(self.surface)


@dataclass(frozen=True)
class Corpus:
    rule: Rule
    inventory_kind: str
    roots: tuple[Root, ...]
    words_train: tuple[Word, ...]
    words_test: tuple[Word, ...]
    seed: int

    @property
    def categories(self) -> tuple[Category, ...]:
        return self.rule.categories

    @property
    def words(self) -> tuple[Word, ...]:
        return self.words_train + self.words_test


@dataclass(frozen=True)
class Syllable:
    onset: str
    vowel: str
    coda: str | None = None

    @property
    def symbols(self) -> tuple[str, ...]:
        if self.coda is None:
            return (self.onset, self.vowel)
        return (self.onset, self.vowel, self.coda)

    @property
    def rime(self) -> tuple[str, str | None]:
        return (self.vowel, self.coda)

    @property
    def surface(self) -> str:
        return "".join(self.symbols)


@dataclass(frozen=True)
class SyllablePair:
    first: Syllable
    second: Syllable
    label: int


@dataclass(frozen=True)
class SyllablePairCorpus:
    task: str
    pairs_train: tuple[SyllablePair, ...]
    pairs_test: tuple[SyllablePair, ...]
    seed: int


# ---------------------------------------------------------------------------
# root generation

def _pattern_space(pattern: str, inventory: Inventory) -> list[tuple[str, ...]]:
    slots = [inventory.consonants if ch == "C" else inventory.vowels
             for ch in pattern]
    return list(itertools.product(*slots))


def generate_roots(count: int, patterns: Sequence[str], inventory: Inventory,
                   seed: int) -> tuple[Root, ...]:
    """Sample ``count`` distinct roots, one per entry of ``patterns``.

    Sampling is without replacement within each pattern's slot space, so
    the lexicon is collision-free and deterministic for a given seed.
    """
    if len(patterns) != count:
        raise ValueError(f"{count} roots requested but {len(patterns)} "
                         "patterns given")
    for p in patterns:
        if p not in ROOT_PATTERNS:
            raise ValueError(f"unknown root pattern {p!r}")
    rng = np.random.default_rng(seed)
    roots: list[Root] = []
    quotas: dict[str, int] = {}
    for p in patterns:
        quotas[p] = quotas.get(p, 0) + 1
    samples: dict[str, list[tuple[str, ...]]] = {}
    for p, quota in quotas.items():
        space = _pattern_space(p, inventory)
        if quota > len(space):
            raise ValueError(f"cannot draw {quota} distinct {p} roots from a "
                             f"space of {len(space)}")
        idx = rng.choice(len(space), size=quota, replace=False)
        samples[p] = [space[i] for i in idx]
    for p in patterns:
        roots.append(Root(len(roots), samples[p].pop(0)))
    return tuple(roots)


# ---------------------------------------------------------------------------
# inflection

_TENSE_SUFFIX = {"present": "i", "past": "a"}
_TENSE_PREFIX = {"present": "i", "past": "a"}
_INFIX = {"present": "k", "past": "n"}
_TWO_SUFFIX_TENSE = {"present": "a", "past": "i"}
_TWO_SUFFIX_ASPECT = {"perfect": "k", "progressive": "s"}
_TWO_PREFIX_TENSE = {"present": "k", "past": "s"}
_TWO_PREFIX_ASPECT = {"perfect": "a", "progressive": "i"}
_PS_TENSE_PREFIX = {"present": "a", "past": "o"}
_PS_ASPECT_SUFFIX = {"perfect": "e", "progressive": "u"}

_TEMPLATE3_FAVORED = {
    "present": "1a2a3a",
    "past": "a12aa3",
    "future": "a1a23a",
}
_TEMPLATE3_DISFAVORED = {
    "present": "1a23aa",
    "past": "a12a3a",
    "future": "a1a3a2",
}


def _consonants_of(root: Root) -> tuple[str, ...]:
    return tuple(s for s in root.symbols if is_consonant(s))


def _require_three_consonants(root: Root, kind: str) -> tuple[str, ...]:
    cons = _consonants_of(root)
    if len(cons) != 3:
        raise ValueError(f"{kind} rule needs a 3-consonant root, got "
                         f"{root.surface!r} ({root.pattern})")
    return cons


def _fill_template(template: str, cons: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(cons[int(ch) - 1] if ch.isdigit() else ch for ch in template)


def _first_vowel_index(root: Root) -> int:
    for i, s in enumerate(root.symbols):
        if is_vowel(s):
            return i
    raise ValueError(f"root {root.surface!r} has no vowel")


def _last_vowel_index(root: Root) -> int:
    for i in range(len(root.symbols) - 1, -1, -1):
        if is_vowel(root.symbols[i]):
            return i
    raise ValueError(f"root {root.surface!r} has no vowel")


def inflect(root: Root, rule: Rule,
            inflections: Sequence[str]) -> tuple[str, ...]:
    """Apply ``rule`` to ``root`` for the given per-category values."""
    if len(inflections) != len(rule.categories):
        raise ValueError(f"{rule.kind} expects {len(rule.categories)} "
                         f"inflection values, got {len(inflections)}")
    for value, cat in zip(inflections, rule.categories):
        if value not in cat.values:
            raise ValueError(f"{value!r} is not a {cat.name} value")
    kind = rule.kind
    sym = root.symbols

    if kind == "suffix":
        return sym + (_TENSE_SUFFIX[inflections[0]],)
    if kind == "prefix":
        return (_TENSE_PREFIX[inflections[0]],) + sym
    if kind == "infix":
        i = _first_vowel_index(root)
        return sym[:i + 1] + (_INFIX[inflections[0]],) + sym[i + 1:]
    if kind == "circumfix":
        fix = _TENSE_SUFFIX[inflections[0]]
        return (fix,) + sym + (fix,)
    if kind == "mutation":
        if inflections[0] == "present":
            return sym
        i = _last_vowel_index(root)
        return sym[:i] + (nasal_counterpart(sym[i]),) + sym[i + 1:]
    if kind == "deletion":
        return sym if inflections[0] == "present" else sym[:-1]
    if kind == "template2":
        c1, c2, c3 = _require_three_consonants(root, kind)
        if inflections[0] == "present":
            return (c1, "a", c2, "a", c3)
        return (c1, c2, "a", "a", c3)
    if kind == "two_suffix":
        return sym + (_TWO_SUFFIX_TENSE[inflections[0]],
                      _TWO_SUFFIX_ASPECT[inflections[1]])
    if kind == "two_prefix":
        return (_TWO_PREFIX_TENSE[inflections[0]],
                _TWO_PREFIX_ASPECT[inflections[1]]) + sym
    if kind == "prefix_suffix":
        return (_PS_TENSE_PREFIX[inflections[0]],) + sym \
            + (_PS_ASPECT_SUFFIX[inflections[1]],)
    if kind == "template3_favored":
        cons = _require_three_consonants(root, kind)
        return _fill_template(_TEMPLATE3_FAVORED[inflections[0]], cons)
    if kind == "template3_disfavored":
        cons = _require_three_consonants(root, kind)
        return _fill_template(_TEMPLATE3_DISFAVORED[inflections[0]], cons)
    raise ValueError(f"rule kind {kind!r} does not inflect single roots")


# ---------------------------------------------------------------------------
# corpora

def _split_indices(n: int, rng: np.random.Generator) -> tuple[list[int], list[int]]:
    n_train = int(round(2 * n / 3))
    order = rng.permutation(n)
    return sorted(order[:n_train].tolist()), sorted(order[n_train:].tolist())


def build_corpus(rule: Rule, roots: Sequence[Root], seed: int,
                 inventory_kind: str) -> Corpus:
    """Enumerate every root x inflection combination and split it 2/3 - 1/3."""
    value_grid = list(itertools.product(*(c.values for c in rule.categories)))
    words: list[Word] = []
    for root in roots:
        for values in value_grid:
            ids = tuple(cat.values.index(v)
                        for v, cat in zip(values, rule.categories))
            words.append(Word(inflect(root, rule, values), root.id, ids))
    rng = np.random.default_rng(seed)
    train_idx, test_idx = _split_indices(len(words), rng)
    return Corpus(rule=rule, inventory_kind=inventory_kind,
                  roots=tuple(roots),
                  words_train=tuple(words[i] for i in train_idx),
                  words_test=tuple(words[i] for i in test_idx),
                  seed=seed)


# ---------------------------------------------------------------------------
# reduplication stimuli

def enumerate_syllables(inventory: Inventory) -> tuple[Syllable, ...]:
    """Full onset x vowel x (no coda | n | s) cross product, in fixed order."""
    if inventory.kind != "reduplication":
        raise ValueError("syllables are defined over the reduplication "
                         f"inventory, not {inventory.kind!r}")
    codas: tuple[str | None, ...] = (None,) + REDUPLICATION_CODAS
    return tuple(Syllable(o, v, c)
                 for o in inventory.consonants
                 for v in inventory.vowels
                 for c in codas)


def pair_label(task: str, first: Syllable, second: Syllable) -> int:
    if task == "onset":
        return int(first.onset == second.onset)
    if task == "rime":
        return int(first.rime == second.rime)
    raise ValueError(f"unknown reduplication task {task!r}")


def _draw_syllable(rng: np.random.Generator,
                   syllables: Sequence[Syllable]) -> Syllable:
    return syllables[int(rng.integers(len(syllables)))]


def _sample_pairs(task: str, n: int, rng: np.random.Generator,
                  syllables: Sequence[Syllable],
                  seen: set[tuple[tuple[str, ...], tuple[str, ...]]],
                  ) -> list[SyllablePair]:
    """Draw n distinct pairs, exactly half satisfying the task criterion."""
    if n % 2:
        raise ValueError("pair counts must be even to balance the labels")
    out: list[SyllablePair] = []
    for label in (1, 0):
        need = n // 2
        while need:
            first = _draw_syllable(rng, syllables)
            second = _draw_syllable(rng, syllables)
            if pair_label(task, first, second) != label:
                continue
            key = (first.symbols, second.symbols)
            if key in seen:
                continue
            seen.add(key)
            out.append(SyllablePair(first, second, label))
            need -= 1
    order = rng.permutation(len(out))
    return [out[i] for i in order]


def build_syllable_pair_corpus(task: str, n_train: int, n_test: int,
                               inventory: Inventory,
                               seed: int) -> SyllablePairCorpus:
    """Distinct balanced syllable pairs for the feedforward comparison task."""
    syllables = enumerate_syllables(inventory)
    rng = np.random.default_rng(seed)
    seen: set[tuple[tuple[str, ...], tuple[str, ...]]] = set()
    train = _sample_pairs(task, n_train, rng, syllables, seen)
    test = _sample_pairs(task, n_test, rng, syllables, seen)
    return SyllablePairCorpus(task, tuple(train), tuple(test), seed)


def _pair_to_word(pair: SyllablePair) -> Word:
    return Word(surface=pair.first.symbols + pair.second.symbols,
                root_id=None,
                inflection_ids=(pair.label,),
                syllables=(pair.first.symbols, pair.second.symbols))


def build_reduplication_corpus(task: str, n_train: int, n_test: int,
                               inventory: Inventory, seed: int) -> Corpus:
    """Two-syllable words labeled for same-onset or same-rime, half positive.

    Pairs are drawn with the same stream as :func:`build_syllable_pair_corpus`,
    so corpora built with one seed contain the same items in both framings.
    """
    pairs = build_syllable_pair_corpus(task, n_train, n_test, inventory, seed)
    rule = make_rule(f"reduplication_{task}")
    return Corpus(rule=rule, inventory_kind=inventory.kind, roots=(),
                  words_train=tuple(_pair_to_word(p) for p in pairs.pairs_train),
                  words_test=tuple(_pair_to_word(p) for p in pairs.pairs_test),
                  seed=seed)


CORPUS_FORMAT_VERSION = 1


def _word_record(word: Word, split: str) -> dict:
    rec: dict = {"surface": list(word.surface), "root_id": word.root_id,
                 "inflection_ids": list(word.inflection_ids), "split": split}
    if word.syllables is not None:
        rec["syllables"] = [list(s) for s in word.syllables]
    return rec


def corpus_to_json(corpus: Corpus) -> str:
    doc = {
        "version": CORPUS_FORMAT_VERSION,
        "inventory": corpus.inventory_kind,
        "rule": {
            "kind": corpus.rule.kind,
            "categories": [{"name": c.name, "values": list(c.values),
                            "encoding": c.encoding}
                           for c in corpus.rule.categories],
        },
        "seed": corpus.seed,
        "roots": [{"id": r.id, "symbols": list(r.symbols)}
                  for r in corpus.roots],
        "words": [_word_record(w, "train") for w in corpus.words_train]
        + [_word_record(w, "test") for w in corpus.words_test],
    }
    return json.dumps(doc, sort_keys=True, indent=1, ensure_ascii=False)


def _word_from_record(rec: Mapping) -> Word:
    syl = rec.get("syllables")
    return Word(surface=tuple(rec["surface"]), root_id=rec["root_id"],
                inflection_ids=tuple(rec["inflection_ids"]),
                syllables=None if syl is None
                else tuple(tuple(s) for s in syl))


def corpus_from_json(text: str) -> Corpus:
    doc = json.loads(text)
    version = doc.get("version")
    if version != CORPUS_FORMAT_VERSION:
        raise ValueError(f"unsupported corpus format version {version!r}")
    rule = Rule(doc["rule"]["kind"],
                tuple(Category(c["name"], tuple(c["values"]), c["encoding"])
                      for c in doc["rule"]["categories"]))
    return Corpus(
        rule=rule,
        inventory_kind=doc["inventory"],
        roots=tuple(Root(r["id"], tuple(r["symbols"]))
                    for r in doc["roots"]),
        words_train=tuple(_word_from_record(r) for r in doc["words"]
                          if r["split"] == "train"),
        words_test=tuple(_word_from_record(r) for r in doc["words"]
                         if r["split"] == "test"),
        seed=doc["seed"],
    )


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(corpus_to_json(corpus) + "\n", encoding="utf-8")


def load_corpus(path: str | Path) -> Corpus:
    return corpus_from_json(Path(path).read_text(encoding="utf-8"))


def corpus_digest(corpus: Corpus) -> str:
    """sha256 over the canonical JSON form, for manifests."""
    blob = corpus_to_json(corpus).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def build_syllable_id_corpus(inventory: Inventory) -> Corpus:
    """Every enumerable syllable as a separate word to identify; no split.

    The "roots" are the syllables themselves, giving the identification
    head one unit per syllable.
    """
    syllables = enumerate_syllables(inventory)
    roots = tuple(Root(i, s.symbols) for i, s in enumerate(syllables))
    words = tuple(Word(r.symbols, r.id, ()) for r in roots)
    return Corpus(rule=Rule("syllable_id", ()), inventory_kind=inventory.kind,
                  roots=roots, words_train=words, words_test=(), seed=0)
