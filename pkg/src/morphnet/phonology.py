"""Phone inventories and the phonetic-feature encoding of phone sequences.

Every experiment shares one fixed table of ten binary phonetic features.
Symbols are single characters except nasal vowels, which are written
ASCII-safe as the plain vowel plus a tilde (``"u~"``).  The word boundary
is a pseudo-phone encoded as the all-zero vector; no real phone may have
an all-zero feature row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

FEATURE_TABLE_VERSION = 1

#: Symbol used for the word/syllable boundary pseudo-phone.
BOUNDARY = "#"

#: The five plain vowels; nasal vowels are these plus "~".
VOWEL_BASES = ("i", "e", "u", "o", "a")

#: Legal syllable codas in the reduplication language.
REDUPLICATION_CODAS = ("n", "s")

NASALIZE_MARK = "~"

_STANDARD_CONSONANTS = ("p", "b", "f", "v", "m", "t", "d", "s", "z", "n",
                        "k", "g", "x", "ɣ")
_REDUPLICATION_ONSETS = _STANDARD_CONSONANTS + ("ŋ",)
_TEMPLATE_CONSONANTS = ("p", "b", "m", "t", "d", "s", "n", "k", "g")
_TEMPLATE_CONSONANTS_8 = ("p", "b", "m", "t", "d", "n", "k", "g")
_NASAL_VOWELS = tuple(v + NASALIZE_MARK for v in VOWEL_BASES)

INVENTORY_KINDS = ("standard", "mutation", "reduplication", "template_cc",
                   "template_cc8")


def is_vowel(symbol: str) -> bool:
    """True for plain and nasal vowels."""
    return symbol[:1] in VOWEL_BASES


def is_consonant(symbol: str) -> bool:
    return not is_vowel(symbol)


def nasal_counterpart(vowel: str) -> str:
    if vowel not in VOWEL_BASES:
        raise ValueError(f"not a plain vowel: {vowel!r}")
    return vowel + NASALIZE_MARK


def parse_surface(surface: str) -> tuple[str, ...]:
    """Split a serialized surface string into phone symbols.

    The tilde always attaches to the preceding vowel, so the scan is
    unambiguous: ``"vibu~n"`` -> ``("v", "i", "b", "u~", "n")``.
    """
    symbols: list[str] = []
    for ch in surface:
        if ch == NASALIZE_MARK:
            if not symbols or not is_vowel(symbols[-1]):
                raise ValueError(f"stray {NASALIZE_MARK!r} in {surface!r}")
            symbols[-1] += ch
        else:
            symbols.append(ch)
    return tuple(symbols)


@dataclass(frozen=True)
class FeatureTable:
    """Ordered feature names plus one row of values in [0, 1] per phone."""

    features: tuple[str, ...]
    rows: dict[str, tuple[float, ...]]
    version: int = FEATURE_TABLE_VERSION

    def __post_init__(self) -> None:
        width = len(self.features)
        seen: dict[tuple[float, ...], str] = {}
        for symbol, row in self.rows.items():
            if len(row) != width:
                raise ValueError(f"row for {symbol!r} has length {len(row)}, "
                                 f"expected {width}")
            if any(not 0.0 <= v <= 1.0 for v in row):
                raise ValueError(f"feature values for {symbol!r} outside [0,1]")
            if not any(row):
                raise ValueError(f"all-zero row for {symbol!r} collides with "
                                 "the boundary encoding")
            if row in seen:
                raise ValueError(f"{symbol!r} and {seen[row]!r} share a "
                                 "feature vector")
            seen[row] = symbol

    @property
    def width(self) -> int:
        return len(self.features)

    def vector(self, symbol: str) -> np.ndarray:
        try:
            return np.asarray(self.rows[symbol], dtype=np.float64)
        except KeyError:
            raise KeyError(f"no feature row for phone {symbol!r}") from None

    def feature_index(self, name: str) -> int:
        return self.features.index(name)

    @classmethod
    def from_json(cls, document: dict) -> "FeatureTable":
        return cls(features=tuple(document["features"]),
                   rows={k: tuple(v) for k, v in document["phones"].items()},
                   version=int(document["version"]))

    def to_json(self) -> dict:
        return {"version": self.version,
                "features": list(self.features),
                "phones": {k: list(v) for k, v in self.rows.items()}}


def load_feature_table(path: str | Path | None = None) -> FeatureTable:
    """Load a feature table JSON file; default is the table shipped in-package."""
    if path is None:
        text = resources.files("morphnet").joinpath("data/features.json") \
                        .read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return FeatureTable.from_json(json.loads(text))


@dataclass(frozen=True)
class Inventory:
    """The phone set of one experiment family plus its feature table."""

    kind: str
    consonants: tuple[str, ...]
    vowels: tuple[str, ...]
    nasal_vowels: tuple[str, ...]
    table: FeatureTable = field(repr=False)

    def __post_init__(self) -> None:
        groups = (set(self.consonants), set(self.vowels),
                  set(self.nasal_vowels))
        total = sum(len(g) for g in groups)
        if len(set().union(*groups)) != total:
            raise ValueError("consonants, vowels and nasal vowels overlap")
        for symbol in self.phones:
            if symbol not in self.table.rows:
                raise ValueError(f"phone {symbol!r} missing from feature table")

    @property
    def phones(self) -> tuple[str, ...]:
        return self.consonants + self.vowels + self.nasal_vowels

    @property
    def width(self) -> int:
        return self.table.width

    def __contains__(self, symbol: str) -> bool:
        return symbol in self.consonants or symbol in self.vowels \
            or symbol in self.nasal_vowels


def build_inventory(kind: str, table: FeatureTable | None = None) -> Inventory:
    """Construct the phone inventory for one of the experiment families.

    standard        14 consonants + 5 vowels (19 phones)
    mutation        standard plus the 5 nasal vowels (24 phones)
    reduplication   15 onset consonants + 5 vowels; codas restricted to {n, s}
    template_cc     9 consonants {p,b,m,t,d,s,n,k,g} + the vowel a
    template_cc8    the 8-consonant subset (drops s) used alongside template_cc
    """
    if table is None:
        table = load_feature_table()
    if kind == "standard":
        return Inventory(kind, _STANDARD_CONSONANTS, VOWEL_BASES, (), table)
    if kind == "mutation":
        return Inventory(kind, _STANDARD_CONSONANTS, VOWEL_BASES,
                         _NASAL_VOWELS, table)
    if kind == "reduplication":
        return Inventory(kind, _REDUPLICATION_ONSETS, VOWEL_BASES, (), table)
    if kind == "template_cc":
        return Inventory(kind, _TEMPLATE_CONSONANTS, ("a",), (), table)
    if kind == "template_cc8":
        return Inventory(kind, _TEMPLATE_CONSONANTS_8, ("a",), (), table)
    raise ValueError(f"unknown inventory kind {kind!r}; expected one of "
                     f"{INVENTORY_KINDS}")


def encode_phone(inventory: Inventory, symbol: str) -> np.ndarray:
    """Feature vector for one phone; the boundary maps to all zeros."""
    if symbol == BOUNDARY:
        return np.zeros(inventory.width, dtype=np.float64)
    if symbol not in inventory:
        raise KeyError(f"phone {symbol!r} not in {inventory.kind!r} inventory")
    return inventory.table.vector(symbol)


def encode_word(inventory: Inventory,
                symbols: Iterable[str] | str) -> np.ndarray:
    """Encode a phone sequence as rows, prefixed with the boundary vector."""
    if isinstance(symbols, str):
        symbols = parse_surface(symbols)
    rows = [np.zeros(inventory.width, dtype=np.float64)]
    rows.extend(encode_phone(inventory, s) for s in symbols)
    return np.stack(rows)


def nasalize(inventory: Inventory, vowel: str) -> str:
    """The nasal counterpart of a plain vowel, e.g. u -> u~."""
    nasal = nasal_counterpart(vowel)
    if nasal not in inventory.nasal_vowels:
        raise ValueError(f"{inventory.kind!r} inventory has no nasal vowels")
    return nasal


def denasalize(inventory: Inventory, vowel: str) -> str:
    """Inverse of :func:`nasalize`."""
    if vowel not in inventory.nasal_vowels:
        raise ValueError(f"not a nasal vowel: {vowel!r}")
    return vowel[:-1]


def root_pattern(symbols: Sequence[str]) -> str:
    """CV skeleton of a symbol sequence, e.g. ("t","a","m") -> "CVC"."""
    return "".join("V" if is_vowel(s) else "C" for s in symbols)
