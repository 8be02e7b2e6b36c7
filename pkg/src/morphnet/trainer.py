"""Word-level training and end-of-word evaluation.

Targets per phone step: the phone-copy head is trained to reproduce the
current input (the boundary row included), while the identification
heads (root and one per inflectional category) are held at the word's
one-hot identity patterns for every step. A word is judged at its final
step: each identification head's output is assigned to the nearest
candidate target, ties to the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .morphogen import Corpus, Word
from .net import (
    HeadSpec,
    ModuleSpec,
    Network,
    NetworkSpec,
    TrainConfig,
    init_network,
    reset_context,
)
from .phonology import (
    FeatureTable,
    Inventory,
    build_inventory,
    encode_word,
)

ROOT_MODULE = "root_mod"
INFLECTION_MODULE = "infl_mod"


@dataclass(frozen=True)
class EvalResult:
    split: str
    n_words: int
    root_accuracy: float | None
    inflection_accuracy: Mapping[str, float]
    mean_error: float


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train: EvalResult
    test: EvalResult


def build_network_spec(corpus: Corpus, table: FeatureTable | None = None,
                       root_width: int = 15, inflection_width: int = 15,
                       init_range: float = 0.5) -> NetworkSpec:
    """Architecture for a corpus: one module per identification task.

    Word corpora get a root module and an inflection module plus the
    phone-copy head. Reduplication corpora get a single module driving
    one binary unit and nothing else. Syllable-identification corpora
    get a single module with the phone-copy and identification heads.
    """
    inventory = build_inventory(corpus.inventory_kind, table)
    f = inventory.width
    kind = corpus.rule.kind
    if kind.startswith("reduplication"):
        cat = corpus.rule.categories[0]
        return NetworkSpec(
            input_width=f,
            modules=(ModuleSpec(INFLECTION_MODULE, inflection_width),),
            heads=(HeadSpec(cat.name, 1, (INFLECTION_MODULE,)),),
            init_range=init_range,
        )
    if kind == "syllable_id":
        return NetworkSpec(
            input_width=f,
            modules=(ModuleSpec(ROOT_MODULE, root_width),),
            heads=(HeadSpec("phone_copy", f, (ROOT_MODULE,)),
                   HeadSpec("root", len(corpus.roots), (ROOT_MODULE,))),
            init_range=init_range,
        )
    heads = [HeadSpec("phone_copy", f, (ROOT_MODULE, INFLECTION_MODULE)),
             HeadSpec("root", len(corpus.roots), (ROOT_MODULE,))]
    for cat in corpus.rule.categories:
        width = 1 if cat.encoding == "unit" else len(cat.values)
        heads.append(HeadSpec(cat.name, width, (INFLECTION_MODULE,)))
    return NetworkSpec(
        input_width=f,
        modules=(ModuleSpec(ROOT_MODULE, root_width),
                 ModuleSpec(INFLECTION_MODULE, inflection_width)),
        heads=tuple(heads),
        init_range=init_range,
    )


def head_candidates(width: int) -> np.ndarray:
    """Target patterns a head's output is matched against.

    A single unit encodes a binary category as off/on; a wider head is
    localist with one unit per identity.
    """
    if width == 1:
        return np.array([[0.0], [1.0]])
    return np.eye(width)


def classify(output: np.ndarray, candidates: np.ndarray) -> int:
    """Index of the candidate nearest in Euclidean distance; ties low."""
    candidates = np.asarray(candidates, dtype=float)
    if candidates.ndim != 2 or candidates.shape[0] == 0:
        raise ValueError("need a non-empty 2-d candidate array")
    if candidates.shape[1] != np.shape(output)[0]:
        raise ValueError("candidate width does not match output width")
    d = ((candidates - np.asarray(output, dtype=float)) ** 2).sum(axis=1)
    return int(np.argmin(d))


def encode_input(inventory: Inventory, word: Word,
                 trailing_boundary: bool = False) -> np.ndarray:
    X = encode_word(inventory, word.surface)
    if trailing_boundary:
        X = np.vstack([X, np.zeros(inventory.width)])
    return X


def encode_targets(spec: NetworkSpec, corpus: Corpus, word: Word,
                   X: np.ndarray) -> np.ndarray:
    """Packed per-step target matrix for one word."""
    T = np.zeros((X.shape[0], spec.output_width))
    for head in spec.heads:
        s = spec.head_slice(head.name)
        if head.name == "phone_copy":
            T[:, s] = X
        elif head.name == "root":
            T[:, s.start + word.root_id] = 1.0
        else:
            idx = [c.name for c in corpus.rule.categories].index(head.name)
            value_id = word.inflection_ids[idx]
            if head.width == 1:
                T[:, s.start] = float(value_id)
            else:
                T[:, s.start + value_id] = 1.0
    return T


@dataclass(frozen=True)
class EncodedSplit:
    """One split's words as ready-to-run input/target matrices."""

    X: tuple[np.ndarray, ...]
    T: tuple[np.ndarray, ...]
    true_ids: Mapping[str, tuple[int, ...]]


def encode_split(spec: NetworkSpec, corpus: Corpus, words: Sequence[Word],
                 inventory: Inventory,
                 trailing_boundary: bool = False) -> EncodedSplit:
    X = tuple(encode_input(inventory, w, trailing_boundary) for w in words)
    T = tuple(encode_targets(spec, corpus, w, x) for w, x in zip(words, X))
    ids: dict[str, tuple[int, ...]] = {}
    for head in spec.heads:
        if head.name == "phone_copy":
            continue
        if head.name == "root":
            ids["root"] = tuple(w.root_id for w in words)
        else:
            idx = [c.name for c in corpus.rule.categories].index(head.name)
            ids[head.name] = tuple(w.inflection_ids[idx] for w in words)
    return EncodedSplit(X, T, ids)


def train_word(net: Network, word: Word, config: TrainConfig,
               inventory: Inventory, corpus: Corpus,
               trailing_boundary: bool = False) -> float:
    """Reset context, then one forward/backward pass per step of the word."""
    X = encode_input(inventory, word, trailing_boundary)
    T = encode_targets(net.spec, corpus, word, X)
    return train_encoded(net, X, T, config)


def train_encoded(net: Network, X: np.ndarray, T: np.ndarray,
                  config: TrainConfig) -> float:
    reset_context(net)
    return float(kernels.train_word(
        net.w_in, net.w_rec, net.w_out, net.b_h, net.b_out,
        net.m_rec, net.m_out, net.v_in, net.v_rec, net.v_out,
        net.vb_h, net.vb_out, net.ctx, X, T,
        config.learning_rate, config.momentum))


def evaluate_encoded(net: Network, split: EncodedSplit,
                     split_name: str) -> EvalResult:
    """Nearest-target accuracy at each word's final step; never trains."""
    spec = net.spec
    scratch = np.empty(spec.hidden_width)
    n = len(split.X)
    correct = {name: 0 for name in split.true_ids}
    candidates = {h.name: head_candidates(h.width) for h in spec.heads
                  if h.name in split.true_ids}
    err = 0.0
    for i in range(n):
        scratch[:] = 0.0
        Y = kernels.forward_word(net.w_in, net.w_rec, net.w_out, net.b_h,
                                 net.b_out, scratch, split.X[i])
        e = Y - split.T[i]
        err += 0.5 * float((e * e).sum())
        final = Y[-1]
        for name, ids in split.true_ids.items():
            got = classify(final[spec.head_slice(name)], candidates[name])
            if got == ids[i]:
                correct[name] += 1
    acc = {name: (correct[name] / n if n else 0.0) for name in correct}
    return EvalResult(
        split=split_name,
        n_words=n,
        root_accuracy=acc.pop("root", None),
        inflection_accuracy=acc,
        mean_error=err / n if n else 0.0,
    )


def evaluate(net: Network, words: Sequence[Word], corpus: Corpus,
             inventory: Inventory, split_name: str = "test",
             trailing_boundary: bool = False) -> EvalResult:
    split = encode_split(net.spec, corpus, words, inventory,
                         trailing_boundary)
    return evaluate_encoded(net, split, split_name)


def train(corpus: Corpus, spec: NetworkSpec, config: TrainConfig,
          table: FeatureTable | None = None, net: Network | None = None,
          trailing_boundary: bool = False,
          ) -> tuple[Network, list[EpochRecord]]:
    """Online training over shuffled epochs with per-epoch evaluation.

    ``config.seed`` drives the shuffle stream; the network is created
    from it too unless one is passed in (replicates differing in their
    initial weights hand separately initialized networks here).
    """
    inventory = build_inventory(corpus.inventory_kind, table)
    if net is None:
        net = init_network(spec, config.seed)
    train_split = encode_split(spec, corpus, corpus.words_train, inventory,
                               trailing_boundary)
    test_split = encode_split(spec, corpus, corpus.words_test, inventory,
                              trailing_boundary)
    rng = np.random.default_rng(config.seed)
    history: list[EpochRecord] = []
    for epoch in range(1, config.epochs + 1):
        for i in rng.permutation(len(train_split.X)):
            reset_context(net)
            kernels.train_word(
                net.w_in, net.w_rec, net.w_out, net.b_h, net.b_out,
                net.m_rec, net.m_out, net.v_in, net.v_rec, net.v_out,
                net.vb_h, net.vb_out, net.ctx, train_split.X[i],
                train_split.T[i], config.learning_rate, config.momentum)
        history.append(EpochRecord(
            epoch=epoch,
            train=evaluate_encoded(net, train_split, "train"),
            test=evaluate_encoded(net, test_split, "test"),
        ))
    return net, history
