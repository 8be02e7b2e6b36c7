"""Principal-component views of hidden-module trajectories.

A trained network's hidden module passes through a path in state space
as a word's phones are presented. Projecting those paths onto the first
principal components of the recorded states makes the root-consonant
structure visible: states recorded while the same root consonant is on
the input cluster together across the different forms of the root.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .morphogen import Corpus, Root, Rule, Word, inflect
from .net import Network
from .phonology import BOUNDARY, Inventory, encode_word, is_consonant


@dataclass(frozen=True)
class StateTag:
    word_index: int
    word: str
    step: int
    phone: str


@dataclass(frozen=True)
class StateMatrix:
    states: np.ndarray
    tags: tuple[StateTag, ...]

    def __post_init__(self) -> None:
        if self.states.ndim != 2 or self.states.shape[0] != len(self.tags):
            raise ValueError("one tag per state row required")
        keys = {(t.word_index, t.step) for t in self.tags}
        if len(keys) != len(self.tags):
            raise ValueError("duplicate (word, step) tags")

    @property
    def width(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class PCAModel:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def project(self, states: np.ndarray, k: int | None = None) -> np.ndarray:
        comps = self.components if k is None else self.components[:k]
        return (np.asarray(states, dtype=float) - self.mean) @ comps.T

    def variance_share(self, k: int) -> float:
        total = float(self.explained_variance.sum())
        return float(self.explained_variance[:k].sum()) / total


@dataclass(frozen=True)
class Trajectory:
    word: str
    phones: tuple[str, ...]
    points: np.ndarray


def collect_states(net: Network, words: Sequence[Word], module: str,
                   inventory: Inventory) -> StateMatrix:
    """Hidden states of one module for every step of every word.

    The context is reset per word, and the state after each presentation
    is recorded, the leading boundary included.
    """
    sl = net.spec.module_slice(module)
    rows = []
    tags = []
    scratch = np.empty(net.spec.hidden_width)
    for w_idx, word in enumerate(words):
        X = encode_word(inventory, word.surface)
        scratch[:] = 0.0
        H = kernels.hidden_states(net.w_in, net.w_rec, net.b_h, scratch, X)
        symbols = (BOUNDARY,) + tuple(word.surface)
        for step in range(H.shape[0]):
            rows.append(H[step, sl])
            tags.append(StateTag(w_idx, word.text, step, symbols[step]))
    return StateMatrix(np.array(rows), tuple(tags))


def fit_pca(states: StateMatrix | np.ndarray) -> PCAModel:
    """Eigendecomposition of the sample covariance of the rows.

    Components are ranked by explained variance; each is oriented so its
    largest-magnitude coefficient is positive, pinning the sign.
    """
    X = states.states if isinstance(states, StateMatrix) else \
        np.asarray(states, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least two state rows")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (X.shape[0] - 1)
    if not cov.any():
        raise ValueError("states have zero variance")
    values, vectors = np.linalg.eigh(cov)
    order = np.argsort(values)[::-1]
    values = values[order]
    components = vectors[:, order].T
    for i, comp in enumerate(components):
        if comp[np.argmax(np.abs(comp))] < 0:
            components[i] = -comp
    return PCAModel(mean=mean, components=components,
                    explained_variance=np.clip(values, 0.0, None))


def project_trajectories(net: Network, words: Sequence[Word],
                         pca: PCAModel, k: int, module: str,
                         inventory: Inventory) -> list[Trajectory]:
    """Paths of the given words through the first k components."""
    if k > pca.components.shape[0]:
        raise ValueError(f"k={k} exceeds {pca.components.shape[0]} "
                         "components")
    out = []
    for word in words:
        matrix = collect_states(net, [word], module, inventory)
        out.append(Trajectory(
            word=word.text,
            phones=tuple(t.phone for t in matrix.tags),
            points=pca.project(matrix.states, k),
        ))
    return out


def paradigm_words(root: Root, rule: Rule) -> list[Word]:
    """All inflected forms of one root under a single-category rule."""
    (category,) = rule.categories
    return [Word(inflect(root, rule, (value,)), root.id, (i,))
            for i, value in enumerate(category.values)]


@dataclass(frozen=True)
class ClusterStat:
    root: str
    within: float
    between: float

    @property
    def clustered(self) -> bool:
        return self.within < self.between


def consonant_cluster_stat(net: Network, root: Root, rule: Rule,
                           pca: PCAModel, module: str,
                           inventory: Inventory, k: int = 2) -> ClusterStat:
    """Within- vs between-consonant spread over one root's paradigm.

    Projects all forms of the root, keeps the states recorded at root
    consonants, and compares the mean pairwise distance among states of
    the same consonant against that among states of different
    consonants, in the first k components.
    """
    trajectories = project_trajectories(net, paradigm_words(root, rule),
                                        pca, k, module, inventory)
    labels: list[str] = []
    points: list[np.ndarray] = []
    root_consonants = {s for s in root.symbols if is_consonant(s)}
    for traj in trajectories:
        for phone, point in zip(traj.phones, traj.points):
            if phone in root_consonants:
                labels.append(phone)
                points.append(point)
    try:
        within, between = pair_spread(labels, points)
    except ValueError:
        raise ValueError(f"root {root.surface!r} yields no "
                         "within/between consonant pairs") from None
    return ClusterStat(root=root.surface, within=within, between=between)


def pair_spread(labels: Sequence[str],
                points: Sequence[np.ndarray]) -> tuple[float, float]:
    """Mean pairwise distance among same-label and different-label points."""
    within, between = [], []
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            d = float(np.linalg.norm(np.asarray(points[i])
                                     - np.asarray(points[j])))
            (within if labels[i] == labels[j] else between).append(d)
    if not within or not between:
        raise ValueError("need both same-label and different-label pairs")
    return float(np.mean(within)), float(np.mean(between))


def has_consonant_contrast(root: Root) -> bool:
    """True when the cluster statistic is defined for the root."""
    consonants = [s for s in root.symbols if is_consonant(s)]
    return len(set(consonants)) >= 2 and len(consonants) >= 2
