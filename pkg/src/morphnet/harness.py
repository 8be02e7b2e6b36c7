"""Experiment suites: build corpora, train replicates, write metrics.

Four suites cover the studies the package reproduces:

* ``figure2``      -- ten morphological rules, ten nets each
* ``template3``    -- three-tense consonant-template rule
* ``constraints``  -- favored vs. disfavored three-tense templates
* ``reduplication``-- sequential nets vs. feedforward nets over static
                      syllable representations, for onset and rime matching

Every random choice descends from one master seed through a documented
hash, so a suite re-run writes byte-identical CSV output.
"""
from __future__ import annotations

import csv
import hashlib
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import morphogen
from .morphogen import (
    Corpus,
    GENERAL_RULE_KINDS,
    SyllablePairCorpus,
    build_corpus,
    build_reduplication_corpus,
    build_syllable_id_corpus,
    build_syllable_pair_corpus,
    corpus_digest,
    corpus_to_json,
    enumerate_syllables,
    generate_roots,
    make_rule,
)
from .net import (
    HeadSpec,
    ModuleSpec,
    Network,
    NetworkSpec,
    TrainConfig,
    init_network,
    model_from_json,
    model_to_json,
)
from .phonology import Inventory, build_inventory
from .trainer import (
    ROOT_MODULE,
    EncodedSplit,
    EvalResult,
    build_network_spec,
    encode_input,
    evaluate,
    evaluate_encoded,
    train,
    train_encoded,
)
from . import kernels

SUITES = ("figure2", "template3", "constraints", "reduplication")
DEFAULT_MASTER_SEED = 7
DEFAULT_REPLICATES = 10

RESULTS_NAME = "results.csv"
SUMMARY_NAME = "summary.csv"
MANIFEST_NAME = "manifest.json"
MANIFEST_FORMAT_VERSION = 1

# one value column; metric names the quantity so heads of any arity fit
RESULTS_COLUMNS = ("suite", "rule", "cell", "replicate", "epoch", "split",
                   "metric", "value")
SUMMARY_COLUMNS = ("suite", "rule", "cell", "metric", "mean", "stddev", "n")

FF_HIDDEN_DEFAULT = 20
FF_EPOCHS_DEFAULT = 150

# per-suite training knobs; widths and rates settled by calibration runs
WORD_SUITE_CONFIG = {
    "figure2": dict(learning_rate=0.1, momentum=0.9, init_range=0.5,
                    root_width=15, inflection_width=15),
    "template3": dict(learning_rate=0.4, momentum=0.6, init_range=0.5,
                      root_width=15, inflection_width=30),
    "constraints": dict(learning_rate=0.4, momentum=0.6, init_range=0.5,
                        root_width=15, inflection_width=30),
}
SEQ_CONFIG = dict(learning_rate=0.1, momentum=0.9, init_range=0.5, epochs=150)
SYLLABLE_NET_CONFIG = dict(learning_rate=0.2, momentum=0.2, init_range=0.5,
                           epochs=650, hidden_width=30)
REDUP_TASKS = ("onset", "rime")
PAIRS_TRAIN = 200
PAIRS_TEST = 50


def derive_seed(master_seed: int, *parts: object) -> int:
    """Stable sub-seed: sha256 over the master seed and the path parts."""
    text = "|".join(str(p) for p in (master_seed, *parts))
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _rule_epochs(kind: str) -> int:
    return 100 if len(make_rule(kind).categories) > 1 else 150


def _figure2_roots(kind: str, inventory: Inventory, seed: int):
    if kind == "template2":
        patterns = ["CVCVC"] * 30
    else:
        patterns = ["CVC"] * 15 + ["CVCVC"] * 15
    return generate_roots(30, patterns, inventory, seed)


def _word_suite_corpora(suite: str, master_seed: int) -> dict[str, Corpus]:
    """The (rule -> corpus) table for one of the three word suites."""
    if suite == "figure2":
        out = {}
        for kind in GENERAL_RULE_KINDS:
            inv = build_inventory("mutation" if kind == "mutation"
                                  else "standard")
            roots = _figure2_roots(kind, inv,
                                   derive_seed(master_seed, suite, kind,
                                               "roots"))
            out[kind] = build_corpus(make_rule(kind), roots,
                                     seed=derive_seed(master_seed, suite,
                                                      kind, "split"),
                                     inventory_kind=inv.kind)
        return out
    if suite in ("template3", "constraints"):
        inv = build_inventory("template_cc")
        # shared roots and split: the favored/disfavored comparison is
        # matched pair by pair
        roots = generate_roots(30, ["CCC"] * 30, inv,
                               derive_seed(master_seed, suite, "roots"))
        split_seed = derive_seed(master_seed, suite, "split")
        kinds = (("template3_favored",) if suite == "template3"
                 else ("template3_favored", "template3_disfavored"))
        return {kind: build_corpus(make_rule(kind), roots, seed=split_seed,
                                   inventory_kind=inv.kind)
                for kind in kinds}
    raise ValueError(f"{suite!r} is not a word suite")


@dataclass(frozen=True)
class SuiteSpec:
    """What to run: a suite name, replicate count, and the master seed."""

    suite: str
    replicates: int = DEFAULT_REPLICATES
    master_seed: int = DEFAULT_MASTER_SEED
    ff_hidden: int = FF_HIDDEN_DEFAULT
    ff_epochs: int = FF_EPOCHS_DEFAULT

    def __post_init__(self) -> None:
        if self.suite not in SUITES:
            raise ValueError(f"unknown suite {self.suite!r}; "
                             f"choose from {SUITES}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.ff_hidden < 1 or self.ff_epochs < 1:
            raise ValueError("feedforward net needs positive size and epochs")


Row = tuple[str, str, str, int, int, str, str, float]


@dataclass(frozen=True)
class CellFailure:
    rule: str
    cell: str
    replicate: int
    error: str


@dataclass
class RunResult:
    """All rows of one suite run plus per-cell models and failures."""

    spec: SuiteSpec
    rows: tuple[Row, ...]
    models: Mapping[tuple[str, str, int], Network]
    failures: tuple[CellFailure, ...] = ()
    corpora: Mapping[str, Corpus] = field(default_factory=dict)

    @property
    def aggregates(self) -> dict[tuple[str, str, str], tuple[float, float, int]]:
        return aggregate_rows(self.rows)


def _history_rows(suite: str, rule: str, cell: str, replicate: int,
                  history) -> list[Row]:
    rows: list[Row] = []
    for rec in history:
        for result in (rec.train, rec.test):
            rows.extend(_eval_rows(suite, rule, cell, replicate,
                                   rec.epoch, result))
    return rows


def _eval_rows(suite: str, rule: str, cell: str, replicate: int,
               epoch: int, result: EvalResult) -> list[Row]:
    if result.n_words == 0:
        return []
    rows = []
    if result.root_accuracy is not None:
        rows.append((suite, rule, cell, replicate, epoch, result.split,
                     "root_acc", result.root_accuracy))
    for name in sorted(result.inflection_accuracy):
        rows.append((suite, rule, cell, replicate, epoch, result.split,
                     f"{name}_acc", result.inflection_accuracy[name]))
    rows.append((suite, rule, cell, replicate, epoch, result.split,
                 "mean_error", result.mean_error))
    return rows


def aggregate_rows(rows: Sequence[Row]) -> dict[tuple[str, str, str],
                                                tuple[float, float, int]]:
    """Mean/stddev over replicates of each final-epoch test metric.

    Keyed by (rule, cell, metric); stddev is the sample statistic, 0.0
    for a single replicate.
    """
    last_epoch: dict[tuple[str, str, int], int] = {}
    for _, rule, cell, rep, epoch, _, _, _ in rows:
        key = (rule, cell, rep)
        last_epoch[key] = max(epoch, last_epoch.get(key, 0))
    values: dict[tuple[str, str, str], list[float]] = {}
    for _, rule, cell, rep, epoch, split, metric, value in rows:
        if split != "test" or epoch != last_epoch[(rule, cell, rep)]:
            continue
        values.setdefault((rule, cell, metric), []).append(value)
    out = {}
    for key, vals in values.items():
        dev = statistics.stdev(vals) if len(vals) > 1 else 0.0
        out[key] = (statistics.fmean(vals), dev, len(vals))
    return out


# -- reduplication building blocks -------------------------------------

def _syllable_net_spec(hidden_width: int, init_range: float,
                       corpus: Corpus) -> NetworkSpec:
    return build_network_spec(corpus, root_width=hidden_width,
                              init_range=init_range)


def train_syllable_net(net_seed: int, shuffle_seed: int,
                       inventory: Inventory) -> tuple[Network, list]:
    """Train the syllable-identification net on every syllable."""
    cfg = SYLLABLE_NET_CONFIG
    corpus = build_syllable_id_corpus(inventory)
    spec = _syllable_net_spec(cfg["hidden_width"], cfg["init_range"], corpus)
    net = init_network(spec, net_seed)
    config = TrainConfig(epochs=cfg["epochs"], seed=shuffle_seed,
                         learning_rate=cfg["learning_rate"],
                         momentum=cfg["momentum"])
    net, history = train(corpus, spec, config, net=net,
                         trailing_boundary=True)
    return net, history


def build_static_syllable_representations(
        net: Network, inventory: Inventory) -> dict[tuple[str, ...], np.ndarray]:
    """Final hidden state of syllable+boundary, for every syllable.

    The net must be a syllable-identification net (single module, phone
    copy plus identity head over the full syllable set).
    """
    syllables = enumerate_syllables(inventory)
    spec = net.spec
    head_names = {h.name for h in spec.heads}
    if (len(spec.modules) != 1 or head_names != {"phone_copy", "root"}
            or spec.head_slice("root").stop - spec.head_slice("root").start
            != len(syllables)
            or spec.input_width != inventory.width):
        raise ValueError("expected a trained syllable-identification net "
                         "over this inventory")
    sl = spec.module_slice(spec.modules[0].name)
    scratch = np.empty(spec.hidden_width)
    corpus = build_syllable_id_corpus(inventory)
    reps = {}
    for word, syllable in zip(corpus.words, syllables):
        X = encode_input(inventory, word, trailing_boundary=True)
        H = kernels.hidden_states(net.w_in, net.w_rec, net.b_h, scratch, X)
        reps[syllable.symbols] = H[-1, sl].copy()
    return reps


def _pair_split(head: str, reps: Mapping[tuple[str, ...], np.ndarray],
                pairs) -> EncodedSplit:
    X = tuple(np.concatenate([reps[p.first.symbols],
                              reps[p.second.symbols]])[None, :]
              for p in pairs)
    T = tuple(np.array([[float(p.label)]]) for p in pairs)
    return EncodedSplit(X=X, T=T,
                        true_ids={head: tuple(p.label for p in pairs)})


def _train_ff(task: str, reps: Mapping[tuple[str, ...], np.ndarray],
              pair_corpus: SyllablePairCorpus, hidden: int, epochs: int,
              net_seed: int, shuffle_seed: int,
              ) -> tuple[Network, EvalResult, EvalResult]:
    rep_width = len(next(iter(reps.values())))
    head = f"same_{task}"
    spec = NetworkSpec(input_width=2 * rep_width,
                       modules=(ModuleSpec("pair_mod", hidden),),
                       heads=(HeadSpec(head, 1, ("pair_mod",)),))
    fit = _pair_split(head, reps, pair_corpus.pairs_train)
    held = _pair_split(head, reps, pair_corpus.pairs_test)
    net = init_network(spec, net_seed)
    config = TrainConfig(epochs=epochs, seed=shuffle_seed)
    rng = np.random.default_rng(config.seed)
    for _ in range(config.epochs):
        for i in rng.permutation(len(fit.X)):
            train_encoded(net, fit.X[i], fit.T[i], config)
    return (net, evaluate_encoded(net, fit, "train"),
            evaluate_encoded(net, held, "test"))


def run_feedforward_pair_task(
        task: str, reps: Mapping[tuple[str, ...], np.ndarray],
        pair_corpus: SyllablePairCorpus, *, hidden: int = FF_HIDDEN_DEFAULT,
        epochs: int = FF_EPOCHS_DEFAULT, net_seed: int = 0,
        shuffle_seed: int = 0) -> EvalResult:
    """Train a feedforward pair net on static reps; test-set accuracy."""
    missing = sorted(
        syllable.symbols
        for pairs in (pair_corpus.pairs_train, pair_corpus.pairs_test)
        for pair in pairs for syllable in (pair.first, pair.second)
        if syllable.symbols not in reps)
    if missing:
        raise ValueError(f"representations missing for {missing[:3]}")
    _, _, result = _train_ff(task, reps, pair_corpus, hidden, epochs,
                             net_seed, shuffle_seed)
    return result


# -- cell runners -------------------------------------------------------

def _run_word_cell(suite: str, rule: str, corpus: Corpus,
                   replicate: int, master_seed: int,
                   ) -> tuple[list[Row], Network]:
    cfg = WORD_SUITE_CONFIG[suite]
    spec = build_network_spec(corpus, root_width=cfg["root_width"],
                              inflection_width=cfg["inflection_width"],
                              init_range=cfg["init_range"])
    net = init_network(spec, derive_seed(master_seed, suite, rule,
                                         replicate, "net"))
    config = TrainConfig(epochs=_rule_epochs(rule),
                         seed=derive_seed(master_seed, suite, rule,
                                          replicate, "shuffle"),
                         learning_rate=cfg["learning_rate"],
                         momentum=cfg["momentum"])
    net, history = train(corpus, spec, config, net=net)
    return _history_rows(suite, rule, "srn", replicate, history), net


def _run_seq_cell(task: str, corpus: Corpus, replicate: int,
                  master_seed: int) -> tuple[list[Row], Network]:
    cfg = SEQ_CONFIG
    spec = build_network_spec(corpus, init_range=cfg["init_range"])
    net = init_network(spec, derive_seed(master_seed, "reduplication", task,
                                         replicate, "seq_net"))
    config = TrainConfig(epochs=cfg["epochs"],
                         seed=derive_seed(master_seed, "reduplication", task,
                                          replicate, "seq_shuffle"),
                         learning_rate=cfg["learning_rate"],
                         momentum=cfg["momentum"])
    net, history = train(corpus, spec, config, net=net)
    return _history_rows("reduplication", task, "seq", replicate,
                         history), net


def _run_reduplication_replicate(spec: SuiteSpec, replicate: int,
                                 inventory: Inventory,
                                 pair_corpora: Mapping[str, SyllablePairCorpus],
                                 word_corpora: Mapping[str, Corpus],
                                 ) -> tuple[list[Row],
                                            dict[tuple[str, str, int], Network]]:
    master = spec.master_seed
    rows: list[Row] = []
    models: dict[tuple[str, str, int], Network] = {}

    syll_net, syll_history = train_syllable_net(
        derive_seed(master, "reduplication", "syllables", replicate, "net"),
        derive_seed(master, "reduplication", "syllables", replicate,
                    "shuffle"),
        inventory)
    models[("syllables", "idnet", replicate)] = syll_net
    last = syll_history[-1]
    rows.extend(_eval_rows("reduplication", "syllables", "idnet", replicate,
                           last.epoch, last.train))
    reps = build_static_syllable_representations(syll_net, inventory)

    for task in REDUP_TASKS:
        seq_rows, seq_net = _run_seq_cell(task, word_corpora[task],
                                          replicate, master)
        rows.extend(seq_rows)
        models[(task, "seq", replicate)] = seq_net

        ff_net, ff_train, ff_test = _train_ff(
            task, reps, pair_corpora[task], spec.ff_hidden, spec.ff_epochs,
            derive_seed(master, "reduplication", task, replicate, "ff_net"),
            derive_seed(master, "reduplication", task, replicate,
                        "ff_shuffle"))
        models[(task, "ff", replicate)] = ff_net
        for result in (ff_train, ff_test):
            rows.extend(_eval_rows("reduplication", task, "ff", replicate,
                                   spec.ff_epochs, result))
    return rows, models


# -- suite driver -------------------------------------------------------

def _word_suite_cells(spec: SuiteSpec) -> list[tuple]:
    corpora = _word_suite_corpora(spec.suite, spec.master_seed)
    return [(spec.suite, rule, corpora[rule], rep, spec.master_seed)
            for rule in corpora
            for rep in range(1, spec.replicates + 1)]


def _word_cell_worker(args: tuple) -> tuple[tuple[str, str, int], list[Row],
                                            str | None, str | None]:
    suite, rule, corpus, rep, master = args
    try:
        rows, net = _run_word_cell(suite, rule, corpus, rep, master)
    except Exception as exc:  # noqa: BLE001 - cell containment
        return (rule, "srn", rep), [], None, str(exc)
    net_json = model_to_json(net, _provenance(suite, rule, "srn", rep,
                                              master))
    return (rule, "srn", rep), rows, net_json, None


def _provenance(suite: str, rule: str, cell: str, replicate: int,
                master_seed: int) -> dict:
    return {"suite": suite, "rule": rule, "cell": cell,
            "replicate": replicate, "master_seed": master_seed}


def run_suite(spec: SuiteSpec, out_dir: str | Path | None = None,
              jobs: int = 1) -> RunResult:
    """Run every cell of one suite; optionally write the artifact tree.

    A failing cell is recorded and skipped; the rest of the suite still
    runs. Results are identical for any ``jobs`` value.
    """
    rows: list[Row] = []
    models: dict[tuple[str, str, int], Network] = {}
    failures: list[CellFailure] = []
    corpora: dict[str, Corpus] = {}

    if spec.suite == "reduplication":
        inventory = build_inventory("reduplication")
        pair_corpora = {
            task: build_syllable_pair_corpus(
                task, PAIRS_TRAIN, PAIRS_TEST, inventory,
                derive_seed(spec.master_seed, "reduplication", task, "pairs"))
            for task in REDUP_TASKS}
        word_corpora = {
            task: build_reduplication_corpus(
                task, PAIRS_TRAIN, PAIRS_TEST, inventory,
                derive_seed(spec.master_seed, "reduplication", task, "pairs"))
            for task in REDUP_TASKS}
        corpora.update({f"{task}_words": word_corpora[task]
                        for task in REDUP_TASKS})
        corpora["syllables"] = build_syllable_id_corpus(inventory)
        for rep in range(1, spec.replicates + 1):
            try:
                rep_rows, rep_models = _run_reduplication_replicate(
                    spec, rep, inventory, pair_corpora, word_corpora)
            except Exception as exc:  # noqa: BLE001 - cell containment
                for task in REDUP_TASKS:
                    failures.append(CellFailure(task, "seq+ff", rep,
                                                str(exc)))
                continue
            rows.extend(rep_rows)
            models.update(rep_models)
    else:
        cells = _word_suite_cells(spec)
        corpora.update({rule: corpus for _, rule, corpus, rep, _ in cells
                        if rep == 1})
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                outcomes = list(pool.map(_word_cell_worker, cells))
        else:
            outcomes = [_word_cell_worker(cell) for cell in cells]
        for key, cell_rows, net_json, error in outcomes:
            if error is not None:
                failures.append(CellFailure(key[0], key[1], key[2], error))
                continue
            rows.extend(cell_rows)
            models[key], _ = model_from_json(net_json)

    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3], r[4], r[5], r[6]))
    result = RunResult(spec=spec, rows=tuple(rows), models=models,
                       failures=tuple(failures), corpora=corpora)
    if out_dir is not None:
        write_artifacts(result, Path(out_dir))
    return result


# -- artifact writers ---------------------------------------------------

def _format_value(value: float) -> str:
    return f"{value:.6f}"


def write_results_csv(rows: Sequence[Row], path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_COLUMNS)
        for suite, rule, cell, rep, epoch, split, metric, value in rows:
            writer.writerow([suite, rule, cell, rep, epoch, split, metric,
                             _format_value(value)])


def write_summary_csv(rows: Sequence[Row], suite: str, path: Path) -> None:
    aggregates = aggregate_rows(rows)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for (rule, cell, metric) in sorted(aggregates):
            mean, stddev, n = aggregates[(rule, cell, metric)]
            writer.writerow([suite, rule, cell, metric, _format_value(mean),
                             _format_value(stddev), n])


def write_artifacts(result: RunResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_results_csv(result.rows, out_dir / RESULTS_NAME)
    write_summary_csv(result.rows, result.spec.suite,
                      out_dir / SUMMARY_NAME)

    corpus_dir = out_dir / "corpora"
    corpus_dir.mkdir(exist_ok=True)
    corpus_files = {}
    for name, corpus in sorted(result.corpora.items()):
        rel = f"corpora/{name}.json"
        (out_dir / rel).write_text(corpus_to_json(corpus))
        corpus_files[name] = {"path": rel, "digest": corpus_digest(corpus)}

    model_dir = out_dir / "models"
    model_dir.mkdir(exist_ok=True)
    model_files = {}
    for (rule, cell, rep), net in sorted(result.models.items()):
        rel = f"models/{rule}.{cell}.r{rep:02d}.json"
        (out_dir / rel).write_text(model_to_json(net, _provenance(
            result.spec.suite, rule, cell, rep, result.spec.master_seed)))
        model_files[f"{rule}.{cell}.r{rep:02d}"] = rel

    spec = result.spec
    manifest = {
        "format": MANIFEST_FORMAT_VERSION,
        "suite": spec.suite,
        "master_seed": spec.master_seed,
        "replicates": spec.replicates,
        "ff_hidden": spec.ff_hidden,
        "ff_epochs": spec.ff_epochs,
        "config": (WORD_SUITE_CONFIG.get(spec.suite)
                   or {"seq": SEQ_CONFIG, "syllable_net": SYLLABLE_NET_CONFIG,
                       "pairs_train": PAIRS_TRAIN, "pairs_test": PAIRS_TEST}),
        "results": RESULTS_NAME,
        "summary": SUMMARY_NAME,
        "corpora": corpus_files,
        "models": model_files,
        "failures": [{"rule": f.rule, "cell": f.cell,
                      "replicate": f.replicate, "error": f.error}
                     for f in result.failures],
    }
    (out_dir / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=1, sort_keys=True) + "\n")
