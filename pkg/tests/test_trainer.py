import itertools

import numpy as np
import pytest

from morphnet import morphogen as mg
from morphnet.net import TrainConfig, init_network
from morphnet.phonology import build_inventory
from morphnet.trainer import (
    build_network_spec,
    classify,
    encode_input,
    encode_split,
    encode_targets,
    evaluate,
    head_candidates,
    train,
    train_word,
)


@pytest.fixture(scope="module")
def standard():
    return build_inventory("standard")


@pytest.fixture(scope="module")
def suffix_corpus(standard):
    roots = mg.generate_roots(30, ["CVC"] * 15 + ["CVCVC"] * 15, standard,
                              seed=41)
    return mg.build_corpus(mg.make_rule("suffix"), roots, seed=42,
                           inventory_kind="standard")


@pytest.fixture(scope="module")
def small_corpus(standard):
    # 4 roots keep the desk-scale training tests fast
    roots = mg.generate_roots(4, ["CVC"] * 2 + ["CVCVC"] * 2, standard,
                              seed=43)
    return mg.build_corpus(mg.make_rule("suffix"), roots, seed=44,
                           inventory_kind="standard")


def test_word_spec_shapes(suffix_corpus, standard):
    spec = build_network_spec(suffix_corpus)
    assert spec.input_width == standard.width
    assert [m.width for m in spec.modules] == [15, 15]
    widths = {h.name: h.width for h in spec.heads}
    assert widths == {"phone_copy": standard.width, "root": 30, "tense": 2}
    assert spec.output_width == standard.width + 30 + 2


def test_two_category_spec_has_both_heads(standard):
    roots = mg.generate_roots(6, ["CVCVC"] * 6, standard, seed=1)
    corpus = mg.build_corpus(mg.make_rule("prefix_suffix"), roots, seed=2,
                             inventory_kind="standard")
    spec = build_network_spec(corpus)
    names = [h.name for h in spec.heads]
    assert names == ["phone_copy", "root", "tense", "aspect"]


def test_reduplication_spec_single_unit_only():
    redup = build_inventory("reduplication")
    corpus = mg.build_reduplication_corpus("onset", 20, 10, redup, seed=7)
    spec = build_network_spec(corpus)
    assert len(spec.modules) == 1
    assert [(h.name, h.width) for h in spec.heads] == [("same_onset", 1)]


def test_syllable_id_spec_has_no_inflection_module():
    redup = build_inventory("reduplication")
    corpus = mg.build_syllable_id_corpus(redup)
    spec = build_network_spec(corpus, root_width=30)
    assert [m.width for m in spec.modules] == [30]
    assert {h.name: h.width for h in spec.heads} == \
        {"phone_copy": redup.width, "root": 225}


# --- classify ---------------------------------------------------------------

def test_classify_exact_one_hot():
    assert classify(np.eye(10)[7], np.eye(10)) == 7


def test_classify_tie_breaks_low():
    assert classify(np.full(4, 0.5), np.eye(4)) == 0
    assert classify(np.array([0.5]), head_candidates(1)) == 0


def test_classify_equals_argmax_for_one_hot_candidates():
    # exhaustive over a coarse grid of 4-unit outputs
    grid = np.linspace(0.0, 1.0, 5)
    eye = np.eye(4)
    for values in itertools.product(grid, repeat=4):
        out = np.array(values)
        assert classify(out, eye) == int(np.argmax(out))


def test_classify_scale_invariant_for_one_hot_candidates():
    rng = np.random.default_rng(3)
    eye = np.eye(6)
    for _ in range(100):
        out = rng.uniform(size=6)
        assert classify(out, eye) == classify(out * 0.3 + 0.1, eye)


def test_classify_input_validation():
    with pytest.raises(ValueError):
        classify(np.zeros(3), np.empty((0, 3)))
    with pytest.raises(ValueError):
        classify(np.zeros(3), np.eye(4))


def test_unit_head_candidates_threshold_at_half():
    cands = head_candidates(1)
    assert classify(np.array([0.49]), cands) == 0
    assert classify(np.array([0.51]), cands) == 1


# --- targets ----------------------------------------------------------------

def test_targets_shapes_and_constancy(suffix_corpus, standard):
    spec = build_network_spec(suffix_corpus)
    word = suffix_corpus.words_train[0]
    X = encode_input(standard, word)
    T = encode_targets(spec, suffix_corpus, word, X)
    assert T.shape == (X.shape[0], spec.output_width)
    np.testing.assert_array_equal(T[:, spec.head_slice("phone_copy")], X)
    root = T[:, spec.head_slice("root")]
    tense = T[:, spec.head_slice("tense")]
    for row in root:
        np.testing.assert_array_equal(row, root[0])
    for row in tense:
        np.testing.assert_array_equal(row, tense[0])
    assert root[0].sum() == 1.0 and root[0][word.root_id] == 1.0
    assert tense[0].sum() == 1.0 and tense[0][word.inflection_ids[0]] == 1.0


def test_unit_encoding_target_is_scalar_label():
    redup = build_inventory("reduplication")
    corpus = mg.build_reduplication_corpus("rime", 20, 10, redup, seed=9)
    spec = build_network_spec(corpus)
    for word in corpus.words_train[:8]:
        X = encode_input(redup, word)
        T = encode_targets(spec, corpus, word, X)
        assert set(np.unique(T)) <= {0.0, 1.0}
        np.testing.assert_array_equal(
            T[:, spec.head_slice("same_rime")].ravel(),
            np.full(X.shape[0], float(word.inflection_ids[0])))


def test_trailing_boundary_appends_zero_row(standard, suffix_corpus):
    word = suffix_corpus.words_train[0]
    X = encode_input(standard, word, trailing_boundary=True)
    assert X.shape[0] == len(word.surface) + 2
    assert not X[-1].any()
    assert not X[0].any()


# --- training ---------------------------------------------------------------

def test_train_word_error_decreases(small_corpus, standard):
    spec = build_network_spec(small_corpus)
    net = init_network(spec, 5)
    cfg = TrainConfig(epochs=1, seed=0)
    word = small_corpus.words_train[0]
    first = train_word(net, word, cfg, standard, small_corpus)
    last = first
    for _ in range(30):
        last = train_word(net, word, cfg, standard, small_corpus)
    assert last < first


def test_zero_error_word_classified_correctly(small_corpus, standard):
    spec = build_network_spec(small_corpus)
    net = init_network(spec, 6)
    cfg = TrainConfig(epochs=1, seed=0)
    word = small_corpus.words_train[0]
    for _ in range(600):
        train_word(net, word, cfg, standard, small_corpus)
    result = evaluate(net, [word], small_corpus, standard)
    assert result.root_accuracy == 1.0
    assert result.inflection_accuracy["tense"] == 1.0


def test_evaluate_does_not_mutate_weights(suffix_corpus, standard):
    spec = build_network_spec(suffix_corpus)
    net = init_network(spec, 7)
    before = [w.copy() for w in (net.w_in, net.w_rec, net.w_out,
                                 net.b_h, net.b_out)]
    evaluate(net, suffix_corpus.words_test, suffix_corpus, standard)
    after = (net.w_in, net.w_rec, net.w_out, net.b_h, net.b_out)
    for a, b in zip(before, after):
        np.testing.assert_array_equal(a, b)


def test_untrained_accuracy_near_chance(suffix_corpus, standard):
    # one random net, all 60 words: a loose sanity band around .033/.5
    spec = build_network_spec(suffix_corpus)
    accs_root, accs_tense = [], []
    for seed in range(20):
        net = init_network(spec, seed)
        r = evaluate(net, list(suffix_corpus.words), suffix_corpus, standard)
        accs_root.append(r.root_accuracy)
        accs_tense.append(r.inflection_accuracy["tense"])
    assert np.mean(accs_root) < 0.15
    assert 0.2 < np.mean(accs_tense) < 0.8


def test_train_records_history_per_epoch(small_corpus):
    spec = build_network_spec(small_corpus)
    cfg = TrainConfig(epochs=7, seed=3)
    net, history = train(small_corpus, spec, cfg)
    assert [h.epoch for h in history] == list(range(1, 8))
    for rec in history:
        assert rec.train.split == "train" and rec.test.split == "test"
        assert rec.train.n_words == len(small_corpus.words_train)
        assert rec.test.n_words == len(small_corpus.words_test)
        assert 0.0 <= rec.train.root_accuracy <= 1.0


def test_train_deterministic_per_seed(small_corpus):
    spec = build_network_spec(small_corpus)
    cfg = TrainConfig(epochs=5, seed=11)
    net_a, hist_a = train(small_corpus, spec, cfg)
    net_b, hist_b = train(small_corpus, spec, cfg)
    np.testing.assert_array_equal(net_a.w_in, net_b.w_in)
    assert hist_a == hist_b
    net_c, hist_c = train(small_corpus, spec,
                          TrainConfig(epochs=5, seed=12))
    assert not np.array_equal(net_a.w_in, net_c.w_in)


def test_training_learns_small_corpus(small_corpus):
    # 8 words, 4 roots: the net should essentially memorize the split
    spec = build_network_spec(small_corpus)
    cfg = TrainConfig(epochs=80, seed=2)
    _, history = train(small_corpus, spec, cfg)
    final = history[-1].train
    assert final.root_accuracy >= 0.8
    assert final.inflection_accuracy["tense"] >= 0.8
    assert history[-1].train.mean_error < history[0].train.mean_error


def test_encode_split_aligns_ids(suffix_corpus, standard):
    spec = build_network_spec(suffix_corpus)
    enc = encode_split(spec, suffix_corpus, suffix_corpus.words_test,
                       standard)
    assert set(enc.true_ids) == {"root", "tense"}
    assert enc.true_ids["root"] == tuple(w.root_id
                                         for w in suffix_corpus.words_test)
    assert len(enc.X) == len(enc.T) == len(suffix_corpus.words_test)
