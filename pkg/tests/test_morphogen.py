import itertools

import pytest

from morphnet import morphogen as mg
from morphnet.phonology import build_inventory, encode_word, is_consonant


@pytest.fixture(scope="module")
def standard():
    return build_inventory("standard")


@pytest.fixture(scope="module")
def redup():
    return build_inventory("reduplication")


@pytest.fixture(scope="module")
def roots30(standard):
    return mg.generate_roots(30, ["CVC"] * 15 + ["CVCVC"] * 15, standard,
                             seed=11)


VIBUN = mg.Root(0, tuple("vibun"))
TAM = mg.Root(1, tuple("tam"))
PDS = mg.Root(2, tuple("pds"))
PMN = mg.Root(3, tuple("pmn"))


# Surface forms are frozen from worked examples over the roots vibun and
# pds/pmn; every rule's full paradigm for vibun is pinned where published.
@pytest.mark.parametrize("kind, values, surface", [
    ("suffix", ("present",), "vibuni"),
    ("suffix", ("past",), "vibuna"),
    ("prefix", ("present",), "ivibun"),
    ("prefix", ("past",), "avibun"),
    ("infix", ("present",), "vikbun"),
    ("infix", ("past",), "vinbun"),
    ("circumfix", ("present",), "ivibuni"),
    ("circumfix", ("past",), "avibuna"),
    ("mutation", ("present",), "vibun"),
    ("deletion", ("present",), "vibun"),
    ("deletion", ("past",), "vibu"),
    ("template2", ("present",), "vaban"),
    ("template2", ("past",), "vbaan"),
    ("two_suffix", ("present", "perfect"), "vibunak"),
    ("two_suffix", ("present", "progressive"), "vibunas"),
    ("two_suffix", ("past", "perfect"), "vibunik"),
    ("two_suffix", ("past", "progressive"), "vibunis"),
    ("two_prefix", ("present", "perfect"), "kavibun"),
    ("two_prefix", ("present", "progressive"), "kivibun"),
    ("two_prefix", ("past", "perfect"), "savibun"),
    ("two_prefix", ("past", "progressive"), "sivibun"),
    ("prefix_suffix", ("present", "perfect"), "avibune"),
    ("prefix_suffix", ("present", "progressive"), "avibunu"),
    ("prefix_suffix", ("past", "perfect"), "ovibune"),
    ("prefix_suffix", ("past", "progressive"), "ovibunu"),
])
def test_vibun_paradigms(kind, values, surface):
    got = mg.inflect(VIBUN, mg.make_rule(kind), values)
    assert "".join(got) == surface


def test_mutation_past_nasalizes_final_vowel():
    got = mg.inflect(VIBUN, mg.make_rule("mutation"), ("past",))
    assert got == ("v", "i", "b", "u~", "n")


@pytest.mark.parametrize("root, tense, surface", [
    (PDS, "present", "padasa"),
    (PDS, "past", "apdaas"),
    (PDS, "future", "apadsa"),
    (PMN, "present", "pamana"),
    (PMN, "past", "apmaan"),
    (PMN, "future", "apamna"),
])
def test_template3_favored_triples(root, tense, surface):
    got = mg.inflect(root, mg.make_rule("template3_favored"), (tense,))
    assert "".join(got) == surface


@pytest.mark.parametrize("tense, surface", [
    ("present", "padsaa"),
    ("past", "apdasa"),
    ("future", "apasad"),
])
def test_template3_disfavored_triples(tense, surface):
    got = mg.inflect(PDS, mg.make_rule("template3_disfavored"), (tense,))
    assert "".join(got) == surface


def test_cvc_infix_lands_after_only_vowel():
    assert mg.inflect(TAM, mg.make_rule("infix"), ("present",)) == \
        ("t", "a", "k", "m")


def test_cvc_deletion_yields_cv():
    assert mg.inflect(TAM, mg.make_rule("deletion"), ("past",)) == ("t", "a")


def test_template_rules_reject_two_consonant_roots():
    for kind in ("template2", "template3_favored", "template3_disfavored"):
        with pytest.raises(ValueError):
            mg.inflect(TAM, mg.make_rule(kind), ("present",))


def test_inflect_rejects_bad_values():
    with pytest.raises(ValueError):
        mg.inflect(VIBUN, mg.make_rule("suffix"), ("future",))
    with pytest.raises(ValueError):
        mg.inflect(VIBUN, mg.make_rule("two_suffix"), ("past",))


def test_forms_distinct_within_every_paradigm(roots30):
    for kind in mg.GENERAL_RULE_KINDS:
        rule = mg.make_rule(kind)
        use = roots30 if kind != "template2" else \
            mg.generate_roots(4, ["CVCVC"] * 4, build_inventory("standard"),
                              seed=2)
        for root in use:
            forms = {mg.inflect(root, rule, vals) for vals in
                     itertools.product(*(c.values for c in rule.categories))}
            assert len(forms) == rule.n_forms


def test_template2_keeps_edge_consonants():
    rule = mg.make_rule("template2")
    for root in mg.generate_roots(6, ["CVCVC"] * 6,
                                  build_inventory("standard"), seed=5):
        cons = [s for s in root.symbols if is_consonant(s)]
        for tense in ("present", "past"):
            form = mg.inflect(root, rule, (tense,))
            assert form[0] == cons[0] and form[-1] == cons[-1]


def test_template3_consonant_order():
    fav, dis = mg.make_rule("template3_favored"), \
        mg.make_rule("template3_disfavored")
    cons = tuple("pds")
    for tense in ("present", "past", "future"):
        form = mg.inflect(PDS, fav, (tense,))
        assert tuple(s for s in form if is_consonant(s)) == cons
    assert tuple(s for s in mg.inflect(PDS, dis, ("future",))
                 if is_consonant(s)) == ("p", "s", "d")


def test_generate_roots_deterministic(standard):
    a = mg.generate_roots(30, ["CVC"] * 15 + ["CVCVC"] * 15, standard, seed=9)
    b = mg.generate_roots(30, ["CVC"] * 15 + ["CVCVC"] * 15, standard, seed=9)
    assert a == b
    assert len({r.symbols for r in a}) == 30
    assert [r.pattern for r in a] == ["CVC"] * 15 + ["CVCVC"] * 15


def test_generate_roots_template_space(standard):
    roots = mg.generate_roots(30, ["CCC"] * 30, build_inventory("template_cc"),
                              seed=1)
    assert len({r.symbols for r in roots}) == 30
    assert all(r.pattern == "CCC" for r in roots)


def test_generate_roots_infeasible_quota(standard):
    # 14 consonants * 5 vowels * 14 = 980 CVC roots available
    with pytest.raises(ValueError):
        mg.generate_roots(981, ["CVC"] * 981, standard, seed=0)


def test_generate_roots_quota_mismatch(standard):
    with pytest.raises(ValueError):
        mg.generate_roots(3, ["CVC"] * 2, standard, seed=0)


@pytest.mark.parametrize("kind, n_words, n_train, n_test", [
    ("suffix", 60, 40, 20),
    ("two_suffix", 120, 80, 40),
    ("template3_favored", 90, 60, 30),
])
def test_corpus_split_sizes(kind, n_words, n_train, n_test, standard):
    patterns = ["CVC"] * 15 + ["CVCVC"] * 15
    inv = standard
    if kind.startswith("template3"):
        patterns = ["CCC"] * 30
        inv = build_inventory("template_cc")
    roots = mg.generate_roots(30, patterns, inv, seed=4)
    corpus = mg.build_corpus(mg.make_rule(kind), roots, seed=8,
                             inventory_kind=inv.kind)
    assert len(corpus.words) == n_words
    assert len(corpus.words_train) == n_train
    assert len(corpus.words_test) == n_test


def test_corpus_is_exact_partition(roots30):
    corpus = mg.build_corpus(mg.make_rule("two_suffix"), roots30, seed=8,
                             inventory_kind="standard")
    keys = {(w.root_id, w.inflection_ids) for w in corpus.words}
    assert len(keys) == len(corpus.words)
    assert keys == {(r.id, (t, a)) for r in roots30
                    for t in (0, 1) for a in (0, 1)}
    train = {(w.root_id, w.inflection_ids) for w in corpus.words_train}
    test = {(w.root_id, w.inflection_ids) for w in corpus.words_test}
    assert not train & test


def test_corpus_surfaces_match_inflect(roots30):
    rule = mg.make_rule("circumfix")
    corpus = mg.build_corpus(rule, roots30, seed=8, inventory_kind="standard")
    by_id = {r.id: r for r in corpus.roots}
    for w in corpus.words:
        values = tuple(c.values[i]
                       for c, i in zip(rule.categories, w.inflection_ids))
        assert w.surface == mg.inflect(by_id[w.root_id], rule, values)


def test_corpus_split_depends_on_seed(roots30):
    a = mg.build_corpus(mg.make_rule("suffix"), roots30, seed=1,
                        inventory_kind="standard")
    b = mg.build_corpus(mg.make_rule("suffix"), roots30, seed=2,
                        inventory_kind="standard")
    assert a.words_train != b.words_train
    assert a == mg.build_corpus(mg.make_rule("suffix"), roots30, seed=1,
                                inventory_kind="standard")


def test_enumerate_syllables_full_cross_product(redup):
    syllables = mg.enumerate_syllables(redup)
    assert len(syllables) == 225
    assert len(set(syllables)) == 225
    assert sum(1 for s in syllables if s.coda is None) == 75
    for s in syllables[:5]:
        encode_word(redup, s.symbols)


def test_enumerate_syllables_needs_redup_inventory(standard):
    with pytest.raises(ValueError):
        mg.enumerate_syllables(standard)


def test_pair_labels():
    tam = mg.Syllable("t", "a", "m")
    kam = mg.Syllable("k", "a", "m")
    assert mg.pair_label("rime", tam, kam) == 1
    assert mg.pair_label("onset", tam, kam) == 0
    assert mg.pair_label("onset", tam, mg.Syllable("t", "u", "s")) == 1


def test_reduplication_corpus_balanced(redup):
    corpus = mg.build_reduplication_corpus("onset", 200, 50, redup, seed=3)
    assert len(corpus.words_train) == 200
    assert len(corpus.words_test) == 50
    assert sum(w.inflection_ids[0] for w in corpus.words_train) == 100
    assert sum(w.inflection_ids[0] for w in corpus.words_test) == 25
    for w in corpus.words:
        first, second = w.syllables
        assert w.surface == first + second
        same = int(first[0] == second[0])
        assert w.inflection_ids[0] == same


def test_syllable_pair_corpus_disjoint(redup):
    corpus = mg.build_syllable_pair_corpus("rime", 200, 50, redup, seed=3)
    items = {(p.first.symbols, p.second.symbols)
             for p in corpus.pairs_train + corpus.pairs_test}
    assert len(items) == 250
    for p in corpus.pairs_train:
        assert p.label == mg.pair_label("rime", p.first, p.second)


def test_pair_counts_must_be_even(redup):
    with pytest.raises(ValueError):
        mg.build_syllable_pair_corpus("rime", 7, 4, redup, seed=3)


def test_syllable_id_corpus(redup):
    corpus = mg.build_syllable_id_corpus(redup)
    assert len(corpus.words_train) == 225
    assert not corpus.words_test
    assert [w.root_id for w in corpus.words_train] == list(range(225))


def test_corpus_json_round_trip(roots30):
    corpus = mg.build_corpus(mg.make_rule("two_prefix"), roots30, seed=8,
                             inventory_kind="standard")
    assert mg.corpus_from_json(mg.corpus_to_json(corpus)) == corpus


def test_corpus_json_stable_and_hashable(roots30, tmp_path):
    corpus = mg.build_corpus(mg.make_rule("mutation"), roots30, seed=8,
                             inventory_kind="mutation")
    assert mg.corpus_to_json(corpus) == mg.corpus_to_json(corpus)
    digest = mg.corpus_digest(corpus)
    assert len(digest) == 64
    path = tmp_path / "corpus.json"
    mg.save_corpus(corpus, path)
    assert mg.load_corpus(path) == corpus


def test_corpus_json_rejects_other_versions(roots30):
    corpus = mg.build_corpus(mg.make_rule("suffix"), roots30, seed=8,
                             inventory_kind="standard")
    text = mg.corpus_to_json(corpus).replace('"version": 1', '"version": 99')
    with pytest.raises(ValueError):
        mg.corpus_from_json(text)


def test_unknown_rule_kind():
    with pytest.raises(ValueError):
        mg.make_rule("ablaut")
