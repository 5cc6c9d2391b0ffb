import pytest

from pltl_ssm import corpus
from pltl_ssm.compiler import compile
from pltl_ssm.formula import parse
from pltl_ssm.numerics import EXACT, Fixed, LogPrecision
from pltl_ssm.semantics import BudgetExceeded, eval, singleton_letters
from pltl_ssm.verify import (
    StabilizationFailure, aa_star_demo, check_equivalence, check_words,
    interleaved_words, monotonicity_experiment, parity_candidate,
)
from conftest import w


def test_check_equivalence_since():
    rep = check_equivalence("a S b", "diagonal", EXACT, props="abc", max_len=6, singleton=True)
    assert rep.verdict == "equivalent" and rep.words_checked == 1092
    assert rep.to_dict()["verdict"] == "equivalent"
    assert "elapsed_s" not in rep.to_dict()
    assert "1092" in rep.table()


def test_check_equivalence_aa_star():
    rep = check_equivalence("H a & MOD[0,2]", "mixed", EXACT, props="ab", max_len=8, singleton=True)
    assert rep.equivalent and rep.words_checked == 510 and rep.accepted == 4


def test_check_equivalence_finds_fixed_width_failure():
    rep = check_equivalence(corpus.ANBN, "diagonal", Fixed(4, 0), props="ab", max_len=12,
                            singleton=True)
    assert rep.verdict == "NOT equivalent"
    assert rep.mismatches[0][0] == "b;a"
    lens = [len(m[0].split(";")) for m in rep.mismatches]
    assert lens == sorted(lens)


def test_check_equivalence_budget():
    with pytest.raises(BudgetExceeded):
        check_equivalence("a", props="abc", max_len=12, budget=10_000)


def test_check_words():
    f = parse("P a")
    model = compile(f, props=["a", "b"])
    assert check_words(f, model, [w("ba"), w("bb")]) == []


@pytest.mark.parametrize("text,symbol,n,verdict", [
    ("P a", "a", 1, True), ("H a", "a", 1, True), ("H a", "b", 1, False),
])
def test_monotonicity_examples(text, symbol, n, verdict):
    model = compile(parse(text), props=["a", "b"])
    rep = monotonicity_experiment(model, symbol, Fixed(12, 4), 50)
    assert rep.point == n and rep.stabilized and rep.verdict_at(n) is verdict
    assert len(rep.outputs) == n + 50
    assert rep.to_dict()["stabilization_point"] == n


def test_monotonicity_preconditions():
    model = compile(parse("P a"))
    with pytest.raises(ValueError):
        monotonicity_experiment(model, "a", EXACT)
    with pytest.raises(ValueError):
        monotonicity_experiment(compile(parse("H a & MOD[0,2]"), "mixed"), "a")
    with pytest.raises(ValueError):
        monotonicity_experiment(model, "a", window=0)


def test_parity_candidate_agrees_on_short_words():
    for k in (1, 2, 3):
        f = parity_candidate(k)
        for n in range(1, 2 * k + 1):
            assert eval(f, w("a" * n)) == (n % 2 == 0)


def test_aa_star_demo():
    rep = aa_star_demo(Fixed(12, 4))
    assert rep.ok and rep.mixed_errors == []
    for d in rep.diagonal:
        assert d["stabilized"] and d["same_verdict"]
        assert eval(parse("H a & MOD[0,2]"), w("a" * d["misclassified"]))
        assert not eval(parse(d["formula"]), w("a" * d["misclassified"]))
    assert rep.to_dict()["ok"]


def test_probe_words():
    first, second = interleaved_words(2, 1)
    assert first == w("aacaabaa") and second == w("aabaacaa")


def _no_since(text):
    from pltl_ssm.formula import Since, has_node
    return not has_node(parse(text), Since)


@pytest.mark.parametrize("text,policy,mode", (
    [(t, "diagonal", EXACT) for t in corpus.COUNTING]
    + [(t, "diagonal", LogPrecision(4)) for t in corpus.COUNTING + [corpus.ANBN]]
    + [(t, "diagti", EXACT) for t in corpus.COUNTING + corpus.PLTL if _no_since(t)]
    + [(t, "timeinv", Fixed(12, 4)) for t in corpus.MULTI_MOD if _no_since(t)]
    + [(t, "mixed", EXACT) for t in corpus.MULTI_MOD]
))
def test_corpus_equivalence_per_policy(text, policy, mode):
    rep = check_equivalence(text, policy, mode, props="abc", max_len=6, singleton=True)
    assert rep.equivalent, rep.table()


@pytest.mark.parametrize("text", [t for t in corpus.COUNTING if "-" not in t])
def test_positive_counting_sound_in_fixed_width(text):
    rep = check_equivalence(text, "diagonal", Fixed(12, 4), props="ab", max_len=10, singleton=True)
    assert rep.equivalent
