import pytest

from pltl_ssm import corpus
from pltl_ssm.formula import (
    And, Atom, Count, FalseF, Mod, Not, Previously, Since, TrueF, Yesterday, atoms, parse,
    subformulas,
)
from pltl_ssm.semantics import (
    BudgetExceeded, TraceError, all_letters, all_words_array, enumerate_language, eval,
    eval_at, evaluate_all, evaluate_batch, format_trace, parse_trace, singleton_letters,
)
from conftest import w, words


def naive(f, trace, i):
    """Textbook recursion, no tables: truth of f at 1-based position i."""
    if isinstance(f, Atom):
        return f.name in trace[i - 1]
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Mod):
        return i % f.modulus == f.remainder
    if isinstance(f, Not):
        return not naive(f.child, trace, i)
    if isinstance(f, And):
        return naive(f.left, trace, i) and naive(f.right, trace, i)
    if isinstance(f, Yesterday):
        return i > 1 and naive(f.child, trace, i - 1)
    if isinstance(f, Previously):
        return any(naive(f.child, trace, j) for j in range(1, i + 1))
    if isinstance(f, Since):
        return any(naive(f.right, trace, j)
                   and all(naive(f.left, trace, k) for k in range(j + 1, i + 1))
                   for j in range(1, i + 1))
    if isinstance(f, Count):
        total = sum(a * sum(naive(g, trace, j) for j in range(1, i + 1)) for a, g in f.terms)
        return {"<": total < f.threshold, "<=": total <= f.threshold, "=": total == f.threshold,
                ">=": total >= f.threshold, ">": total > f.threshold}[f.comparator]
    raise TypeError(f)


def test_parse_and_format_traces():
    assert parse_trace("a;{};{a,b}") == (frozenset("a"), frozenset(), frozenset("ab"))
    assert parse_trace("") == ()
    assert format_trace(parse_trace("a;{};{b,a}")) == "a;{};{a,b}"
    with pytest.raises(TraceError):
        parse_trace("{a")
    with pytest.raises(TraceError):
        parse_trace("A")


def test_eval_at_examples():
    assert eval_at(Since(Atom("a"), Atom("b")), parse_trace("b;a;a"), 3)
    assert not eval_at(Yesterday(Atom("a")), parse_trace("a;a"), 1)
    assert eval_at(Mod(1, 2), parse_trace("{};{};{}"), 3)
    with pytest.raises(IndexError):
        eval_at(Atom("a"), parse_trace("a"), 2)
    with pytest.raises(IndexError):
        eval_at(Atom("a"), parse_trace("a"), 0)


def test_eval_examples():
    f = parse(corpus.ANBNCN)
    assert eval(f, w("aabbcc"))
    assert not eval(f, w("aabbc"))
    assert eval(parse("#[a] - #[b] = 0"), ())
    assert eval(f, ())  # n = 0 member under the zero-count convention
    assert not eval(parse("Y true"), ()) and not eval(parse("MOD[0,2]"), ())


def test_enumerate_language_examples():
    lang = enumerate_language(parse("H a & MOD[0,2]"), {"a"}, 6)
    assert lang == {w("aa"), w("aaaa"), w("aaaaaa")}
    assert enumerate_language(parse("false"), {"a"}, 3) == set()
    letters = [frozenset("a"), frozenset()]
    got = enumerate_language(parse("P a"), {"a"}, 2, letters=letters)
    assert got == {x for x in words(letters, 2) if frozenset("a") in x}


def test_enumerate_language_budget():
    with pytest.raises(BudgetExceeded):
        enumerate_language(parse("a"), {"a", "b"}, 12, budget=1000)
    with pytest.raises(TraceError):
        enumerate_language(parse("a & c"), {"a"}, 2)


ALL = corpus.PLTL + corpus.UN_MOD + corpus.MIXED + corpus.COUNTING + corpus.MULTI_MOD


@pytest.mark.parametrize("text", ALL)
def test_table_agrees_with_naive_recursion(text):
    f = parse(text)
    letters = singleton_letters(sorted(atoms(f) | {"a"}))
    if len(letters) <= 2:
        letters = all_letters(sorted(atoms(f) | {"a"}))
    subs = subformulas(f)
    max_len = 8 if len(letters) <= 2 else 6
    for word in words(letters, max_len, min_len=max_len):
        table = evaluate_all(f, word)
        for g in subs:
            for i in range(1, len(word) + 1):
                assert table[g][i - 1] == naive(g, word, i), (text, g, word, i)


def test_since_unfolding_and_previously_monotone():
    s = parse("(a | Y b) S (b & !Y a)")
    p = parse("P (a & Y b)")
    for word in words(all_letters("ab"), 6, min_len=6):
        ts, tp = evaluate_all(s, word)[s], evaluate_all(p, word)[p]
        for i in range(1, 7):
            lhs = eval_at(s.left, word, i)
            rhs = eval_at(s.right, word, i)
            assert ts[i - 1] == (rhs or (lhs and i > 1 and ts[i - 2]))
            if tp[i - 1]:
                assert all(tp[i - 1:])


@pytest.mark.parametrize("text", ALL)
def test_batch_evaluator_matches_table(text):
    f = parse(text)
    letters = all_letters(sorted(atoms(f) | {"a"}))
    arr = all_words_array(len(letters), 4)
    got = evaluate_batch(f, arr, letters)
    for row, verdicts in zip(arr, got):
        word = tuple(letters[k] for k in row)
        assert list(verdicts) == evaluate_all(f, word)[f]
