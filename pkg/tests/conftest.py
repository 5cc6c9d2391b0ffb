import itertools

import pytest

from pltl_ssm.semantics import all_letters, singleton_letters


def words(letters, max_len, min_len=1):
    for n in range(min_len, max_len + 1):
        yield from itertools.product(letters, repeat=n)


def w(text):
    """'aab' -> singleton-letter trace."""
    return tuple(frozenset([c]) for c in text)


@pytest.fixture
def abc():
    return singleton_letters("abc")


@pytest.fixture
def ab_full():
    return all_letters("ab")


def trie_walk(model, letters, mode, max_len):
    """Depth-first over all words up to max_len.

    Yields ``(code, depth, hs, zs, y)`` per nonempty prefix, where ``code`` is the
    prefix's base-|letters| number, matching ``all_words_array`` row order.
    """
    ex = model.executor(mode)
    k = len(letters)

    def go(state, code, depth):
        for i, letter in enumerate(letters):
            hs, zs, y = ex.step_full(state, letter)
            c = code * k + i
            yield c, depth + 1, hs, zs, y
            if depth + 1 < max_len:
                yield from go(tuple(hs), c, depth + 1)

    yield from go(ex.initial_state(), 0, 0)


def prefix_row(code, depth, n_letters, max_len):
    return code * n_letters ** (max_len - depth)


CRITERIA: dict[int, str] = {}


def record_criterion(number, ok, summary):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {summary}"
    CRITERIA[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[number])
