import json
import random
from fractions import Fraction

import pytest

from pltl_ssm import corpus
from pltl_ssm.compiler import compile, make_comparator_gadget, make_mod_layer
from pltl_ssm.formula import Atom, Since, build_index, parse, subformulas
from pltl_ssm.numerics import EXACT, Fixed, LogPrecision, Numeric
from pltl_ssm.semantics import all_letters, eval, parse_trace, singleton_letters
from pltl_ssm.ssm import (
    ConstantMatrix, ExecutionError, Fnn, GatePolicy, InputDiagonal, Node, Ssm, SsmLayer,
    accepts, eval_fnn, from_json, run, run_layer, to_dict, to_json,
)
from conftest import trie_walk, w, words

ZERO, ONE = Fraction(0), Fraction(1)


def test_eval_fnn_examples():
    assert eval_fnn(Fnn.identity(1), [3]) == [3]
    eq3 = make_comparator_gadget("=", 3)
    assert eval_fnn(eq3, [3]) == [1]
    assert eval_fnn(eq3, [4]) == [0]
    for mode in (Fixed(8, 0), Fixed(12, 4)):
        assert eval_fnn(eq3, [3], mode) == [Numeric(1, mode)]
    with pytest.raises(ExecutionError):
        eval_fnn(eq3, [1, 2])


def test_fnn_shape_checks():
    with pytest.raises(ValueError):
        Fnn(((Node((1, 2)),), (Node((1, 2)),)))
    with pytest.raises(ValueError):
        Fnn(())


def test_zero_layer_passes_input_through():
    d = 3
    I = tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d))
    Z = tuple((ZERO,) * d for _ in range(d))
    layer = SsmLayer((ZERO,) * d, InputDiagonal(Z), I)
    xs = [[1, 0, 1], [0, 1, 1], [1, 1, 1]]
    hs, zs = run_layer(layer, xs)
    assert [[v.to_fraction() for v in z] for z in zs] == xs


def test_since_layer_values():
    f = Since(Atom("a"), Atom("b"))
    model = compile(f, "diagonal")
    idx = model.index
    layer = model.layers[0]
    xs = []
    for letter in parse_trace("b;a;a"):
        x = [0] * idx.dim
        for p in letter:
            x[idx[Atom(p)]] = 1
        x[idx.const] = 1
        xs.append(x)
    hs, zs = run_layer(layer, xs)
    assert [h[idx[f]] for h in hs] == [1, 1, 1]
    with pytest.raises(ExecutionError):
        run_layer(layer, [])


def test_mod_layer_cycles():
    f = parse("MOD[0,2]")
    idx = build_index(f, with_mod_block=True)
    layer = make_mod_layer(2, idx)
    xs = [[0] * idx.dim for _ in range(4)]
    for x in xs:
        x[idx.const] = 1
    hs, _ = run_layer(layer, xs)
    block = [[int(h[idx.mod_dim(r)].to_fraction()) for r in range(2)] for h in hs]
    assert block == [[0, 1], [1, 0], [0, 1], [1, 0]]


def test_run_and_accepts_examples():
    pa = compile(parse("P a"), "diagonal", props=["a"])
    assert run(pa, parse_trace("a;{}")).output == [1, 1]
    assert run(pa, parse_trace("{}")).output == [0]
    with pytest.raises(ExecutionError):
        run(pa, ())
    with pytest.raises(ExecutionError):
        accepts(pa, ())
    with pytest.raises(ExecutionError):
        accepts(pa, parse_trace("z"))
    aa = compile(parse("H a & MOD[0,2]"), "mixed", props=["a", "b"])
    assert accepts(aa, parse_trace("a;a"))
    assert not accepts(aa, parse_trace("a;a;a"))
    assert not accepts(aa, parse_trace("a;b"))


def test_run_trace_shapes():
    model = compile(parse(corpus.ANBNCN), "diagonal")
    res = run(model, w("aabbcc"), LogPrecision(4))
    assert len(res.ys) == 6
    assert all(len(hs) == 6 and len(zs) == 6 for hs, zs in zip(res.hs, res.zs))
    assert res.mode == LogPrecision(4).at_length(6, model.log_headroom)
    assert res.output[-1] == 1


def test_policy_gate_consistency():
    model = compile(parse("a S b"), "diagonal")
    with pytest.raises(ValueError):
        Ssm(model.props, model.index, model.layers, model.out, GatePolicy.TIME_INVARIANT)
    assert GatePolicy.parse("time-invariant") is GatePolicy.TIME_INVARIANT
    with pytest.raises(ValueError):
        GatePolicy.parse("arbitrary")


@pytest.mark.parametrize("text,policy", [
    ("a S b", "diagonal"), ("H (a -> !Y b)", "diagonal"), (corpus.ANBN, "diagonal"),
    ("H a & MOD[0,2]", "mixed"), ("MOD[1,2] & P b | MOD[0,3]", "timeinv"),
    ("P a & #[b] >= 2", "diagti"),
])
def test_json_round_trip(text, policy):
    model = compile(parse(text), policy)
    again = from_json(to_json(model))
    assert to_dict(again) == to_dict(model)
    assert again.layers == model.layers and again.out == model.out
    data = json.loads(to_json(model))
    assert data["index"]["map"]["<1>"] == model.dim - 1
    assert all("/" in v for v in data["layers"][0]["h0"])
    for word in words(singleton_letters(model.props), 4):
        assert accepts(again, word) == accepts(model, word)


def _invariant_formulas():
    return ([(t, "diagonal") for t in corpus.PLTL + corpus.COUNTING]
            + [(t, "timeinv") for t in corpus.UN_MOD] + [(t, "mixed") for t in corpus.MIXED])


@pytest.mark.parametrize("text,policy", _invariant_formulas())
def test_exact_run_invariants(text, policy):
    """Constant dimension stays 1, formula dimensions stay boolean, gates stay in {0, 1/4, 1},
    MOD block stays one-hot."""
    model = compile(parse(text), policy)
    idx = model.index
    ex = model.executor(EXACT)
    letters = singleton_letters(model.props)
    formula_dims = sorted({idx[g] for g in subformulas(model.formula) if g in idx}
                          | {idx[g] for g in idx.formulas})
    for code, depth, hs, zs, y in trie_walk(model, letters, EXACT, 5):
        for z in zs:
            assert z[idx.const] == 1
            assert all(z[i] in (0, 1) for i in formula_dims)
        if idx.modulus:
            block = [hs[0][idx.mod_dim(r)] for r in range(idx.modulus)]
            assert sorted(block) == [0] * (idx.modulus - 1) + [1]
    for layer, prep in zip(model.layers, ex.layers):
        if isinstance(layer.gate, InputDiagonal):
            for x in _boolean_inputs(idx, model, letters):
                assert set(prep.realized_gate(x)) <= {0, Fraction(1, 4), 1}


def _boolean_inputs(idx, model, letters):
    ex = model.executor(EXACT)
    out = []
    for word in words(letters, 3):
        state = ex.initial_state()
        for letter in word:
            hs, zs, _ = ex.step_full(state, letter)
            state = tuple(hs)
            out.append(ex.embed(letter))
            out.extend(zs)
    return out


@pytest.mark.parametrize("text", corpus.PLTL)
def test_exact_and_fixed_agree_to_length_200(text):
    model = compile(parse(text), "diagonal", props=["a", "b", "c"])
    letters = singleton_letters("abc")
    rng = random.Random(text)
    samples = [tuple(rng.choice(letters) for _ in range(rng.randint(1, 200))) for _ in range(40)]
    samples += [(x,) * 200 for x in letters]
    fixed, exact = model.executor(Fixed(12, 4)), model.executor(EXACT)
    for word in samples:
        sf, se = fixed.initial_state(), exact.initial_state()
        for t, letter in enumerate(word, start=1):
            sf, _, yf = fixed.step(sf, letter)
            se, _, ye = exact.step(se, letter)
            assert (yf == fixed.mode.one) == (ye == 1) == eval(model.formula, word[:t]), (word[:t])
