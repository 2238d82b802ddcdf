import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairpool import corpus
from fairpool.distributions import Categorical
from fairpool.dsl import parse_document, parse_model, serialize_model, tokenize
from fairpool.errors import (CyclicModel, DuplicateDeclaration, InvalidParameter, ModelError,
                             ModelSyntaxError, PredictorReferenced, UndeclaredVariable)
from fairpool.expr import Binary, Comparison, Constant, IfThenElse, VarRef

from strategies import models

MINIMAL = 'model "m" { exogenous U ~ Bernoulli(p=0.5) endogenous V = U predictor Y = V }'


def same_model(a, b):
    return (a == b and list(a.exogenous) == list(b.exogenous)
            and list(a.endogenous) == list(b.endogenous))


def test_minimal_model():
    m = parse_model(MINIMAL)
    assert m.diagram.edges == {("U", "V"), ("V", "Y")}
    assert m.predictor == "Y"


@pytest.mark.parametrize("name", corpus.MODELS)
def test_corpus_round_trip(name):
    model = parse_model(corpus.read(name))
    text = serialize_model(model)
    assert same_model(parse_model(text), model)
    assert serialize_model(parse_model(text)) == text


def test_serialization_is_deterministic(alice):
    assert serialize_model(alice).encode() == serialize_model(alice).encode()


def test_categorical_weights_keep_declaration_order(alice):
    assert "Categorical(weights=[0.7, 0.2, 0.1])" in serialize_model(alice)
    assert alice.exogenous["U_dpt"] == Categorical((0.7, 0.2, 0.1))


def test_precedence_and_associativity():
    m = parse_model('model "p" { exogenous a ~ PointMass(value=1) '
                    'predictor Y = a - 2 - 3 * a / 4 + -a }')
    expected = Binary("+", Binary("-", Binary("-", VarRef("a"), Constant(2)),
                                  Binary("/", Binary("*", Constant(3), VarRef("a")), Constant(4))),
                      Binary("-", Constant(0), VarRef("a")))
    assert m.endogenous["Y"] == expected


def test_conditional_forms():
    m = parse_model('model "c" { exogenous U ~ Bernoulli(p=0.5)\n'
                    'predictor Y = if (U = 1) then 0 else U / 10 }')
    assert m.endogenous["Y"] == IfThenElse(Comparison("=", VarRef("U"), Constant(1)),
                                           Constant(0), Binary("/", VarRef("U"), Constant(10)))


def test_unicode_operator_spellings():
    a = parse_model('model "u" { exogenous U ~ Bernoulli(p=0.5) '
                    'predictor Y = if U ≠ 1 then U × 2 ÷ 3 else U }')
    b = parse_model('model "u" { exogenous U ~ Bernoulli(p=0.5) '
                    'predictor Y = if U != 1 then U * 2 / 3 else U }')
    assert a == b


def test_forward_references_are_allowed():
    m = parse_model('model "f" { predictor Y = V endogenous V = U exogenous U ~ Bernoulli(p=1) }')
    assert m.order == ("V", "Y")


def test_comments_are_ignored():
    m = parse_model('# heading\nmodel "c" { # trailing\n exogenous U ~ Bernoulli(p=0.5) # x\n'
                    ' predictor Y = U }\n')
    assert m.endogenous["Y"] == VarRef("U")


def located(text, error):
    with pytest.raises(error) as info:
        parse_document(text)
    return info.value.line, info.value.column


def test_duplicate_declaration_points_at_second_site():
    text = 'model "d" {\n  exogenous U ~ Bernoulli(p=0.5)\n  exogenous U ~ Poisson(lambda=1)\n  predictor Y = U\n}'
    assert located(text, DuplicateDeclaration) == (3, 13)


def test_undeclared_points_at_reference():
    text = 'model "r" {\n  exogenous U ~ Bernoulli(p=0.5)\n  predictor Y = U + W\n}'
    assert located(text, UndeclaredVariable) == (3, 21)


def test_syntax_error_location():
    text = 'model "s" {\n  exogenous U ~ Bernoulli(p=0.5)\n  predictor Y = U +\n}'
    assert located(text, ModelSyntaxError) == (4, 1)


def test_cycle_is_located_and_listed():
    text = ('model "c" {\n exogenous U ~ Bernoulli(p=0.5)\n endogenous A = B + U\n'
            ' endogenous B = A\n predictor Y = B\n}')
    with pytest.raises(CyclicModel) as info:
        parse_document(text)
    assert info.value.line in (3, 4)
    assert set(info.value.cycle) == {"A", "B"}


def test_invalid_parameter_is_located():
    text = 'model "b" {\n  exogenous U ~ Beta(alpha=0, beta=1)\n  predictor Y = U\n}'
    assert located(text, InvalidParameter) == (2, 17)


@pytest.mark.parametrize("text, error", [
    ('model "x" { exogenous U ~ Bernoulli(p=0.5) }', ModelSyntaxError),
    ('model "x" { exogenous U ~ Bernoulli(p=0.5) predictor Y = U predictor Z = U }',
     DuplicateDeclaration),
    ('model "x" { exogenous U ~ Bernoulli(p=0.5) endogenous V = Y predictor Y = U }',
     PredictorReferenced),
    ('model "x" { exogenous U ~ Bernoulli(p=0.5) predictor Y = if U then 1 else 0 }',
     ModelSyntaxError),
    ('model "x" { exogenous U ~ Bernoulli(p=0.5, p=0.2) predictor Y = U }', DuplicateDeclaration),
    ('model "x" { exogenous if ~ Bernoulli(p=0.5) predictor Y = 1 }', ModelSyntaxError),
    ('model "x" { exogenous U ~ Bernoulli(p=0.5) predictor Y = 1e999 }', ModelSyntaxError),
    ('model "x" { exogenous U ~ Bernoulli(p=0.5) predictor Y = U } extra', ModelSyntaxError),
    ('model "\\q" { exogenous U ~ Bernoulli(p=0.5) predictor Y = U }', ModelSyntaxError),
    ('model "x" { predictor Y = ' + "(" * 500 + "1" + ")" * 500 + " }", ModelSyntaxError),
])
def test_rejected_documents(text, error):
    with pytest.raises(error) as info:
        parse_document(text)
    assert info.value.line is not None and info.value.column is not None


def test_invalid_utf8_is_a_located_error():
    with pytest.raises(ModelSyntaxError) as info:
        parse_document(b'model "x" {\n \xff }')
    assert (info.value.line, info.value.column) == (2, 2)


def test_tokenizer_reports_positions():
    tokens = tokenize('model "m" {\n  predictor Y = 1 }')
    y = next(t for t in tokens if t.text == "Y")
    assert (y.line, y.column) == (2, 13)


def test_conformance_corpus_parses_identically():
    docs = [MINIMAL, corpus.read("alice.scm"), 'model "x" {', "", "model", '"unterminated']
    first = [_outcome(d) for d in docs]
    assert [_outcome(d) for d in docs] == first


def _outcome(text):
    try:
        return ("ok", serialize_model(parse_model(text)))
    except ModelError as exc:
        return (type(exc).__name__, exc.line, exc.column, exc.message)


@settings(max_examples=1000)
@given(models())
def test_random_models_round_trip(model):
    text = serialize_model(model)
    again = parse_model(text)
    assert same_model(again, model)
    assert serialize_model(again) == text


FRAGMENTS = ['model', '"m"', '{', '}', 'exogenous', 'endogenous', 'predictor', 'U', 'V', 'Y',
             '~', 'Bernoulli', '(', ')', 'p', '=', '0.5', '[', ']', ',', 'if', 'then', 'else',
             '+', '-', '*', '/', '<=', '!=', '#', '\n', '1e400', '"', '\\', 'é', '≤', '\x00']


def test_fuzz_never_panics():
    """Random bytes, token soup and mutated models either parse or raise a
    located ModelError."""
    rng = random.Random(20240611)
    seed_doc = corpus.read("alice.scm").encode()
    for i in range(100_000):
        if i % 3 == 0:
            data = rng.randbytes(rng.randrange(0, 64))
        elif i % 3 == 1:
            data = " ".join(rng.choice(FRAGMENTS) for _ in range(rng.randrange(0, 30))).encode()
        else:
            data = bytearray(seed_doc)
            for _ in range(rng.randrange(1, 4)):
                pos = rng.randrange(len(data))
                if rng.random() < 0.5:
                    del data[pos:pos + rng.randrange(1, 8)]
                else:
                    data[pos:pos] = rng.choice(FRAGMENTS).encode()
            data = bytes(data)
        try:
            parse_document(data)
        except ModelError as exc:
            assert exc.line is not None and exc.column is not None, (data, exc)
