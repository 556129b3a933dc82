"""Lexer, parser and pretty-printer."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import CORPUS_NAMES
from corpus import corpus_entry
from dsl_ast import (
    Binary,
    FixedPoint,
    ForAll,
    IterateInBFS,
    Literal,
    MinMaxAssign,
    PropAccess,
    ReduceAssign,
    ReduceOp,
    TokenKind,
    Unary,
    Var,
    walk,
)
from errors import DslError, LexError, ParseError
from frontend import parse_source, pretty_print, tokenize


def _kinds(source: str) -> list[tuple[TokenKind, str]]:
    return [(t.kind, t.lexeme) for t in tokenize(source)[:-1]]


def _body(source: str):
    return parse_source(f"function f(Graph g) {{ {source} }}").functions[0].body.stmts


# ── Lexer ────────────────────────────────────────────────────────────────────

def test_single_keyword():
    tokens = tokenize("forall")
    assert [(t.kind, t.lexeme) for t in tokens] == [(TokenKind.KEYWORD, "forall"),
                                                    (TokenKind.EOF, "")]


def test_property_expression_tokens():
    assert _kinds("v.dist + e.weight") == [
        (TokenKind.IDENTIFIER, "v"), (TokenKind.PUNCTUATION, "."),
        (TokenKind.IDENTIFIER, "dist"), (TokenKind.OPERATOR, "+"),
        (TokenKind.IDENTIFIER, "e"), (TokenKind.PUNCTUATION, "."),
        (TokenKind.IDENTIFIER, "weight"),
    ]


def test_line_comment_is_dropped():
    assert _kinds("x = 3 // note") == [(TokenKind.IDENTIFIER, "x"), (TokenKind.OPERATOR, "="),
                                       (TokenKind.INTEGER, "3")]


def test_literal_kinds():
    assert _kinds("1 2.5 .5 1e3 True false") == [
        (TokenKind.INTEGER, "1"), (TokenKind.FLOAT, "2.5"), (TokenKind.FLOAT, ".5"),
        (TokenKind.FLOAT, "1e3"), (TokenKind.BOOL, "True"), (TokenKind.BOOL, "false"),
    ]


def test_longest_operator_wins():
    assert [lex for _, lex in _kinds("a &&= b || c <= d ++")] == [
        "a", "&&=", "b", "||", "c", "<=", "d", "++"]


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_trivia_reproduces_source(name):
    source = corpus_entry(name).read_source()
    tokens = tokenize(source)
    assert "".join(t.leading + t.lexeme for t in tokens) == source


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_spans_are_monotonic(name):
    tokens = tokenize(corpus_entry(name).read_source())
    positions = [(t.span.line, t.span.column) for t in tokens]
    assert positions == sorted(positions)
    assert all(line >= 1 and column >= 1 for line, column in positions)


@pytest.mark.parametrize("source, message", [
    ("x = 3 @ 4;", "unrecognized character"),
    ("x = 1e+;", "unterminated literal"),
    ("/* never closed", "unterminated comment"),
    ("x = 1e999;", "out of range"),
    ("x = 9" + "9" * 400 + ".0;", "out of range"),
])
def test_lex_errors(source, message):
    with pytest.raises(LexError, match=message) as info:
        tokenize(source)
    assert info.value.span.line == 1


def test_invalid_utf8_is_a_lex_error():
    with pytest.raises(LexError, match="UTF-8"):
        tokenize(b"function f() {\n \xff }")


def test_error_position_is_one_based():
    with pytest.raises(LexError) as info:
        tokenize("a\n  $")
    assert (info.value.span.line, info.value.span.column) == (2, 3)


# ── Parser ───────────────────────────────────────────────────────────────────

def test_minmax_statement():
    (stmt,) = _body("<nbr.dist, nbr.modified> = <Min(nbr.dist, v.dist + e.weight), True>;")
    assert isinstance(stmt, MinMaxAssign)
    assert stmt.kind == "Min"
    assert stmt.targets == [PropAccess(Var("nbr"), "dist"), PropAccess(Var("nbr"), "modified")]
    assert stmt.compare == (PropAccess(Var("nbr"), "dist"),
                            Binary("+", PropAccess(Var("v"), "dist"),
                                   PropAccess(Var("e"), "weight")))
    assert stmt.attached == [Literal(True, "bool")]


def test_fixed_point_statement():
    (stmt,) = _body("fixedPoint until (fin: !modified) { }")
    assert isinstance(stmt, FixedPoint)
    assert stmt.flag == "fin"
    assert stmt.convergence == Unary("!", Var("modified"))
    assert stmt.body.stmts == []


def test_empty_forall():
    (stmt,) = _body("forall (v in g.nodes()) { }")
    assert isinstance(stmt, ForAll)
    assert (stmt.var, stmt.domain.kind, stmt.domain.filter, stmt.parallel) == \
        ("v", "nodes", None, True)
    assert stmt.body.stmts == []


def test_sequential_for_and_filter():
    (stmt,) = _body("for (u in g.neighbors(v).filter(u < v)) { }")
    assert not stmt.parallel
    assert stmt.domain.kind == "neighbors"
    assert stmt.domain.arg == Var("v")
    assert stmt.domain.filter == Binary("<", Var("u"), Var("v"))


@pytest.mark.parametrize("token, op", [("+=", ReduceOp.SUM), ("*=", ReduceOp.PRODUCT),
                                       ("&&=", ReduceOp.ALL), ("||=", ReduceOp.ANY)])
def test_reduction_operators(token, op):
    (stmt,) = _body(f"x {token} y;")
    assert isinstance(stmt, ReduceAssign)
    assert stmt.op is op


def test_count_has_no_value():
    (stmt,) = _body("x++;")
    assert stmt.op is ReduceOp.COUNT
    assert stmt.value is None


def test_precedence():
    (stmt,) = _body("x = !a || b && c + d * -e == f;")
    assert stmt.value == Binary(
        "||", Unary("!", Var("a")),
        Binary("&&", Var("b"),
               Binary("==", Binary("+", Var("c"), Binary("*", Var("d"), Unary("-", Var("e")))),
                      Var("f"))))


def test_reverse_attaches_to_bfs():
    (stmt,) = _body("iterateInBFS (v in g.nodes() from s) { } iterateInReverse (v != s) { }")
    assert isinstance(stmt, IterateInBFS)
    assert stmt.reverse is not None
    assert stmt.reverse.filter == Binary("!=", Var("v"), Var("s"))


def test_free_standing_reverse_is_rejected():
    with pytest.raises(ParseError, match="iterateInReverse"):
        _body("iterateInReverse (v != s) { }")


@pytest.mark.parametrize("source", [
    "x = ;",
    "forall (v in g.nodes() { }",
    "a < b < c;",
    "x = a < b < c;",
    "3 = x;",
    "int;",
])
def test_parse_errors_carry_expected_set_and_span(source):
    text = f"function f(Graph g) {{ {source} }}"
    with pytest.raises(ParseError) as info:
        parse_source(text)
    span = info.value.span
    assert span is not None and span.line == 1 and 1 <= span.column <= len(text) + 1


def test_unexpected_token_lists_expectations():
    with pytest.raises(ParseError) as info:
        parse_source("function f(Graph g) { x = ; }")
    assert "expression" in info.value.expected


def test_empty_program():
    with pytest.raises(ParseError, match="empty program"):
        parse_source("// nothing here\n")


def test_nesting_guard():
    depth = 1000
    source = "function f(Graph g) { x = " + "(" * depth + "1" + ")" * depth + "; }"
    with pytest.raises(ParseError, match="nesting too deep"):
        parse_source(source)


# ── Corpus and round trip ────────────────────────────────────────────────────

@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_pretty_print_round_trip(name):
    program = parse_source(corpus_entry(name).read_source())
    text = pretty_print(program)
    assert parse_source(text) == program
    assert pretty_print(parse_source(text)) == text


def test_round_trip_keeps_every_construct():
    source = """
    function all_forms(Graph g, propNode<int> p, setNode<g> s, node r) {
        int x = -3 % 2;
        double y = 1.5e-3;
        do {
            x++;
        } while (x < 10);
        while (x > 0) {
            x = x - 1;
        }
        if (x == 0) x = 1; else { x = 2; }
        for (v in s.filter(p > 0)) {
            v.p = INF;
        }
        iterateInBFS (v in g.nodes() from r) {
            forall (w in g.neighbors(v)) {
                <w.p> = <Max(w.p, v.p + 1)>;
            }
        }
        iterateInReverse () {
            v.p *= 2;
        }
        return x;
    }
    """
    program = parse_source(source)
    assert parse_source(pretty_print(program)) == program


@pytest.mark.parametrize("seed", range(40))
def test_mutated_sources_fail_cleanly(seed):
    rng = np.random.default_rng(seed)
    source = corpus_entry(CORPUS_NAMES[seed % 4]).read_source()
    chars = list(source)
    for _ in range(int(rng.integers(1, 6))):
        i = int(rng.integers(0, len(chars)))
        action = rng.integers(0, 3)
        if action == 0:
            del chars[i]
        elif action == 1:
            chars.insert(i, chr(int(rng.integers(32, 127))))
        else:
            j = int(rng.integers(0, len(chars)))
            chars[i], chars[j] = chars[j], chars[i]
    mutated = "".join(chars)
    try:
        parse_source(mutated)
    except DslError as exc:
        if exc.span is not None:
            assert 1 <= exc.span.line <= mutated.count("\n") + 1


@pytest.mark.parametrize("seed", range(20))
def test_random_bytes_fail_cleanly(seed):
    data = np.random.default_rng(seed).integers(0, 256, size=200, dtype=np.uint8).tobytes()
    try:
        parse_source(data)
    except DslError:
        pass


def test_every_node_has_a_span():
    program = parse_source(corpus_entry("sssp").read_source())
    for node in walk(program):
        assert node.span.line >= 1, node
