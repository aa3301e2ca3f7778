"""Tokenizer and recursive-descent parser for mini-SCOOP."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

from scoopw.frontend.ast import (
    Assign,
    Attribute,
    BinOp,
    BoolLit,
    Call,
    CallStmt,
    ClassDecl,
    Create,
    CurrentRef,
    Expr,
    If,
    IntLit,
    Loop,
    MethodDecl,
    Name,
    Pos,
    Program,
    SeparateBlock,
    Stmt,
    TypeRef,
    UnOp,
    VoidLit,
)

KEYWORDS = frozenset(
    {
        "class", "end", "do", "require", "ensure", "local", "create", "if", "then",
        "else", "elseif", "from", "until", "loop", "separate", "and", "or", "not",
        "True", "False", "Void", "Current", "inherit",
    }
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|/=|<=|>=|[:,;.()+\-*=<>])
    """,
    re.VERBOSE,
)


class ParseError(Exception):
    """Malformed source. Carries the 1-based position and the expected tokens."""

    def __init__(self, line: int, col: int, message: str, expected: Iterable[str] = ()):
        self.line = line
        self.col = col
        self.expected = tuple(sorted(set(expected)))
        self.message = message
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{line}:{col}: {message}{detail}")


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "name" | "kw" | "op" | "eof"
    text: str
    line: int
    col: int

    @property
    def pos(self) -> Pos:
        return (self.line, self.col)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, i = 1, 0, 0
    while i < len(source):
        m = _TOKEN_RE.match(source, i)
        if m is None:
            raise ParseError(line, i - line_start + 1, f"unexpected character {source[i]!r}")
        kind = m.lastgroup
        text = m.group()
        col = i - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "name":
            tokens.append(Token("kw" if text in KEYWORDS else "name", text, line, col))
        elif kind in ("int", "op"):
            tokens.append(Token(kind, text, line, col))
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1))
    return tokens


_STMT_END = frozenset({"end", "else", "elseif", "until", "loop", "ensure"})
_TYPE_NAMES = ("INTEGER", "BOOLEAN")


class Parser:
    def __init__(self, source: str):
        self.toks = tokenize(source)
        self.i = 0
        self.warnings: list[str] = []

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("kw", "op") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def error(self, message: str, expected: Iterable[str] = ()) -> ParseError:
        t = self.tok
        found = t.text if t.kind != "eof" else "end of input"
        return ParseError(t.line, t.col, f"{message}, found {found!r}", expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}", [text])
        return self.advance()

    def expect_name(self) -> Token:
        if self.tok.kind != "name":
            raise self.error("expected identifier", ["identifier"])
        return self.advance()

    def skip_semis(self) -> None:
        while self.at(";"):
            self.advance()

    # -- program structure

    def parse_program(self) -> Program:
        classes: list[ClassDecl] = []
        while self.tok.kind != "eof":
            classes.append(self.parse_class())
        if not classes:
            raise self.error("expected a class", ["class"])
        seen: set[str] = set()
        for c in classes:
            if c.name in seen:
                raise ParseError(*c.pos, f"duplicate class {c.name!r}")
            seen.add(c.name)
        return Program(tuple(classes), warnings=tuple(self.warnings))

    def parse_class(self) -> ClassDecl:
        start = self.expect("class")
        name = self.expect_name()
        if self.at("inherit"):
            raise self.error("inheritance is not supported")
        attrs: list[Attribute] = []
        methods: list[MethodDecl] = []
        names: set[str] = set()
        while not self.at("end"):
            if self.tok.kind == "eof" and methods:
                # the closing ``end`` of the last class may be left out
                self.warnings.append(f"{self.tok.line}:{self.tok.col}: class {name.text!r} closed by end of input")
                return ClassDecl(name.text, tuple(attrs), tuple(methods), pos=start.pos)
            if self.tok.kind != "name":
                raise self.error("expected feature or 'end'", ["identifier", "end"])
            feat = self.parse_feature()
            if feat.name in names:
                raise ParseError(*feat.pos, f"duplicate feature {feat.name!r} in class {name.text!r}")
            names.add(feat.name)
            (attrs if isinstance(feat, Attribute) else methods).append(feat)
        self.expect("end")
        return ClassDecl(name.text, tuple(attrs), tuple(methods), pos=start.pos)

    def parse_feature(self) -> Attribute | MethodDecl:
        name = self.expect_name()
        formals: tuple[tuple[str, TypeRef], ...] = ()
        if self.at("("):
            self.advance()
            formals = self.parse_formal_list(closing=")")
            self.expect(")")
        return_type = None
        if self.at(":"):
            self.advance()
            return_type = self.parse_type()
            if not formals and not self.at("require", "local", "do"):
                return Attribute(name.text, return_type, pos=name.pos)
        require: list[Expr] = []
        if self.at("require"):
            self.advance()
            while not self.at("local", "do"):
                if self.tok.kind == "eof":
                    raise self.error("unterminated require clause", ["local", "do"])
                require.append(self.parse_expr())
                self.skip_semis()
            if not require:
                raise self.error("empty require clause", ["expression"])
        locals_: tuple[tuple[str, TypeRef], ...] = ()
        if self.at("local"):
            self.advance()
            locals_ = self.parse_formal_list(closing="do")
        self.expect("do")
        body = self.parse_stmts()
        ensure: list[Expr] = []
        if self.at("ensure"):
            self.advance()
            while not self.at("end"):
                if self.tok.kind == "eof":
                    raise self.error("unterminated ensure clause", ["end"])
                ensure.append(self.parse_expr())
                self.skip_semis()
            self.warnings.append(f"{name.line}:{name.col}: postcondition of {name.text!r} ignored")
        self.expect("end")
        return MethodDecl(
            name.text, formals, return_type, tuple(require), locals_, body, tuple(ensure), pos=name.pos
        )

    def parse_formal_list(self, closing: str) -> tuple[tuple[str, TypeRef], ...]:
        out: list[tuple[str, TypeRef]] = []
        while not self.at(closing):
            names = [self.expect_name().text]
            while self.at(","):
                self.advance()
                names.append(self.expect_name().text)
            self.expect(":")
            t = self.parse_type()
            out.extend((n, t) for n in names)
            if self.at(",", ";"):
                self.advance()
            elif not self.at(closing) and self.tok.kind != "name":
                raise self.error("malformed declaration list", [closing, ",", ";"])
        if closing == ")" and not out:
            raise self.error("empty formal list", ["identifier"])
        seen: set[str] = set()
        for n, _ in out:
            if n in seen:
                raise self.error(f"duplicate name {n!r}")
            seen.add(n)
        return tuple(out)

    def parse_type(self) -> TypeRef:
        separate = False
        if self.at("separate"):
            self.advance()
            separate = True
        t = self.expect_name()
        if separate and t.text in _TYPE_NAMES:
            raise ParseError(t.line, t.col, f"{t.text} cannot be separate")
        return TypeRef(t.text, separate)

    # -- statements

    def parse_stmts(self) -> tuple[Stmt, ...]:
        out: list[Stmt] = []
        self.skip_semis()
        while not self.at(*_STMT_END):
            if self.tok.kind == "eof":
                raise self.error("unexpected end of input", ["end"])
            out.append(self.parse_stmt())
            self.skip_semis()
        return tuple(out)

    def parse_stmt(self) -> Stmt:
        t = self.tok
        if self.at("create"):
            self.advance()
            target = self.expect_name().text
            if self.at("."):
                self.advance()
                ctor = self.expect_name().text
                args, parens = self.parse_opt_args()
                return Create(target, ctor, args, parens, pos=t.pos)
            return Create(target, pos=t.pos)
        if self.at("if"):
            return self.parse_if()
        if self.at("from"):
            self.advance()
            init = self.parse_stmts()
            self.expect("until")
            cond = self.parse_expr()
            self.expect("loop")
            body = self.parse_stmts()
            self.expect("end")
            return Loop(init, cond, body, pos=t.pos)
        if self.at("separate"):
            self.advance()
            targets = [self.expect_name().text]
            while self.at(","):
                self.advance()
                targets.append(self.expect_name().text)
            self.expect("do")
            body = self.parse_stmts()
            self.expect("end")
            return SeparateBlock(tuple(targets), body, pos=t.pos)
        if t.kind == "name" and self.peek().kind == "op" and self.peek().text == ":=":
            self.advance()
            self.advance()
            if self.at(*_STMT_END) or self.tok.kind == "eof":
                raise self.error("expected expression after ':='", ["expression"])
            return Assign(t.text, self.parse_expr(), pos=t.pos)
        if t.kind == "name" or self.at("Current"):
            e = self.parse_postfix()
            if isinstance(e, Name):
                e = Call(None, e.ident, (), False, pos=e.pos)
            if not isinstance(e, Call):
                raise self.error("expected a call or assignment")
            return CallStmt(e, pos=t.pos)
        raise self.error(
            "expected statement", ["create", "if", "from", "separate", "identifier"]
        )

    def parse_if(self) -> If:
        t = self.advance()  # 'if' or 'elseif'
        cond = self.parse_expr()
        self.expect("then")
        then_body = self.parse_stmts()
        if self.at("elseif"):
            nested = self.parse_if()
            return If(cond, then_body, (nested,), True, pos=t.pos)
        else_body: tuple[Stmt, ...] = ()
        has_else = False
        if self.at("else"):
            self.advance()
            has_else = True
            else_body = self.parse_stmts()
        self.expect("end")
        return If(cond, then_body, else_body, has_else, pos=t.pos)

    # -- expressions

    def parse_opt_args(self) -> tuple[tuple[Expr, ...], bool]:
        if not self.at("("):
            return (), False
        self.advance()
        args: list[Expr] = []
        if not self.at(")"):
            args.append(self.parse_expr())
            while self.at(","):
                self.advance()
                args.append(self.parse_expr())
        self.expect(")")
        return tuple(args), True

    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.at("or"):
            t = self.advance()
            left = BinOp("or", left, self.parse_and(), pos=t.pos)
        return left

    def parse_and(self) -> Expr:
        left = self.parse_cmp()
        while self.at("and"):
            t = self.advance()
            left = BinOp("and", left, self.parse_cmp(), pos=t.pos)
        return left

    def parse_cmp(self) -> Expr:
        left = self.parse_add()
        if self.at("=", "/=", "<", "<=", ">", ">="):
            t = self.advance()
            left = BinOp(t.text, left, self.parse_add(), pos=t.pos)
        return left

    def parse_add(self) -> Expr:
        left = self.parse_mul()
        while self.at("+", "-"):
            t = self.advance()
            left = BinOp(t.text, left, self.parse_mul(), pos=t.pos)
        return left

    def parse_mul(self) -> Expr:
        left = self.parse_unary()
        while self.at("*"):
            t = self.advance()
            left = BinOp("*", left, self.parse_unary(), pos=t.pos)
        return left

    def parse_unary(self) -> Expr:
        if self.at("not", "-"):
            t = self.advance()
            return UnOp(t.text, self.parse_unary(), pos=t.pos)
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        e = self.parse_primary()
        while self.at("."):
            self.advance()
            name = self.expect_name()
            args, parens = self.parse_opt_args()
            e = Call(e, name.text, args, parens, pos=name.pos)
        return e

    def parse_primary(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return IntLit(int(t.text), pos=t.pos)
        if self.at("True", "False"):
            self.advance()
            return BoolLit(t.text == "True", pos=t.pos)
        if self.at("Void"):
            self.advance()
            return VoidLit(pos=t.pos)
        if self.at("Current"):
            self.advance()
            return CurrentRef(pos=t.pos)
        if self.at("("):
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.kind == "name":
            self.advance()
            if self.at("("):
                args, _ = self.parse_opt_args()
                return Call(None, t.text, args, True, pos=t.pos)
            return Name(t.text, pos=t.pos)
        raise self.error("expected expression", ["identifier", "integer", "(", "not", "-"])


def parse(source: str) -> Program:
    """Parse mini-SCOOP source text into a :class:`Program`.

    Raises :class:`ParseError` on malformed input, duplicate class or feature
    names, and ``inherit`` clauses.
    """
    return Parser(source).parse_program()


def parse_expr(source: str) -> Expr:
    p = Parser(source)
    e = p.parse_expr()
    if p.tok.kind != "eof":
        raise p.error("trailing input after expression")
    return e


def parse_file(path: str, encoding: Optional[str] = "utf-8") -> Program:
    with open(path, encoding=encoding) as fh:
        return parse(fh.read())
