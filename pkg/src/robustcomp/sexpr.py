"""S-expression concrete syntax for both languages.

Source programs look like
    (program (iface (f (-> nat nat))) (fun f (x nat) nat (+ x 1)))
and target programs like
    (program (iface f g) (fun f (x) (check x nat)))
Contexts are bare expressions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .syntax import (
    BinOp,
    BoolLit,
    Call,
    Check,
    Expr,
    Fail,
    Fun,
    Geq,
    If,
    IfaceEntry,
    Let,
    Num,
    Read,
    SrcContext,
    SrcProgram,
    TgtContext,
    TgtProgram,
    Ty,
    Var,
    Write,
)


class ParseError(Exception):
    def __init__(self, line: int, col: int, expected: str):
        self.line = line
        self.col = col
        self.expected = expected
        super().__init__(f"{line}:{col}: expected {expected}")


@dataclass
class _Tok:
    text: str
    line: int
    col: int


Sexp = Union[str, int, list]


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c.isspace():
            col += 1
            i += 1
        elif c == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif c in "()":
            toks.append(_Tok(c, line, col))
            col += 1
            i += 1
        else:
            start = i
            start_col = col
            while i < len(text) and not text[i].isspace() and text[i] not in "();":
                i += 1
                col += 1
            toks.append(_Tok(text[start:i], line, start_col))
    return toks


def _read(toks: list[_Tok], pos: int) -> tuple[Sexp, int, _Tok]:
    if pos >= len(toks):
        last = toks[-1] if toks else _Tok("", 1, 1)
        raise ParseError(last.line, last.col, "expression, found end of input")
    tok = toks[pos]
    if tok.text == "(":
        items = []
        pos += 1
        while pos < len(toks) and toks[pos].text != ")":
            item, pos, _ = _read(toks, pos)
            items.append(item)
        if pos >= len(toks):
            raise ParseError(tok.line, tok.col, "closing parenthesis")
        return items, pos + 1, tok
    if tok.text == ")":
        raise ParseError(tok.line, tok.col, "expression, found ')'")
    if tok.text.isdigit():
        return int(tok.text), pos + 1, tok
    return tok.text, pos + 1, tok


def read_sexp(text: str) -> Sexp:
    toks = _tokenize(text)
    if not toks:
        raise ParseError(1, 1, "expression, found empty input")
    sexp, pos, tok = _read(toks, 0)
    if pos != len(toks):
        extra = toks[pos]
        raise ParseError(extra.line, extra.col, "end of input")
    return sexp


def _err(tok_like: Sexp, expected: str) -> ParseError:
    return ParseError(1, 1, f"{expected}, found {tok_like!r}")


def _parse_ty(s: Sexp) -> Ty:
    if s == "nat":
        return Ty.NAT
    if s == "bool":
        return Ty.BOOL
    raise _err(s, "type 'nat' or 'bool'")


def parse_expr(s: Sexp, lang: str) -> Expr:
    if isinstance(s, int):
        return Num(s)
    if isinstance(s, str):
        if s == "true":
            return BoolLit(True)
        if s == "false":
            return BoolLit(False)
        if s == "fail":
            return Fail()
        if s in ("read", "write", "call", "let", "if", "check", "ret"):
            raise _err(s, "keyword used in operator position only")
        return Var(s)
    if not s:
        raise _err(s, "nonempty form")
    head = s[0]
    if head in ("+", "-", "*"):
        if len(s) != 3:
            raise _err(s, f"({head} e1 e2)")
        return BinOp(head, parse_expr(s[1], lang), parse_expr(s[2], lang))
    if head == ">=":
        if len(s) != 3:
            raise _err(s, "(>= e1 e2)")
        return Geq(parse_expr(s[1], lang), parse_expr(s[2], lang))
    if head == "let":
        if lang == "src":
            if len(s) != 5 or not isinstance(s[1], str):
                raise _err(s, "(let x ty e1 e2)")
            return Let(s[1], _parse_ty(s[2]), parse_expr(s[3], lang), parse_expr(s[4], lang))
        if len(s) != 4 or not isinstance(s[1], str):
            raise _err(s, "(let x e1 e2)")
        return Let(s[1], None, parse_expr(s[2], lang), parse_expr(s[3], lang))
    if head == "if":
        if len(s) != 4:
            raise _err(s, "(if e1 e2 e3)")
        return If(parse_expr(s[1], lang), parse_expr(s[2], lang), parse_expr(s[3], lang))
    if head == "call":
        if len(s) != 3 or not isinstance(s[1], str):
            raise _err(s, "(call f e)")
        return Call(s[1], parse_expr(s[2], lang))
    if head == "read":
        if len(s) != 1:
            raise _err(s, "(read)")
        return Read()
    if head == "write":
        if len(s) != 2:
            raise _err(s, "(write e)")
        return Write(parse_expr(s[1], lang))
    if head == "check":
        if lang != "tgt":
            raise _err(s, "source expression (check is target-only)")
        if len(s) != 3:
            raise _err(s, "(check e ty)")
        return Check(parse_expr(s[1], lang), _parse_ty(s[2]))
    raise _err(s, "expression form")


def parse_iface_entry(s: Sexp) -> IfaceEntry:
    # (f (-> nat nat))
    if (
        not isinstance(s, list)
        or len(s) != 2
        or not isinstance(s[0], str)
        or not isinstance(s[1], list)
        or len(s[1]) != 3
        or s[1][0] != "->"
    ):
        raise _err(s, "(f (-> ty ty))")
    return IfaceEntry(s[0], _parse_ty(s[1][1]), _parse_ty(s[1][2]))


def parse_iface(s: Sexp) -> tuple[IfaceEntry, ...]:
    if not isinstance(s, list) or not s or s[0] != "iface":
        raise _err(s, "(iface ...)")
    return tuple(parse_iface_entry(item) for item in s[1:])


def parse_program(text: str, lang: str) -> Union[SrcProgram, TgtProgram]:
    s = read_sexp(text)
    if not isinstance(s, list) or not s or s[0] != "program":
        raise _err(s, "(program (iface ...) (fun ...) ...)")
    if len(s) < 2 or not isinstance(s[1], list) or not s[1] or s[1][0] != "iface":
        raise _err(s, "(iface ...) as the first program form")
    iface_s = s[1]
    funs = []
    for f in s[2:]:
        if not isinstance(f, list) or not f or f[0] != "fun":
            raise _err(f, "(fun ...)")
        if lang == "src":
            # (fun f (x nat) nat body)
            if (
                len(f) != 5
                or not isinstance(f[1], str)
                or not isinstance(f[2], list)
                or len(f[2]) != 2
                or not isinstance(f[2][0], str)
            ):
                raise _err(f, "(fun f (x ty) ty body)")
            funs.append(
                Fun(f[1], f[2][0], _parse_ty(f[2][1]), _parse_ty(f[3]), parse_expr(f[4], lang))
            )
        else:
            # (fun f (x) body)
            if (
                len(f) != 4
                or not isinstance(f[1], str)
                or not isinstance(f[2], list)
                or len(f[2]) != 1
                or not isinstance(f[2][0], str)
            ):
                raise _err(f, "(fun f (x) body)")
            funs.append(Fun(f[1], f[2][0], None, None, parse_expr(f[3], lang)))
    if lang == "src":
        return SrcProgram(parse_iface(iface_s), tuple(funs))
    names = []
    for item in iface_s[1:]:
        if not isinstance(item, str):
            raise _err(item, "bare interface name")
        names.append(item)
    return TgtProgram(tuple(names), tuple(funs))


def parse_context(text: str, lang: str) -> Union[SrcContext, TgtContext]:
    body = parse_expr(read_sexp(text), lang)
    return SrcContext(body) if lang == "src" else TgtContext(body)


def parse_iface_file(text: str) -> tuple[IfaceEntry, ...]:
    return parse_iface(read_sexp(text))


def iface_to_sexpr(iface: tuple[IfaceEntry, ...]) -> str:
    entries = " ".join(
        f"({i.fname} (-> {i.arg_ty.value} {i.ret_ty.value}))" for i in iface
    )
    return f"(iface {entries})" if entries else "(iface)"
