"""
Effex Surface Syntax
====================

Parser and pretty-printer shared by the four calculi. The grammar is
documented in ``docs/grammar.md``.

Parsing desugars nested patterns, multi-argument functions, computation
arguments (``M N`` becomes ``let z <- N in M z``) and inlines earlier
definitions, so the resulting terms use only the abstract syntax of
``effex_ast``. Printing invents binder names from the binder depth and never
emits sugar, which keeps ``parse(print(t))`` alpha-equal to ``t``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from ..utils.errors import SurfaceError
from .effex_ast import (
    FLS,
    TRU,
    App,
    Case,
    Comp,
    CPair,
    Dollar,
    Force,
    Handle,
    Handler,
    Inj,
    Lam,
    Let,
    MonadDef,
    Node,
    OpCall,
    Pair,
    Prj,
    Reflect,
    Reify,
    ResetType,
    Return,
    Shift0,
    Split,
    Term,
    Thunk,
    UnitV,
    Value,
    Var,
    calculus_display,
)
from .effex_types import (
    BIT,
    EMPTY,
    Calculus,
    CProd,
    CType,
    DelStack,
    Effect,
    EffOps,
    Fun,
    HandlerType,
    MonStack,
    Prod,
    Pure,
    Returner,
    TyVar,
    UnitT,
    UType,
    Variant,
    VType,
    del_stack,
    mon_stack,
    ops_effect,
)

logger = logging.getLogger(__name__)

KEYWORDS = frozenset(
    "return let in thunk force fun handle with reflect reify where shift0 reset as case of "
    "split inj prj1 prj2".split()
)
DECLARATIONS = frozenset("type effect monad handler def main".split())
RESERVED = KEYWORDS | DECLARATIONS

EXTENSIONS = {
    "handle": Calculus.EFF,
    "reflect": Calculus.MON,
    "reify": Calculus.MON,
    "shift0": Calculus.DEL,
    "reset": Calculus.DEL,
}

FILE_EXTENSIONS = {".mam": Calculus.MAM, ".eff": Calculus.EFF, ".mon": Calculus.MON, ".del": Calculus.DEL}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<num>[0-9]+)
  | (?P<sym>>>=|->|<-|=>|[()\[\]{}<>,:;|*&!=.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | kw | num | sym | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise SurfaceError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        value = match.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = match.end()
        elif kind == "ident":
            tokens.append(Token("kw" if value in RESERVED else "ident", value, line, col))
        elif kind in ("num", "sym"):
            tokens.append(Token(kind, value, line, col))
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# Source files
# ---------------------------------------------------------------------------


@dataclass
class SourceFile:
    """A parsed program: declarations in order plus an optional ``main``."""

    calculus: Calculus
    definitions: List[Tuple[str, Value]] = field(default_factory=list)
    main: Optional[Comp] = None
    signatures: Dict[str, VType] = field(default_factory=dict)
    types: Dict[str, VType] = field(default_factory=dict)
    effects: Dict[str, Effect] = field(default_factory=dict)
    monads: Dict[str, MonadDef] = field(default_factory=dict)
    handlers: Dict[str, Handler] = field(default_factory=dict)

    def definition(self, name: str) -> Value:
        for def_name, value in self.definitions:
            if def_name == name:
                return value
        raise KeyError(name)

    def main_term(self) -> Term:
        if self.main is None:
            raise ValueError("source file has no main computation")
        return Term(self.calculus, self.main)


@dataclass(frozen=True)
class Pattern:
    kind: str  # var | wild | unit | pair
    name: Optional[str] = None
    parts: Tuple["Pattern", ...] = ()


def calculus_for_path(path: str) -> Calculus:
    for ext, calc in FILE_EXTENSIONS.items():
        if path.endswith(ext):
            return calc
    raise ValueError(f"cannot infer calculus from {path!r}; use --calculus")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class Parser:
    """Recursive-descent parser over a token list, with limited backtracking."""

    def __init__(self, text: str, calculus: Calculus, context: Optional[SourceFile] = None):
        self.tokens = tokenize(text)
        self.pos = 0
        self.calculus = calculus
        self.source = SourceFile(calculus)
        self.source.types["bit"] = BIT
        if context is not None:
            self.source.types.update(context.types)
            self.source.effects.update(context.effects)
            self.source.monads.update(context.monads)
            self.source.handlers.update(context.handlers)
            self.source.definitions.extend(context.definitions)
            self.source.signatures.update(context.signatures)
        self.defs: Dict[str, Value] = dict(self.source.definitions)
        self.scope: List[Optional[str]] = []
        self._hidden = 0

    # -- token helpers ----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def at(self, text: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.kind in ("sym", "kw") and tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def ident(self, what: str = "identifier") -> str:
        tok = self.peek()
        if tok.kind != "ident":
            self.fail(f"expected {what}")
        self.pos += 1
        return tok.text

    def fail(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise SurfaceError(f"{message}, found {found}", tok.line, tok.col)

    # -- scope ------------------------------------------------------------

    def lookup(self, name: str) -> Optional[int]:
        for i in range(len(self.scope) - 1, -1, -1):
            if self.scope[i] == name:
                return len(self.scope) - 1 - i
        return None

    def hidden_name(self) -> str:
        self._hidden += 1
        return f"%{self._hidden}"

    def under(self, patterns: Sequence[Pattern], body: Callable[[], Comp]) -> Comp:
        """Parse ``body`` under one binder per pattern, destructuring pairs."""
        pending = []
        for pat in patterns:
            if pat.kind == "var":
                self.scope.append(pat.name)
            else:
                hidden = self.hidden_name()
                self.scope.append(hidden)
                if pat.kind == "pair":
                    pending.append((hidden, pat))
        try:
            return self._destructure(pending, body)
        finally:
            del self.scope[len(self.scope) - len(patterns):]

    def _destructure(self, pending, body: Callable[[], Comp]) -> Comp:
        if not pending:
            return body()
        (hidden, pat), rest = pending[0], pending[1:]
        index = self.lookup(hidden)
        return Split(Var(index), self.under(pat.parts, lambda: self._destructure(rest, body)))

    def closed(self, fn: Callable[[], Node]) -> Node:
        saved, self.scope = self.scope, []
        try:
            return fn()
        finally:
            self.scope = saved

    def require(self, keyword: str) -> None:
        owner = EXTENSIONS.get(keyword)
        if owner is not None and owner is not self.calculus:
            tok = self.peek()
            raise SurfaceError(
                f"{keyword} not available in {calculus_display(self.calculus)}", tok.line, tok.col
            )

    # -- files ------------------------------------------------------------

    def source_file(self) -> SourceFile:
        src = self.source
        if self.peek().kind != "eof" and not (
            self.peek().kind == "kw" and self.peek().text in DECLARATIONS
        ):
            src.main = self.comp()
        while self.peek().kind != "eof":
            self.declaration()
        return src

    def declaration(self) -> None:
        src = self.source
        tok = self.peek()
        if self.accept("type"):
            name = self.ident("type name")
            self.expect("=")
            src.types[name] = self.vtype()
        elif self.accept("effect"):
            name = self.ident("effect name")
            self.expect("=")
            src.effects[name] = self.effect()
        elif self.accept("monad"):
            name = self.ident("monad name")
            self.expect("=")
            src.monads[name] = self.monad_def().named(name)
        elif self.accept("handler"):
            self.require("handle")
            name = self.ident("handler name")
            ann = self.handler_type() if self.accept(":") else None
            self.expect("=")
            handler = self.handler()
            if ann is not None:
                handler = Handler(handler.ret, handler.ops, ann)
            src.handlers[name] = handler
        elif self.accept("def"):
            name = self.ident("definition name")
            if name in self.defs:
                self.fail(f"duplicate definition {name!r}", tok)
            sig = self.vtype() if self.accept(":") else None
            self.expect("=")
            value = self.value()
            if sig is not None:
                value = annotate(value, sig)
                src.signatures[name] = sig
            src.definitions.append((name, value))
            self.defs[name] = value
        elif self.accept("main"):
            if src.main is not None:
                self.fail("duplicate main", tok)
            self.expect("=")
            src.main = self.comp()
        else:
            self.fail("expected a declaration")

    # -- patterns ---------------------------------------------------------

    def pattern(self) -> Pattern:
        tok = self.peek()
        if tok.kind == "ident":
            self.pos += 1
            if tok.text == "_":
                return Pattern("wild")
            return Pattern("var", tok.text)
        if self.accept("("):
            if self.accept(")"):
                return Pattern("unit")
            first = self.pattern()
            if self.accept(")"):
                return first
            self.expect(",")
            second = self.pattern()
            self.expect(")")
            return Pattern("pair", parts=(first, second))
        self.fail("expected a pattern")

    # -- computations -----------------------------------------------------

    def comp(self) -> Comp:
        tok = self.peek()
        if tok.kind == "kw":
            if self.accept("let"):
                pat = self.pattern()
                self.expect("<-")
                bound = self.comp()
                self.expect("in")
                return Let(bound, self.under([pat], self.comp))
            if self.accept("fun"):
                pats = [self.pattern()]
                while not self.at("->"):
                    pats.append(self.pattern())
                self.expect("->")
                return self._lams(pats)
            if self.accept("split"):
                scrutinee = self.value_atom()
                self.expect("as")
                self.expect("(")
                first = self.pattern()
                self.expect(",")
                second = self.pattern()
                self.expect(")")
                self.expect("in")
                return Split(scrutinee, self.under([first, second], self.comp))
            if self.accept("case"):
                return self.case()
            if tok.text == "handle":
                self.require("handle")
                self.pos += 1
                body = self.comp()
                self.expect("with")
                return Handle(body, self.handler_ref())
            if tok.text == "reify":
                self.require("reify")
                self.pos += 1
                self.expect("[")
                monad = self.monad_ref()
                self.expect("]")
                return Reify(monad, self.comp())
            if tok.text == "reflect":
                self.require("reflect")
                self.pos += 1
                return Reflect(self.comp())
            if tok.text == "shift0":
                self.require("shift0")
                self.pos += 1
                pat = self.pattern()
                self.expect("->")
                return Shift0(self.under([pat], self.comp))
            if tok.text == "reset":
                self.require("reset")
                self.pos += 1
                ann = None
                if self.accept("["):
                    effect = self.effect()
                    self.expect(";")
                    answer = self.ctype()
                    self.expect("]")
                    ann = ResetType(effect, answer)
                body = self.comp()
                self.expect("as")
                pat = self.pattern()
                self.expect("in")
                return Dollar(body, self.under([pat], self.comp), ann)
        return self.application()

    def _lams(self, pats: List[Pattern]) -> Comp:
        if not pats:
            return self.comp()
        return Lam(self.under([pats[0]], lambda: self._lams(pats[1:])))

    def case(self) -> Comp:
        scrutinee = self.value_atom()
        self.expect("of")
        self.expect("{")
        arms: Dict[str, Comp] = {}
        if not self.at("}"):
            while True:
                tok = self.peek()
                label = self.ident("label")
                if label in arms:
                    self.fail(f"duplicate case arm {label!r}", tok)
                pat = Pattern("wild") if self.at("->") else self.pattern()
                self.expect("->")
                arms[label] = self.under([pat], self.comp)
                if not self.accept("|"):
                    break
        self.expect("}")
        ann = self.ctype() if self.accept(":") else None
        return Case(scrutinee, tuple(sorted(arms.items())), ann)

    def application(self) -> Comp:
        result = self.head()
        while self.starts_argument():
            arg = self.argument()
            if isinstance(arg, Value):
                result = App(result, arg)
            else:
                result = Let(arg, App(result.shift(1), Var(0)))
        return result

    def starts_argument(self) -> bool:
        tok = self.peek()
        return tok.kind == "ident" or self.at("(")

    def argument(self) -> Union[Value, Comp]:
        if self.at("("):
            saved = self.pos
            try:
                return self.value_atom()
            except SurfaceError:
                self.pos = saved
            self.expect("(")
            comp = self.comp()
            self.expect(")")
            return comp
        return self.value_atom()

    def head(self) -> Comp:
        tok = self.peek()
        if self.accept("return"):
            return Return(self.value())
        if self.accept("force"):
            return Force(self.value_atom())
        if tok.kind == "kw" and tok.text in ("prj1", "prj2"):
            self.pos += 1
            return Prj(1 if tok.text == "prj1" else 2, self.head())
        if self.accept("("):
            comp = self.comp()
            self.expect(")")
            return comp
        if self.accept("<"):
            first = self.comp()
            self.expect(",")
            second = self.comp()
            self.expect(">")
            return CPair(first, second)
        if tok.kind == "ident":
            if self.lookup(tok.text) is not None or tok.text in self.defs:
                self.fail(f"{tok.text!r} is a value; use 'force {tok.text}' to run it")
            if self.calculus is Calculus.EFF:
                self.pos += 1
                return OpCall(tok.text, self.value_atom())
            self.fail(f"unbound name {tok.text!r}")
        self.fail("expected a computation")

    # -- handlers and monads ---------------------------------------------

    def handler_ref(self) -> Handler:
        tok = self.peek()
        if tok.kind == "ident":
            self.pos += 1
            if tok.text not in self.source.handlers:
                self.fail(f"unknown handler {tok.text!r}", tok)
            return self.source.handlers[tok.text]
        return self.handler()

    def handler(self) -> Handler:
        self.expect("{")
        ret: Optional[Comp] = None
        ops: Dict[str, Comp] = {}
        while True:
            tok = self.peek()
            if self.accept("return"):
                if ret is not None:
                    self.fail("duplicate return clause", tok)
                pat = self.pattern()
                self.expect("->")
                ret = self.under([pat], self.comp)
            else:
                op = self.ident("operation name")
                if op in ops:
                    self.fail(f"duplicate clause for {op!r}", tok)
                self.expect("(")
                param = self.pattern()
                self.expect(";")
                cont = self.pattern()
                self.expect(")")
                self.expect("->")
                ops[op] = self.under([param, cont], self.comp)
            if not self.accept("|"):
                break
        close = self.expect("}")
        if ret is None:
            self.fail("handler lacks a return clause", close)
        ann = self.handler_type() if self.accept(":") else None
        return Handler(ret, tuple(sorted(ops.items())), ann)

    def monad_ref(self) -> MonadDef:
        tok = self.peek()
        if tok.kind == "ident":
            self.pos += 1
            if tok.text not in self.source.monads:
                self.fail(f"unknown monad {tok.text!r}", tok)
            return self.source.monads[tok.text]
        return self.monad_def()

    def monad_def(self) -> MonadDef:
        self.expect("where")
        type_var = self.ident("type variable")
        self.expect(".")
        carrier = self.ctype()
        self.expect("{")
        self.expect("return")
        unit_pat = self.pattern()
        self.expect("->")
        unit_body = self.closed(lambda: self.under([unit_pat], self.comp))
        self.expect("|")
        bound = self.pattern()
        self.expect(">>=")
        cont = self.pattern()
        self.expect("->")
        bind_body = self.closed(lambda: self.under([bound, cont], self.comp))
        self.expect("}")
        return MonadDef.of(type_var, carrier, unit_body, bind_body)

    # -- values -----------------------------------------------------------

    def value(self) -> Value:
        if self.accept("thunk"):
            return Thunk(self.comp())
        if self.accept("inj"):
            label = self.ident("label")
            return Inj(label, self.value_atom())
        return self.value_atom()

    def value_atom(self) -> Value:
        tok = self.peek()
        if tok.kind == "ident":
            self.pos += 1
            index = self.lookup(tok.text)
            if index is not None:
                return Var(index)
            if tok.text in self.defs:
                return self.defs[tok.text]
            if tok.text == "tru":
                return TRU
            if tok.text == "fls":
                return FLS
            if tok.text[0].isupper():
                return Inj(tok.text, UnitV())
            self.fail(f"unbound variable {tok.text!r}", tok)
        if self.accept("("):
            if self.accept(")"):
                return UnitV()
            first = self.value()
            if self.accept(","):
                second = self.value()
                self.expect(")")
                return Pair(first, second)
            if self.accept(":"):
                ty = self.vtype()
                self.expect(")")
                return annotate(first, ty)
            self.expect(")")
            return first
        self.fail("expected a value")

    # -- types ------------------------------------------------------------

    def vtype(self) -> VType:
        left = self.vatom()
        if self.accept("*"):
            return Prod(left, self.vtype())
        return left

    def vatom(self) -> VType:
        tok = self.peek()
        if tok.kind == "num" and tok.text in ("0", "1"):
            self.pos += 1
            return UnitT() if tok.text == "1" else EMPTY
        if tok.kind == "ident":
            if tok.text == "U":
                self.pos += 1
                effect: Effect = Pure()
                nxt = self.peek()
                if self.at("{") or self.at("[") or (
                    nxt.kind == "ident" and nxt.text in self.source.effects
                ):
                    effect = self.effect()
                return UType(effect, self.catom())
            self.pos += 1
            if tok.text in self.source.types:
                return self.source.types[tok.text]
            return TyVar(tok.text)
        if self.accept("{"):
            arms: Dict[str, VType] = {}
            if not self.at("}"):
                while True:
                    label_tok = self.peek()
                    label = self.ident("label")
                    if label in arms:
                        self.fail(f"duplicate label {label!r}", label_tok)
                    self.expect(":")
                    arms[label] = self.vtype()
                    if not self.accept(","):
                        break
            self.expect("}")
            return Variant.of(arms)
        if self.accept("("):
            ty = self.vtype()
            self.expect(")")
            return ty
        self.fail("expected a value type")

    def ctype(self) -> CType:
        saved = self.pos
        try:
            arg = self.vtype()
            if self.accept("->"):
                return Fun(arg, self.ctype())
        except SurfaceError:
            pass
        self.pos = saved
        left = self.catom()
        if self.accept("&"):
            return CProd(left, self.ctype())
        return left

    def catom(self) -> CType:
        tok = self.peek()
        if tok.kind == "ident" and tok.text == "F":
            self.pos += 1
            return Returner(self.vatom())
        if self.accept("("):
            ty = self.ctype()
            self.expect(")")
            return ty
        self.fail("expected a computation type")

    def effect(self) -> Effect:
        tok = self.peek()
        if tok.kind == "ident":
            self.pos += 1
            if tok.text not in self.source.effects:
                self.fail(f"unknown effect {tok.text!r}", tok)
            return self.source.effects[tok.text]
        if self.accept("{"):
            ops: Dict[str, Tuple[VType, VType]] = {}
            if not self.at("}"):
                if self.calculus is not Calculus.EFF:
                    self.fail(
                        f"operation effects not available in {calculus_display(self.calculus)}"
                    )
                while True:
                    op_tok = self.peek()
                    op = self.ident("operation name")
                    if op in ops:
                        self.fail(f"duplicate operation {op!r}", op_tok)
                    self.expect(":")
                    param = self.vtype()
                    self.expect("->")
                    ops[op] = (param, self.vtype())
                    if not self.accept(","):
                        break
            self.expect("}")
            return ops_effect(ops)
        if self.accept("["):
            layers: list = []
            if not self.at("]"):
                if self.calculus not in (Calculus.MON, Calculus.DEL):
                    self.fail(f"effect stacks not available in {calculus_display(self.calculus)}")
                while True:
                    layers.extend(self.stack_item())
                    if not self.accept(","):
                        break
            self.expect("]")
            if self.calculus is Calculus.MON:
                return mon_stack(layers)
            return del_stack(layers)
        self.fail("expected an effect")

    def stack_item(self) -> list:
        tok = self.peek()
        if tok.kind == "ident" and tok.text in self.source.effects:
            self.pos += 1
            alias = self.source.effects[tok.text]
            return list(alias.layers) if isinstance(alias, (MonStack, DelStack)) else []
        if self.calculus is Calculus.MON:
            return [self.monad_ref()]
        return [self.ctype()]

    def handler_type(self) -> HandlerType:
        in_vtype = self.vtype()
        self.expect("!")
        in_effect = self.effect()
        self.expect("=>")
        out_ctype = self.ctype()
        self.expect("!")
        return HandlerType(in_vtype, in_effect, out_ctype, self.effect())

    def finish(self) -> None:
        if self.peek().kind != "eof":
            self.fail("unexpected trailing input")


def annotate(value: Value, ty: VType) -> Value:
    """Push a type annotation down to the injections and thunks it describes."""
    if isinstance(value, Inj) and isinstance(ty, Variant):
        return Inj(value.label, value.payload, ty)
    if isinstance(value, Thunk) and isinstance(ty, UType):
        return Thunk(value.body, ty)
    if isinstance(value, Pair) and isinstance(ty, Prod):
        return Pair(annotate(value.fst, ty.fst), annotate(value.snd, ty.snd))
    return value


# ---------------------------------------------------------------------------
# Public parsing entry points
# ---------------------------------------------------------------------------


def parse(text: str, calculus: Calculus) -> SourceFile:
    """
    Parse a source file (or a bare computation, which becomes ``main``).

    Raises:
        SurfaceError: On lexical or syntax errors, with line and column
    """
    parser = Parser(text, calculus)
    source = parser.source_file()
    parser.finish()
    logger.debug(
        f"parsed {calculus.value} source: {len(source.definitions)} definition(s), "
        f"main={source.main is not None}"
    )
    return source


def parse_comp(text: str, calculus: Calculus, context: Optional[SourceFile] = None) -> Comp:
    parser = Parser(text, calculus, context)
    comp = parser.comp()
    parser.finish()
    return comp


def parse_value(text: str, calculus: Calculus, context: Optional[SourceFile] = None) -> Value:
    parser = Parser(text, calculus, context)
    value = parser.value()
    parser.finish()
    return value


def parse_type(text: str, calculus: Calculus, context: Optional[SourceFile] = None):
    """Parse a value type, falling back to a computation type."""
    parser = Parser(text, calculus, context)
    try:
        ty = parser.vtype()
        parser.finish()
        return ty
    except SurfaceError:
        parser = Parser(text, calculus, context)
        cty = parser.ctype()
        parser.finish()
        return cty


def parse_effect(text: str, calculus: Calculus, context: Optional[SourceFile] = None) -> Effect:
    parser = Parser(text, calculus, context)
    effect = parser.effect()
    parser.finish()
    return effect


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

OPEN = (Let, Lam, Split, Case, Handle, Reify, Reflect, Shift0, Dollar)
HEADS = (App, Force, Return, Prj, OpCall, CPair)


class Printer:
    """Pretty-printer inventing binder names from the binder depth."""

    def __init__(self, avoid: Sequence[str] = ()):
        self.avoid = set(avoid) | RESERVED | {"tru", "fls", "bit", "U", "F"}

    def fresh(self, names: List[str]) -> str:
        n = len(names)
        for prefix in ("x", "v", "w", "z"):
            candidate = f"{prefix}{n}"
            if candidate not in self.avoid:
                return candidate
        return f"x{n}_"

    # -- values -----------------------------------------------------------

    def value(self, v: Value, names: List[str], atom: bool = False) -> str:
        if isinstance(v, Var):
            if v.index >= len(names):
                return f"?{v.index}"
            return names[len(names) - 1 - v.index]
        if isinstance(v, UnitV):
            return "()"
        if isinstance(v, Pair):
            return f"({self.value(v.fst, names)}, {self.value(v.snd, names)})"
        if isinstance(v, Inj):
            if v == TRU:
                return "tru"
            if v == FLS:
                return "fls"
            if v.ann is None:
                if isinstance(v.payload, UnitV) and v.label[0].isupper() and v.label not in self.avoid:
                    return v.label
                text = f"inj {v.label} {self.value(v.payload, names, atom=True)}"
                return f"({text})" if atom else text
            inner = f"inj {v.label} {self.value(v.payload, names, atom=True)}"
            return f"({inner} : {self.type(v.ann)})"
        if isinstance(v, Thunk):
            if v.ann is not None:
                # an open body ending in a case would swallow the annotation
                return f"(thunk {self.comp(v.body, names, level=1)} : {self.type(v.ann)})"
            text = f"thunk {self.comp(v.body, names)}"
            return f"({text})" if atom else text
        raise TypeError(f"not a value: {v!r}")

    # -- computations -----------------------------------------------------

    def comp(self, m: Comp, names: List[str], level: int = 0) -> str:
        if isinstance(m, OPEN) and level > 0:
            return f"({self.comp(m, names)})"
        if isinstance(m, Return):
            return f"return {self.value(m.value, names, atom=level > 0)}"
        if isinstance(m, Force):
            return f"force {self.value(m.value, names, atom=True)}"
        if isinstance(m, App):
            return f"{self.head(m.fun, names)} {self.value(m.arg, names, atom=True)}"
        if isinstance(m, Prj):
            return f"prj{m.side} {self.head(m.comp, names, operand=True)}"
        if isinstance(m, CPair):
            return f"<{self.comp(m.fst, names)}, {self.comp(m.snd, names)}>"
        if isinstance(m, OpCall):
            return f"{m.op} {self.value(m.arg, names, atom=True)}"
        if isinstance(m, Let):
            x = self.fresh(names)
            bound = self.comp(m.bound, names)
            return f"let {x} <- {bound} in {self.comp(m.body, names + [x])}"
        if isinstance(m, Lam):
            x = self.fresh(names)
            return f"fun {x} -> {self.comp(m.body, names + [x])}"
        if isinstance(m, Split):
            x = self.fresh(names)
            y = self.fresh(names + [x])
            scrutinee = self.value(m.scrutinee, names, atom=True)
            return f"split {scrutinee} as ({x}, {y}) in {self.comp(m.body, names + [x, y])}"
        if isinstance(m, Case):
            x = self.fresh(names)
            arms = " | ".join(
                f"{label} {x} -> {self.comp(body, names + [x])}" for label, body in m.arms
            )
            text = f"case {self.value(m.scrutinee, names, atom=True)} of {{{' ' + arms + ' ' if arms else ''}}}"
            if m.ann is not None:
                text += f" : {self.type(m.ann)}"
            return text
        if isinstance(m, Handle):
            return f"handle {self.comp(m.body, names)} with {self.handler(m.handler, names)}"
        if isinstance(m, Reify):
            return f"reify[{self.monad(m.monad)}] {self.comp(m.body, names)}"
        if isinstance(m, Reflect):
            return f"reflect {self.comp(m.body, names)}"
        if isinstance(m, Shift0):
            k = self.fresh(names)
            return f"shift0 {k} -> {self.comp(m.body, names + [k])}"
        if isinstance(m, Dollar):
            x = self.fresh(names)
            ann = ""
            if m.ann is not None:
                ann = f"[{self.type(m.ann.effect)}; {self.type(m.ann.answer)}]"
            body = self.comp(m.body, names)
            return f"reset{ann} {body} as {x} in {self.comp(m.cont, names + [x])}"
        raise TypeError(f"not a computation: {m!r}")

    def head(self, m: Comp, names: List[str], operand: bool = False) -> str:
        if operand and isinstance(m, App):
            return f"({self.comp(m, names)})"
        if isinstance(m, HEADS):
            return self.comp(m, names, level=1)
        return f"({self.comp(m, names)})"

    def handler(self, h: Handler, names: List[str]) -> str:
        x = self.fresh(names)
        clauses = [f"return {x} -> {self.comp(h.ret, names + [x])}"]
        for op, body in h.ops:
            p = self.fresh(names)
            k = self.fresh(names + [p])
            clauses.append(f"{op}({p}; {k}) -> {self.comp(body, names + [p, k])}")
        text = "{ " + " | ".join(clauses) + " }"
        if h.ann is not None:
            text += f" : {self.type(h.ann)}"
        return text

    def monad(self, m: MonadDef) -> str:
        a = m.type_var
        x = self.fresh([])
        y = self.fresh([])
        f = self.fresh([y])
        return (
            f"where {a}. {self.type(m.carrier)} {{ return {x} -> {self.comp(m.unit_body, [x])}"
            f" | {y} >>= {f} -> {self.comp(m.bind_body, [y, f])} }}"
        )

    # -- types ------------------------------------------------------------

    def type(self, ty) -> str:
        if isinstance(ty, VType):
            return self.vtype(ty)
        if isinstance(ty, CType):
            return self.ctype(ty)
        if isinstance(ty, Effect):
            return self.effect(ty)
        if isinstance(ty, HandlerType):
            return (
                f"{self.vtype(ty.in_vtype)} ! {self.effect(ty.in_effect)} => "
                f"{self.ctype(ty.out_ctype)} ! {self.effect(ty.out_effect)}"
            )
        raise TypeError(f"not a type: {ty!r}")

    def vtype(self, ty: VType, atom: bool = False) -> str:
        if isinstance(ty, TyVar):
            return ty.name
        if isinstance(ty, UnitT):
            return "1"
        if ty == BIT:
            return "bit"
        if ty == EMPTY:
            return "0"
        if isinstance(ty, Variant):
            return "{" + ", ".join(f"{lab}: {self.vtype(t)}" for lab, t in ty.arms) + "}"
        if isinstance(ty, Prod):
            text = f"{self.vtype(ty.fst, atom=True)} * {self.vtype(ty.snd)}"
            return f"({text})" if atom else text
        if isinstance(ty, UType):
            eff = "" if isinstance(ty.effect, Pure) else f"{self.effect(ty.effect)} "
            text = f"U {eff}{self.catom(ty.ctype)}"
            return f"({text})" if atom else text
        raise TypeError(f"not a value type: {ty!r}")

    def ctype(self, ty: CType) -> str:
        if isinstance(ty, Fun):
            return f"{self.vtype(ty.arg)} -> {self.ctype(ty.result)}"
        if isinstance(ty, CProd):
            return f"{self.catom(ty.fst)} & {self.ctype(ty.snd)}"
        return self.catom(ty)

    def catom(self, ty: CType) -> str:
        if isinstance(ty, Returner):
            return f"F {self.vtype(ty.vtype, atom=True)}"
        return f"({self.ctype(ty)})"

    def effect(self, eff: Effect) -> str:
        if isinstance(eff, Pure):
            return "{}"
        if isinstance(eff, EffOps):
            return "{" + ", ".join(
                f"{op}: {self.vtype(p)} -> {self.vtype(r)}" for op, p, r in eff.ops
            ) + "}"
        if isinstance(eff, MonStack):
            return "[" + ", ".join(self.monad(m) for m in eff.layers) + "]"
        if isinstance(eff, DelStack):
            return "[" + ", ".join(self.ctype(c) for c in eff.layers) + "]"
        raise TypeError(f"not an effect: {eff!r}")


def collect_ops(node: Node, acc: Optional[set] = None) -> set:
    """Operation names used in ``node``; the printer keeps binder names away from them."""
    acc = set() if acc is None else acc
    if isinstance(node, OpCall):
        acc.add(node.op)
    if isinstance(node, Handler):
        acc.update(node.op_names)
    for _, child, _, _ in node.children():
        collect_ops(child, acc)
    return acc


def print_term(t: Union[Node, Term, SourceFile]) -> str:
    """Print a term, a tagged term or a whole source file."""
    if isinstance(t, SourceFile):
        return print_source(t)
    if isinstance(t, Term):
        t = t.body
    printer = Printer(collect_ops(t))
    if isinstance(t, Value):
        return printer.value(t, [])
    if isinstance(t, Comp):
        return printer.comp(t, [])
    if isinstance(t, Handler):
        return printer.handler(t, [])
    if isinstance(t, MonadDef):
        return printer.monad(t)
    raise TypeError(f"cannot print {t!r}")


def print_type(ty) -> str:
    return Printer().type(ty)


def print_source(src: SourceFile) -> str:
    ops: set = set()
    for _, value in src.definitions:
        collect_ops(value, ops)
    if src.main is not None:
        collect_ops(src.main, ops)
    printer = Printer(ops | {name for name, _ in src.definitions})
    lines: List[str] = []
    for name, ty in src.types.items():
        if name != "bit":
            lines.append(f"type {name} = {printer.vtype(ty)}")
    for name, eff in src.effects.items():
        lines.append(f"effect {name} = {printer.effect(eff)}")
    for name, monad in src.monads.items():
        lines.append(f"monad {name} = {printer.monad(monad)}")
    for name, handler in src.handlers.items():
        lines.append(f"handler {name} = {printer.handler(handler, [])}")
    for name, value in src.definitions:
        sig = src.signatures.get(name)
        head = f"def {name} : {printer.vtype(sig)}" if sig is not None else f"def {name}"
        lines.append(f"{head} = {printer.value(value, [])}")
    if src.main is not None:
        lines.append(f"main = {printer.comp(src.main, [])}")
    return "\n\n".join(lines) + "\n"


def show_result(value: Value) -> str:
    """Render a ground result, writing pairs as ``<a, b>``."""
    if isinstance(value, Pair):
        return f"<{show_result(value.fst)}, {show_result(value.snd)}>"
    if value == TRU or (isinstance(value, Inj) and value.label == "True" and isinstance(value.payload, UnitV)):
        return "tru"
    if value == FLS or (isinstance(value, Inj) and value.label == "False" and isinstance(value.payload, UnitV)):
        return "fls"
    if isinstance(value, Inj):
        return f"{value.label}({show_result(value.payload)})"
    if isinstance(value, UnitV):
        return "()"
    return print_term(value)
