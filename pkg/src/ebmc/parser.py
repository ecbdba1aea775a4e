"""Text front end for .ebm model files: lexer, recursive-descent parser,
and pretty printer satisfying parse(pretty(x)) == x.

The grammar is line oriented: one declaration per line (or ';' separated)
at bracket depth zero.  Inside brackets newlines are insignificant and ';'
is relational composition, so composition is always written
parenthesised: (r ; s).  See docs/grammar.md for the full surface.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .exprs import Expr, Pred, eset
from .model import (
    Action,
    CarrierSet,
    ConstDef,
    Context,
    Event,
    Machine,
    NamedPred,
    SourceSpan,
    VarDecl,
)

KEYWORDS = {
    "context", "machine", "extends", "sees", "refines", "sets", "constants",
    "axioms", "theorems", "variables", "invariants", "events", "event",
    "any", "where", "when", "then", "end", "new", "or", "not", "true",
    "false", "card", "closure", "dom", "ran", "min", "max",
}

MULTI_OPS = [
    "|->", "<->", "+->", "-->", ":=", "::", "/=", "<=", ">=", "=>",
    "<:", "\\/", "/\\", "><",
]
SINGLE_OPS = "{}()[],@=<>+-~;:.!?\\"

_BLOCK_KWS = {
    "sets", "constants", "axioms", "theorems",
    "variables", "invariants", "events", "event", "end",
}


@dataclass
class Token:
    kind: str  # ident int string kw op nl eof
    text: str
    line: int
    col: int


class ParseError(Exception):
    def __init__(self, span: SourceSpan, expected: str, found: str):
        self.span = span
        self.expected = expected
        self.found = found
        super().__init__(f"{span}: expected {expected}, found {found}")


def _lex(text: str, filename: str) -> list:
    toks: list = []
    i, line, col = 0, 1, 1
    depth = 0
    n = len(text)

    def emit(kind, s, ln, cl):
        toks.append(Token(kind, s, ln, cl))

    while i < n:
        c = text[i]
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == "\n":
            if depth == 0 and toks and toks[-1].kind != "nl":
                emit("nl", "\n", line, col)
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        start_line, start_col = line, col
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            emit("kw" if word in KEYWORDS else "ident", word, start_line, start_col)
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            emit("int", text[i:j], start_line, start_col)
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                if text[j] == "\n":
                    raise ParseError(
                        SourceSpan(filename, start_line, start_col),
                        "closing quote", "end of line")
                j += 1
            if j >= n:
                raise ParseError(
                    SourceSpan(filename, start_line, start_col),
                    "closing quote", "end of input")
            emit("string", text[i + 1:j], start_line, start_col)
            col += j - i + 1
            i = j + 1
            continue
        if c == "\\" and i + 1 < n and text[i + 1].isalpha():
            j = i + 1
            while j < n and text[j].isalpha():
                j += 1
            word = text[i:j]
            if word != "\\in":
                raise ParseError(
                    SourceSpan(filename, start_line, start_col, j - i),
                    "\\in", word)
            emit("op", "in", start_line, start_col)
            col += j - i
            i = j
            continue
        matched = None
        for opt in MULTI_OPS:
            if text.startswith(opt, i):
                matched = opt
                break
        if matched:
            emit("op", matched, start_line, start_col)
            i += len(matched)
            col += len(matched)
            continue
        if c in SINGLE_OPS:
            if c in "([{":
                depth += 1
            elif c in ")]}":
                depth = max(0, depth - 1)
            if c == ";" and depth == 0:
                if toks and toks[-1].kind != "nl":
                    emit("nl", ";", start_line, start_col)
            else:
                emit("op", c, start_line, start_col)
            i += 1
            col += 1
            continue
        raise ParseError(
            SourceSpan(filename, start_line, start_col), "a token", repr(c))
    emit("eof", "", line, col)
    return toks


class Parser:
    def __init__(self, text: str, filename: str = "<text>"):
        self.filename = filename
        self.toks = _lex(text, filename)
        self.pos = 0

    # -- token plumbing --------------------------------------------------
    def peek(self) -> Token:
        return self.toks[self.pos]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def span(self, tok: Optional[Token] = None) -> SourceSpan:
        t = tok or self.peek()
        return SourceSpan(self.filename, t.line, t.col, max(1, len(t.text)))

    def fail(self, expected: str):
        t = self.peek()
        found = t.text if t.kind != "eof" else "end of input"
        raise ParseError(self.span(t), expected, found)

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        if self.at(kind, text):
            return self.advance()
        return None

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.accept(kind, text)
        if t is None:
            self.fail(text if text is not None else kind)
        return t

    def skip_nl(self):
        while self.at("nl"):
            self.advance()

    def end_decl(self):
        if self.at("nl"):
            self.advance()
            self.skip_nl()
            return
        t = self.peek()
        if t.kind == "eof" or (t.kind == "kw" and t.text in _BLOCK_KWS):
            return
        self.fail("end of declaration")

    def ident(self) -> str:
        return self.expect("ident").text

    # -- expressions -----------------------------------------------------
    def parse_expr(self) -> Expr:
        return self._maplet()

    def _maplet(self) -> Expr:
        e = self._union()
        while self.at("op", "|->"):
            self.advance()
            e = Expr("maplet", (e, self._union()))
        return e

    def _union(self) -> Expr:
        e = self._inter()
        while True:
            if self.at("op", "\\/"):
                self.advance()
                e = Expr("union", (e, self._inter()))
            elif self.at("op", "\\"):
                self.advance()
                e = Expr("diff", (e, self._inter()))
            else:
                return e

    def _inter(self) -> Expr:
        e = self._relop()
        while self.at("op", "/\\"):
            self.advance()
            e = Expr("inter", (e, self._relop()))
        return e

    def _relop(self) -> Expr:
        e = self._arith()
        while True:
            if self.at("op", "><"):
                self.advance()
                e = Expr("cart", (e, self._arith()))
            elif self.at("op", ";"):
                self.advance()
                e = Expr("comp", (e, self._arith()))
            else:
                return e

    def _arith(self) -> Expr:
        e = self._postfix()
        while True:
            if self.at("op", "+"):
                self.advance()
                e = Expr("add", (e, self._postfix()))
            elif self.at("op", "-"):
                self.advance()
                e = Expr("sub", (e, self._postfix()))
            else:
                return e

    def _postfix(self) -> Expr:
        e = self._primary()
        while True:
            if self.at("op", "~"):
                self.advance()
                e = Expr("inv", (e,))
            elif self.at("op", "["):
                self.advance()
                arg = self.parse_expr()
                self.expect("op", "]")
                e = Expr("img", (e, arg))
            elif self.at("op", "("):
                self.advance()
                arg = self.parse_expr()
                self.expect("op", ")")
                e = Expr("app", (e, arg))
            else:
                return e

    _BUILTIN_ARITY = {"card": 1, "closure": 1, "dom": 1, "ran": 1, "min": 2, "max": 2}

    def _primary(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.advance()
            return Expr("lit", (int(t.text),))
        if t.kind == "op" and t.text == "-":
            self.advance()
            num = self.expect("int")
            return Expr("lit", (-int(num.text),))
        if t.kind == "kw" and t.text in self._BUILTIN_ARITY:
            self.advance()
            self.expect("op", "(")
            args = [self.parse_expr()]
            for _ in range(self._BUILTIN_ARITY[t.text] - 1):
                self.expect("op", ",")
                args.append(self.parse_expr())
            self.expect("op", ")")
            return Expr(t.text, tuple(args))
        if t.kind == "ident":
            self.advance()
            return Expr("ref", (t.text,), self.span(t))
        if t.kind == "op" and t.text == "{":
            self.advance()
            items = []
            if not self.at("op", "}"):
                items.append(self.parse_expr())
                while self.accept("op", ","):
                    items.append(self.parse_expr())
            self.expect("op", "}")
            return eset(*items)
        if t.kind == "op" and t.text == "(":
            self.advance()
            e = self.parse_expr()
            self.expect("op", ")")
            return e
        self.fail("an expression")

    # -- predicates ------------------------------------------------------
    def parse_pred(self) -> Pred:
        if self.at("op", "!") or self.at("op", "?"):
            return self._quantified()
        return self._imp()

    def _quantified(self) -> Pred:
        q = self.advance()
        names = [self.ident()]
        while self.accept("op", ","):
            names.append(self.ident())
        self.expect("op", "in")
        dom = self.parse_expr()
        self.expect("op", ".")
        body = self.parse_pred()
        op = "forall" if q.text == "!" else "exists"
        return Pred(op, (tuple(names), dom, body))

    def _imp(self) -> Pred:
        left = self._disj()
        if self.at("op", "=>"):
            self.advance()
            return Pred("imp", (left, self.parse_pred()))
        return left

    def _disj(self) -> Pred:
        p = self._conj()
        while self.at("kw", "or"):
            self.advance()
            p = Pred("or", (p, self._conj()))
        return p

    def _conj(self) -> Pred:
        p = self._unit()
        while self.at("op", "&"):
            self.advance()
            p = Pred("and", (p, self._unit()))
        return p

    def _unit(self) -> Pred:
        t = self.peek()
        if t.kind == "kw" and t.text == "not":
            self.advance()
            self.expect("op", "(")
            inner = self.parse_pred()
            self.expect("op", ")")
            return Pred("not", (inner,))
        if t.kind == "kw" and t.text == "true":
            self.advance()
            return Pred("true", ())
        if t.kind == "kw" and t.text == "false":
            self.advance()
            return Pred("false", ())
        if t.kind == "op" and t.text in ("!", "?"):
            return self._quantified()
        if t.kind == "op" and t.text == "(":
            saved = self.pos
            try:
                self.advance()
                inner = self.parse_pred()
                self.expect("op", ")")
                return inner
            except ParseError:
                self.pos = saved
        return self._comparison()

    _CMP = {"=", "/=", "<", "<=", ">", ">=", "<:", "in"}

    def _comparison(self) -> Pred:
        left = self.parse_expr()
        t = self.peek()
        if not (t.kind == "op" and t.text in self._CMP):
            self.fail("a comparison operator")
        self.advance()
        if t.text == "in":
            rhs = self.parse_expr()
            arrow = self.peek()
            if arrow.kind == "op" and arrow.text in ("<->", "+->", "-->"):
                self.advance()
                second = self.parse_expr()
                op = {"<->": "isrel", "+->": "ispfn", "-->": "istfn"}[arrow.text]
                return Pred(op, (left, rhs, second))
            return Pred("member", (left, rhs))
        right = self.parse_expr()
        if t.text == "=":
            return Pred("eq", (left, right))
        if t.text == "/=":
            return Pred("ne", (left, right))
        if t.text == "<":
            return Pred("lt", (left, right))
        if t.text == "<=":
            return Pred("le", (left, right))
        if t.text == ">":
            return Pred("lt", (right, left))
        if t.text == ">=":
            return Pred("le", (right, left))
        if t.text == "<:":
            return Pred("subset", (left, right))
        raise AssertionError

    # -- named predicates ------------------------------------------------
    def _named_pred(self) -> NamedPred:
        self.expect("op", "@")
        name = self.ident()
        tag = None
        if self.at("string"):
            tag = self.advance().text
        pred = self.parse_pred()
        return NamedPred(name, tag, pred)

    # -- contexts ----------------------------------------------------------
    def parse_context(self) -> Context:
        self.skip_nl()
        start = self.expect("kw", "context")
        name = self.ident()
        extends: list = []
        if self.accept("kw", "extends"):
            extends.append(self.ident())
            while self.accept("op", ","):
                extends.append(self.ident())
        self.end_decl()
        sets: list = []
        consts: list = []
        axioms: list = []
        theorems: list = []
        while True:
            self.skip_nl()
            if self.accept("kw", "end"):
                break
            if self.accept("kw", "sets"):
                self.end_decl()
                while self.at("ident"):
                    sets.append(self._set_decl())
            elif self.accept("kw", "constants"):
                self.end_decl()
                while self.at("ident"):
                    cname = self.ident()
                    self.expect("op", "=")
                    consts.append(ConstDef(cname, self.parse_expr()))
                    self.end_decl()
            elif self.accept("kw", "axioms"):
                self.end_decl()
                while self.at("op", "@"):
                    axioms.append(self._named_pred())
                    self.end_decl()
            elif self.accept("kw", "theorems"):
                self.end_decl()
                while self.at("op", "@"):
                    theorems.append(self._named_pred())
                    self.end_decl()
            else:
                self.fail("a context block (sets/constants/axioms/theorems) or end")
        self.skip_nl()
        return Context(
            name=name,
            extends=tuple(extends),
            sets=tuple(sets),
            constants=tuple(consts),
            axioms=tuple(axioms),
            theorems=tuple(theorems),
            span=self.span(start),
        )

    def _set_decl(self) -> CarrierSet:
        name = self.ident()
        if self.accept("op", ":"):
            size = int(self.expect("int").text)
            elems = tuple(f"{name[0].lower()}{i}" for i in range(size))
            self.end_decl()
            return CarrierSet(name, elems)
        self.expect("op", "=")
        self.expect("op", "{")
        elems = [self.ident()]
        while self.accept("op", ","):
            elems.append(self.ident())
        self.expect("op", "}")
        self.end_decl()
        return CarrierSet(name, tuple(elems))

    # -- machines ----------------------------------------------------------
    def parse_machine(self) -> Machine:
        self.skip_nl()
        start = self.expect("kw", "machine")
        name = self.ident()
        refines = None
        sees: list = []
        if self.accept("kw", "refines"):
            refines = self.ident()
        if self.accept("kw", "sees"):
            sees.append(self.ident())
            while self.accept("op", ","):
                sees.append(self.ident())
        self.end_decl()
        variables: list = []
        invariants: list = []
        events: list = []
        while True:
            self.skip_nl()
            if self.accept("kw", "end"):
                break
            if self.accept("kw", "variables"):
                self.end_decl()
                while self.at("ident"):
                    variables.append(self._var_decl())
            elif self.accept("kw", "invariants"):
                self.end_decl()
                while self.at("op", "@"):
                    invariants.append(self._named_pred())
                    self.end_decl()
            elif self.accept("kw", "events"):
                self.end_decl()
                while True:
                    self.skip_nl()
                    if self.at("kw", "event"):
                        events.append(self._event())
                    else:
                        break
            else:
                self.fail("a machine block (variables/invariants/events) or end")
        self.skip_nl()
        return Machine(
            name=name,
            sees=tuple(sees),
            refines=refines,
            variables=tuple(variables),
            invariants=tuple(invariants),
            events=tuple(events),
            span=self.span(start),
        )

    def _var_decl(self) -> VarDecl:
        tok = self.peek()
        name = self.ident()
        self.expect("op", "in")
        first = self.parse_expr()
        arrow = self.peek()
        var_ref = Expr("ref", (name,), self.span(tok))
        if arrow.kind == "op" and arrow.text in ("<->", "+->", "-->"):
            self.advance()
            second = self.parse_expr()
            op = {"<->": "isrel", "+->": "ispfn", "-->": "istfn"}[arrow.text]
            shape = Pred(op, (var_ref, first, second))
        else:
            shape = Pred("member", (var_ref, first))
        self.end_decl()
        return VarDecl(name, shape)

    def _event(self) -> Event:
        start = self.expect("kw", "event")
        name = self.ident()
        self.skip_nl()
        refines_event = None
        is_new = False
        if self.accept("kw", "refines"):
            refines_event = self.ident()
            self.skip_nl()
        elif self.accept("kw", "new"):
            is_new = True
            self.skip_nl()
        params: list = []
        if self.accept("kw", "any"):
            while True:
                pname = self.ident()
                self.expect("op", "in")
                params.append((pname, self.parse_expr()))
                if not self.accept("op", ","):
                    break
            self.skip_nl()
        guards: list = []
        if self.accept("kw", "where") or self.accept("kw", "when"):
            self.end_decl()
            while not (self.at("kw", "then") or self.at("kw", "end")):
                guards.append(self.parse_pred())
                self.end_decl()
        actions: list = []
        if self.accept("kw", "then"):
            self.end_decl()
            while not self.at("kw", "end"):
                actions.append(self._action())
                self.end_decl()
        self.expect("kw", "end")
        self.end_decl()
        return Event(
            name=name,
            params=tuple(params),
            guards=tuple(guards),
            actions=tuple(actions),
            refines_event=refines_event,
            is_new=is_new,
            span=self.span(start),
        )

    def _action(self) -> Action:
        var = self.ident()
        arg = None
        if self.accept("op", "("):
            arg = self.parse_expr()
            self.expect("op", ")")
        if self.accept("op", ":="):
            return Action(var, ":=", arg, self.parse_expr())
        if arg is None and self.accept("op", "::"):
            return Action(var, "::", None, self.parse_expr())
        self.fail(":= or ::")


# -- public API -----------------------------------------------------------


def parse_context(text: str, filename: str = "<text>") -> Context:
    p = Parser(text, filename)
    ctx = p.parse_context()
    p.skip_nl()
    if not p.at("eof"):
        p.fail("end of input")
    return ctx


def parse_machine(text: str, filename: str = "<text>") -> Machine:
    p = Parser(text, filename)
    m = p.parse_machine()
    p.skip_nl()
    if not p.at("eof"):
        p.fail("end of input")
    return m


def parse_model(text: str, filename: str = "<text>"):
    """Parse either a context or a machine, keyed on the first keyword."""
    probe = Parser(text, filename)
    probe.skip_nl()
    t = probe.peek()
    if t.kind == "kw" and t.text == "machine":
        return parse_machine(text, filename)
    if t.kind == "kw" and t.text == "context":
        return parse_context(text, filename)
    raise ParseError(probe.span(t), "context or machine", t.text or "end of input")


def parse_pred_text(text: str, filename: str = "<pred>") -> Pred:
    p = Parser(text, filename)
    p.skip_nl()
    pred = p.parse_pred()
    p.skip_nl()
    if not p.at("eof"):
        p.fail("end of input")
    return pred


def parse_expr_text(text: str, filename: str = "<expr>") -> Expr:
    p = Parser(text, filename)
    p.skip_nl()
    e = p.parse_expr()
    p.skip_nl()
    if not p.at("eof"):
        p.fail("end of input")
    return e


# -- pretty printer ---------------------------------------------------------

_EXPR_LEVEL = {
    "maplet": 1,
    "union": 2, "diff": 2,
    "inter": 3,
    "cart": 4, "comp": 4,
    "add": 5, "sub": 5,
}

_EXPR_SYM = {
    "maplet": "|->", "union": "\\/", "diff": "\\", "inter": "/\\",
    "cart": "><", "comp": ";", "add": "+", "sub": "-",
}


def _pp_expr(e: Expr, parent: int = 0) -> str:
    op = e.op
    if op == "lit":
        return str(e.args[0])
    if op == "ref":
        return e.args[0]
    if op == "set":
        return "{" + ", ".join(_pp_expr(x) for x in e.args) + "}"
    if op in ("card", "closure", "dom", "ran", "min", "max"):
        return f"{op}(" + ", ".join(_pp_expr(x) for x in e.args) + ")"
    if op == "inv":
        return _pp_expr(e.args[0], 6) + "~"
    if op == "img":
        return _pp_expr(e.args[0], 6) + "[" + _pp_expr(e.args[1]) + "]"
    if op == "app":
        return _pp_expr(e.args[0], 6) + "(" + _pp_expr(e.args[1]) + ")"
    if op == "comp":
        return "(" + _pp_expr(e.args[0], 5) + " ; " + _pp_expr(e.args[1], 5) + ")"
    lvl = _EXPR_LEVEL[op]
    l = _pp_expr(e.args[0], lvl)
    r = _pp_expr(e.args[1], lvl + 1)
    s = f"{l} {_EXPR_SYM[op]} {r}"
    return f"({s})" if lvl < parent else s


_PRED_LEVEL = {"imp": 1, "or": 2, "and": 3}


def _pp_pred(p: Pred, parent: int = 0) -> str:
    op = p.op
    if op == "true":
        return "true"
    if op == "false":
        return "false"
    if op == "not":
        return "not(" + _pp_pred(p.args[0]) + ")"
    if op in ("forall", "exists"):
        names, dom, body = p.args
        q = "!" if op == "forall" else "?"
        s = f"{q}{', '.join(names)} \\in {_pp_expr(dom)} . {_pp_pred(body)}"
        return f"({s})" if parent > 0 else s
    if op == "imp":
        s = _pp_pred(p.args[0], 2) + " => " + _pp_pred(p.args[1], 1)
        return f"({s})" if parent > 1 else s
    if op == "or":
        s = _pp_pred(p.args[0], 2) + " or " + _pp_pred(p.args[1], 3)
        return f"({s})" if parent > 2 else s
    if op == "and":
        s = _pp_pred(p.args[0], 3) + " & " + _pp_pred(p.args[1], 4)
        return f"({s})" if parent > 3 else s
    if op == "eq":
        return _pp_expr(p.args[0]) + " = " + _pp_expr(p.args[1])
    if op == "ne":
        return _pp_expr(p.args[0]) + " /= " + _pp_expr(p.args[1])
    if op == "lt":
        return _pp_expr(p.args[0]) + " < " + _pp_expr(p.args[1])
    if op == "le":
        return _pp_expr(p.args[0]) + " <= " + _pp_expr(p.args[1])
    if op == "member":
        return _pp_expr(p.args[0]) + " \\in " + _pp_expr(p.args[1])
    if op == "subset":
        return _pp_expr(p.args[0]) + " <: " + _pp_expr(p.args[1])
    if op in ("isrel", "ispfn", "istfn"):
        arrow = {"isrel": "<->", "ispfn": "+->", "istfn": "-->"}[op]
        return (
            _pp_expr(p.args[0]) + " \\in "
            + _pp_expr(p.args[1], 2) + f" {arrow} " + _pp_expr(p.args[2], 2)
        )
    raise AssertionError(f"unknown pred op {op}")


def _pp_named(np: NamedPred) -> str:
    tag = f' "{np.tag}"' if np.tag is not None else ""
    return f"@{np.name}{tag} {_pp_pred(np.pred)}"


def _pp_var(v: VarDecl) -> str:
    s = v.shape
    if s.op == "member":
        return f"{v.name} \\in {_pp_expr(s.args[1])}"
    arrow = {"isrel": "<->", "ispfn": "+->", "istfn": "-->"}[s.op]
    return f"{v.name} \\in {_pp_expr(s.args[1], 2)} {arrow} {_pp_expr(s.args[2], 2)}"


def _pp_action(a: Action) -> str:
    if a.arg is not None:
        return f"{a.var}({_pp_expr(a.arg)}) := {_pp_expr(a.rhs)}"
    return f"{a.var} {a.kind} {_pp_expr(a.rhs)}"


def _pp_event(e: Event, indent: str = "  ") -> str:
    lines = [f"{indent}event {e.name}"]
    inner = indent + "  "
    if e.refines_event:
        lines.append(f"{inner}refines {e.refines_event}")
    elif e.is_new:
        lines.append(f"{inner}new")
    if e.params:
        binders = ", ".join(f"{n} \\in {_pp_expr(d)}" for n, d in e.params)
        lines.append(f"{inner}any {binders}")
    if e.guards:
        lines.append(f"{inner}where")
        lines.extend(f"{inner}  {_pp_pred(g)}" for g in e.guards)
    if e.actions:
        lines.append(f"{inner}then")
        lines.extend(f"{inner}  {_pp_action(a)}" for a in e.actions)
    lines.append(f"{indent}end")
    return "\n".join(lines)


def pretty(obj) -> str:
    """Canonical text form; parse(pretty(x)) is structurally equal to x."""
    if isinstance(obj, Expr):
        return _pp_expr(obj)
    if isinstance(obj, Pred):
        return _pp_pred(obj)
    if isinstance(obj, NamedPred):
        return _pp_named(obj)
    if isinstance(obj, VarDecl):
        return _pp_var(obj)
    if isinstance(obj, Action):
        return _pp_action(obj)
    if isinstance(obj, Event):
        return _pp_event(obj, "")
    if isinstance(obj, Context):
        lines = [f"context {obj.name}"]
        if obj.extends:
            lines[0] += " extends " + ", ".join(obj.extends)
        if obj.sets:
            lines.append("  sets")
            for s in obj.sets:
                lines.append("    " + s.name + " = {" + ", ".join(s.elements) + "}")
        if obj.constants:
            lines.append("  constants")
            lines.extend(f"    {c.name} = {_pp_expr(c.expr)}" for c in obj.constants)
        if obj.axioms:
            lines.append("  axioms")
            lines.extend("    " + _pp_named(a) for a in obj.axioms)
        if obj.theorems:
            lines.append("  theorems")
            lines.extend("    " + _pp_named(t) for t in obj.theorems)
        lines.append("end")
        return "\n".join(lines) + "\n"
    if isinstance(obj, Machine):
        head = f"machine {obj.name}"
        if obj.refines:
            head += f" refines {obj.refines}"
        if obj.sees:
            head += " sees " + ", ".join(obj.sees)
        lines = [head]
        if obj.variables:
            lines.append("  variables")
            lines.extend("    " + _pp_var(v) for v in obj.variables)
        if obj.invariants:
            lines.append("  invariants")
            lines.extend("    " + _pp_named(i) for i in obj.invariants)
        if obj.events:
            lines.append("  events")
            lines.extend(_pp_event(e, "    ") for e in obj.events)
        lines.append("end")
        return "\n".join(lines) + "\n"
    raise TypeError(f"cannot pretty-print {type(obj).__name__}")
