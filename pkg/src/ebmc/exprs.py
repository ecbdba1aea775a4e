"""Expression and predicate ASTs with a compiling evaluator.

Nodes are (op, args) records; structural equality ignores source spans so
that parse/pretty round trips compare equal.  Each node lazily compiles to
a Python closure over an environment dict, which is what makes exhaustive
exploration affordable: guard and invariant evaluation is a chain of
native frozenset operations after the first call.

Expr ops:
    lit(value) ref(name) set(*elems) maplet(a,b)
    union inter diff cart comp        (binary set/relation algebra)
    dom ran inv closure card          (unary)
    img(rel, set) app(fn, arg)        (relational image, function application)
    add sub min max                   (bounded integer arithmetic)

Pred ops:
    true false eq ne lt le member subset
    and or not imp
    forall(names, domain, body) exists(names, domain, body)
    isrel ispfn istfn                 (shape assertions e in A <-> B etc.)
"""

from __future__ import annotations

import itertools

from .values import (
    EvalError,
    TypeMismatch,
    UnboundIdentifier,
    Value,
    check_int,
    is_pair,
    mkset,
    sorted_values,
    value_key,
)

EXPR_OPS = {
    "lit", "ref", "set", "maplet", "union", "inter", "diff", "cart", "comp",
    "dom", "ran", "inv", "closure", "card", "img", "app", "add", "sub",
    "min", "max",
}

PRED_OPS = {
    "true", "false", "eq", "ne", "lt", "le", "member", "subset",
    "and", "or", "not", "imp", "forall", "exists",
    "isrel", "ispfn", "istfn",
}


class Node:
    """Shared machinery for Expr and Pred."""

    __slots__ = ("op", "args", "span", "_c", "_h")

    def __init__(self, op, args, span=None):
        self.op = op
        self.args = tuple(args)
        self.span = span
        self._c = None
        self._h = None

    def __eq__(self, other):
        return (
            type(other) is type(self)
            and self.op == other.op
            and self.args == other.args
        )

    def __hash__(self):
        if self._h is None:
            self._h = hash((type(self).__name__, self.op, self.args))
        return self._h

    def __repr__(self):
        return f"{type(self).__name__}({self.op}, {list(self.args)!r})"

    def compiled(self):
        if self._c is None:
            self._c = _compile(self)
        return self._c


class Expr(Node):
    __slots__ = ()


class Pred(Node):
    __slots__ = ()


def _node_key(n):
    if isinstance(n, Node):
        return (1, n.op, tuple(_node_key(a) for a in n.args))
    if isinstance(n, (frozenset,)):
        return (2, tuple(sorted(value_key(x) for x in n)))
    return (0, repr(n))


def eset(*elems) -> Expr:
    """Set enumeration; elements stored in canonical syntactic order."""
    return Expr("set", tuple(sorted(elems, key=_node_key)))


def elit(v) -> Expr:
    return Expr("lit", (v,))


def eref(name, span=None) -> Expr:
    return Expr("ref", (name,), span)


def _as_set(v, what):
    if not isinstance(v, frozenset):
        raise TypeMismatch(f"{what}: expected a set, got {type(v).__name__}")
    return v


def _as_rel(v, what):
    v = _as_set(v, what)
    for x in v:
        if not is_pair(x):
            raise TypeMismatch(f"{what}: not a relation, element {x!r}")
    return v


def _as_int(v, what):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeMismatch(f"{what}: expected an integer, got {v!r}")
    return v


def closure(rel: Value) -> Value:
    """Least transitive superset of a relation (set of pairs)."""
    rel = _as_rel(rel, "closure")
    result = set(rel)
    # successor index, rebuilt as the closure grows
    while True:
        succ = {}
        for a, b in result:
            succ.setdefault(a, set()).add(b)
        new = {
            (a, c)
            for (a, b) in result
            for c in succ.get(b, ())
            if (a, c) not in result
        }
        if not new:
            return frozenset(result)
        result |= new


def compose(r: Value, s: Value) -> Value:
    r = _as_rel(r, "composition")
    s = _as_rel(s, "composition")
    by_first = {}
    for b, c in s:
        by_first.setdefault(b, []).append(c)
    return frozenset((a, c) for a, b in r for c in by_first.get(b, ()))


def _values_eq(a, b):
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    return a == b


def _apply(f, x, what="function application"):
    f = _as_rel(f, what)
    found = None
    n = 0
    for a, b in f:
        if a == x:
            found = b
            n += 1
    if n == 0:
        raise TypeMismatch(f"{what}: argument {x!r} outside domain")
    if n > 1:
        raise TypeMismatch(f"{what}: relation not functional at {x!r}")
    return found


def _functional(rel):
    seen = set()
    for a, _ in rel:
        if a in seen:
            return False
        seen.add(a)
    return True


def _compile(n: Node):
    op = n.op
    a = n.args

    # --- expressions ---------------------------------------------------
    if op == "lit":
        v = a[0]
        return lambda env: v
    if op == "ref":
        name = a[0]

        def ref(env):
            try:
                return env[name]
            except KeyError:
                raise UnboundIdentifier(name) from None

        return ref
    if op == "set":
        cs = [x.compiled() for x in a]
        return lambda env: mkset(c(env) for c in cs)
    if op == "maplet":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: (l(env), r(env))
    if op == "union":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: _as_set(l(env), "union") | _as_set(r(env), "union")
    if op == "inter":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: _as_set(l(env), "intersection") & _as_set(r(env), "intersection")
    if op == "diff":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: _as_set(l(env), "difference") - _as_set(r(env), "difference")
    if op == "cart":
        l, r = a[0].compiled(), a[1].compiled()

        def cart(env):
            lv = _as_set(l(env), "product")
            rv = _as_set(r(env), "product")
            return frozenset((x, y) for x in lv for y in rv)

        return cart
    if op == "comp":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: compose(l(env), r(env))
    if op == "dom":
        c = a[0].compiled()
        return lambda env: frozenset(x for x, _ in _as_rel(c(env), "dom"))
    if op == "ran":
        c = a[0].compiled()
        return lambda env: frozenset(y for _, y in _as_rel(c(env), "ran"))
    if op == "inv":
        c = a[0].compiled()
        return lambda env: frozenset((y, x) for x, y in _as_rel(c(env), "inverse"))
    if op == "closure":
        c = a[0].compiled()
        return lambda env: closure(c(env))
    if op == "card":
        c = a[0].compiled()
        return lambda env: check_int(len(_as_set(c(env), "card")))
    if op == "img":
        rel, arg = a[0].compiled(), a[1].compiled()

        def img(env):
            rv = _as_rel(rel(env), "image")
            sv = _as_set(arg(env), "image")
            return frozenset(y for x, y in rv if x in sv)

        return img
    if op == "app":
        fn, arg = a[0].compiled(), a[1].compiled()
        return lambda env: _apply(fn(env), arg(env))
    if op == "add":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: check_int(_as_int(l(env), "+") + _as_int(r(env), "+"))
    if op == "sub":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: check_int(_as_int(l(env), "-") - _as_int(r(env), "-"))
    if op == "min":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: min(_as_int(l(env), "min"), _as_int(r(env), "min"))
    if op == "max":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: max(_as_int(l(env), "max"), _as_int(r(env), "max"))

    # --- predicates ----------------------------------------------------
    if op == "true":
        return lambda env: True
    if op == "false":
        return lambda env: False
    if op == "eq":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: _values_eq(l(env), r(env))
    if op == "ne":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: not _values_eq(l(env), r(env))
    if op == "lt":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: _as_int(l(env), "<") < _as_int(r(env), "<")
    if op == "le":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: _as_int(l(env), "<=") <= _as_int(r(env), "<=")
    if op == "member":
        l, r = a[0].compiled(), a[1].compiled()

        def member(env):
            x = l(env)
            if isinstance(x, bool):
                raise TypeMismatch("membership: booleans are not set elements")
            return x in _as_set(r(env), "membership")

        return member
    if op == "subset":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: _as_set(l(env), "subset") <= _as_set(r(env), "subset")
    if op == "and":
        cs = [x.compiled() for x in a]
        return lambda env: all(c(env) for c in cs)
    if op == "or":
        cs = [x.compiled() for x in a]
        return lambda env: any(c(env) for c in cs)
    if op == "not":
        c = a[0].compiled()
        return lambda env: not c(env)
    if op == "imp":
        l, r = a[0].compiled(), a[1].compiled()
        return lambda env: (not l(env)) or r(env)
    if op in ("forall", "exists"):
        names, dom, body = a
        dc = dom.compiled()
        bc = body.compiled()
        want_all = op == "forall"

        def quant(env):
            domain = sorted_values(_as_set(dc(env), "quantifier domain"))
            inner = dict(env)
            for combo in itertools.product(domain, repeat=len(names)):
                for nm, v in zip(names, combo):
                    inner[nm] = v
                if bc(inner) != want_all:
                    return not want_all
            return want_all

        return quant
    if op in ("isrel", "ispfn", "istfn"):
        e, ea, eb = a[0].compiled(), a[1].compiled(), a[2].compiled()
        kind = op

        def shape(env):
            v = _as_rel(e(env), kind)
            av = _as_set(ea(env), kind)
            bv = _as_set(eb(env), kind)
            if not all(x in av and y in bv for x, y in v):
                return False
            if kind == "isrel":
                return True
            if not _functional(v):
                return False
            if kind == "istfn":
                return frozenset(x for x, _ in v) == av
            return True

        return shape

    raise AssertionError(f"unknown op {op}")


def eval_expr(e: Expr, env: dict) -> Value:
    """Evaluate an expression; pure and deterministic."""
    return e.compiled()(env)


def eval_pred(p: Pred, env: dict) -> bool:
    """Evaluate a predicate to a truth value; quantifiers enumerate."""
    return bool(p.compiled()(env))


def refs(n: Node) -> frozenset:
    """Free identifier names (quantifier binders excluded)."""
    out = set()

    def walk(m, bound):
        if m.op == "ref":
            if m.args[0] not in bound:
                out.add(m.args[0])
            return
        if m.op in ("forall", "exists"):
            names, dom, body = m.args
            walk(dom, bound)
            walk(body, bound | set(names))
            return
        for x in m.args:
            if isinstance(x, Node):
                walk(x, bound)

    walk(n, frozenset())
    return frozenset(out)


def rename_idents(n: Node, mapping: dict) -> Node:
    """Rename free and bound identifiers throughout (for instantiation)."""
    if n.op == "ref":
        nm = n.args[0]
        return type(n)("ref", (mapping.get(nm, nm),), n.span)
    if n.op in ("forall", "exists"):
        names, dom, body = n.args
        new_names = tuple(mapping.get(x, x) for x in names)
        return type(n)(
            n.op,
            (new_names, rename_idents(dom, mapping), rename_idents(body, mapping)),
            n.span,
        )
    new_args = tuple(
        rename_idents(x, mapping) if isinstance(x, Node) else x for x in n.args
    )
    node = type(n)(n.op, new_args, n.span)
    if n.op == "set":
        node = eset(*node.args)
    return node
