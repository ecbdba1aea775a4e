"""Model data types (contexts, machines, events), resolution and
well-formedness checking.

A Context is the static half (carrier sets, constants, axioms, theorems);
a Machine is the dynamic half (variables, invariants, events).  resolve()
flattens a machine with the contexts it sees into a Scope whose constants
are concrete values; check_wellformed() audits the result and evaluates
axioms and theorems, since constants are concrete here rather than
axiomatised.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .exprs import Expr, Pred, eval_expr, eval_pred, refs
from .values import EvalError, Value, mkset


class ModelError(Exception):
    pass


class MissingContext(ModelError):
    pass


class CyclicExtends(ModelError):
    pass


class DuplicateName(ModelError):
    pass


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 1

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class CarrierSet:
    name: str
    elements: tuple  # element names, in declaration order

    @property
    def size(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class ConstDef:
    name: str
    expr: Expr


@dataclass(frozen=True)
class NamedPred:
    name: str
    tag: Optional[str]
    pred: Pred


@dataclass(frozen=True)
class Context:
    name: str
    extends: tuple = ()
    sets: tuple = ()        # CarrierSet
    constants: tuple = ()   # ConstDef
    axioms: tuple = ()      # NamedPred
    theorems: tuple = ()    # NamedPred
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class VarDecl:
    name: str
    shape: Pred  # type-shape predicate over the variable


@dataclass(frozen=True)
class Action:
    var: str
    kind: str            # ":=" deterministic, "::" bounded choice
    arg: Optional[Expr]  # function-update subscript for v(arg) := rhs
    rhs: Expr


INIT_EVENT = "INITIALISATION"


@dataclass(frozen=True)
class Event:
    name: str
    params: tuple = ()        # (name, domain Expr)
    guards: tuple = ()        # Pred conjuncts, one per source line
    actions: tuple = ()       # Action
    refines_event: Optional[str] = None
    is_new: bool = False
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def param_names(self):
        return tuple(n for n, _ in self.params)


@dataclass(frozen=True)
class Machine:
    name: str
    sees: tuple = ()
    refines: Optional[str] = None
    variables: tuple = ()   # VarDecl
    invariants: tuple = ()  # NamedPred
    events: tuple = ()      # Event
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def var_names(self):
        return tuple(v.name for v in self.variables)

    def event(self, name: str) -> Event:
        for e in self.events:
            if e.name == name:
                return e
        raise KeyError(name)

    def init_event(self) -> Event:
        return self.event(INIT_EVENT)

    def regular_events(self):
        return tuple(e for e in self.events if e.name != INIT_EVENT)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # ERROR | WARNING | THEOREM_FAILED | AXIOM_FAILED
    location: str
    message: str

    def __str__(self):
        return f"{self.severity} {self.location}: {self.message}"


@dataclass(frozen=True)
class WellformednessReport:
    diagnostics: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    def errors(self):
        return [d for d in self.diagnostics if d.severity != "WARNING"]


@dataclass(frozen=True)
class Scope:
    """A machine flattened against its contexts.

    constants maps every static name (carrier sets, their elements, and
    declared constants) to a concrete Value.  Events and variables are
    taken from the machine unchanged.
    """

    machine: Machine
    contexts: tuple
    sets: dict = field(compare=False)        # name -> CarrierSet
    constants: dict = field(compare=False)   # name -> Value
    axioms: tuple = ()
    theorems: tuple = ()

    @property
    def name(self):
        return self.machine.name

    def base_env(self) -> dict:
        return dict(self.constants)


def _linearize_contexts(contexts: dict, roots) -> list:
    """Parents-first ordering of all contexts reachable via extends."""
    out: list = []
    visiting: set = set()
    done: set = set()

    def visit(name, chain):
        if name in done:
            return
        if name in visiting:
            raise CyclicExtends(" -> ".join(chain + [name]))
        if name not in contexts:
            raise MissingContext(name)
        visiting.add(name)
        for parent in contexts[name].extends:
            visit(parent, chain + [name])
        visiting.discard(name)
        done.add(name)
        out.append(contexts[name])

    for r in roots:
        visit(r, [])
    return out


def resolve_contexts(contexts: list, roots) -> tuple:
    """Flatten a context closure: returns (sets, constants, axioms, theorems).

    Constants are evaluated in declaration order (parents first), so a
    constant may refer to earlier constants and to carrier sets.
    """
    by_name = {}
    for c in contexts:
        if c.name in by_name:
            raise DuplicateName(f"context {c.name}")
        by_name[c.name] = c
    ordered = _linearize_contexts(by_name, roots)

    sets: dict = {}
    consts: dict = {}
    axioms: list = []
    theorems: list = []
    for ctx in ordered:
        for cs in ctx.sets:
            _declare(consts, sets, cs.name, ctx.name)
            sets[cs.name] = cs
            consts[cs.name] = mkset(cs.elements)
            for el in cs.elements:
                _declare(consts, sets, el, ctx.name)
                consts[el] = el
        for cd in ctx.constants:
            _declare(consts, sets, cd.name, ctx.name)
            consts[cd.name] = eval_expr(cd.expr, consts)
        axioms.extend(ctx.axioms)
        theorems.extend(ctx.theorems)
    return sets, consts, tuple(axioms), tuple(theorems)


def _declare(consts, sets, name, where):
    if name in consts or name in sets:
        raise DuplicateName(f"{name} (redeclared in {where})")


def resolve(contexts: list, machine: Machine) -> Scope:
    """Link a machine against the contexts it sees into a single scope."""
    sets, consts, axioms, theorems = resolve_contexts(contexts, machine.sees)
    seen_vars = set()
    for v in machine.variables:
        if v.name in consts or v.name in seen_vars:
            raise DuplicateName(f"variable {v.name}")
        seen_vars.add(v.name)
    return Scope(
        machine=machine,
        contexts=tuple(contexts),
        sets=sets,
        constants=consts,
        axioms=axioms,
        theorems=theorems,
    )


def check_wellformed(scope: Scope) -> WellformednessReport:
    """Audit a resolved machine; empty report means admissible for
    exploration."""
    diags: list = []
    m = scope.machine
    static = set(scope.constants)
    varset = set(m.var_names())

    def err(loc, msg):
        diags.append(Diagnostic("ERROR", loc, msg))

    def check_refs(node, extra, loc):
        for name in refs(node):
            if name not in static and name not in varset and name not in extra:
                err(loc, f"unresolved identifier {name}")

    for v in m.variables:
        check_refs(v.shape, set(), f"{m.name}.variables.{v.name}")
    for inv in m.invariants:
        check_refs(inv.pred, set(), f"{m.name}.{inv.name}")

    init_events = [e for e in m.events if e.name == INIT_EVENT]
    if len(init_events) != 1:
        err(m.name, f"expected exactly one {INIT_EVENT} event, found {len(init_events)}")
    else:
        init = init_events[0]
        if init.params:
            err(f"{m.name}.{INIT_EVENT}", "initialization takes no parameters")
        for g in init.guards:
            used = refs(g) & varset
            if used:
                err(
                    f"{m.name}.{INIT_EVENT}",
                    f"initialization guard reads variables {sorted(used)}",
                )
        assigned = {a.var for a in init.actions}
        missing = varset - assigned
        if missing:
            err(
                f"{m.name}.{INIT_EVENT}",
                f"initialization leaves variables unassigned: {sorted(missing)}",
            )
        for a in init.actions:
            if a.arg is not None:
                err(f"{m.name}.{INIT_EVENT}", f"initialization of {a.var} must assign whole variable")
            used = refs(a.rhs) & varset
            if used:
                err(
                    f"{m.name}.{INIT_EVENT}",
                    f"initialization of {a.var} reads variables {sorted(used)}",
                )

    for e in m.events:
        loc = f"{m.name}.{e.name}"
        pnames = set()
        for pname, pdom in e.params:
            if pname in pnames or pname in varset or pname in static:
                err(loc, f"parameter {pname} shadows another name")
            pnames.add(pname)
            check_refs(pdom, pnames, loc)
        for g in e.guards:
            check_refs(g, pnames, loc)
        seen_assign = set()
        for a in e.actions:
            if a.var not in varset:
                err(loc, f"action assigns undeclared variable {a.var}")
            if a.var in seen_assign:
                err(loc, f"variable {a.var} assigned twice")
            seen_assign.add(a.var)
            if a.arg is not None:
                if a.kind != ":=":
                    err(loc, f"function update {a.var}(..) requires :=")
                check_refs(a.arg, pnames, loc)
            check_refs(a.rhs, pnames, loc)

    env = scope.base_env()
    for ax in scope.axioms:
        try:
            if not eval_pred(ax.pred, env):
                diags.append(Diagnostic("AXIOM_FAILED", ax.name, "axiom is false under constants"))
        except EvalError as exc:
            err(ax.name, f"axiom evaluation failed: {exc}")
    for th in scope.theorems:
        try:
            if not eval_pred(th.pred, env):
                diags.append(Diagnostic("THEOREM_FAILED", th.name, "theorem is false under constants"))
        except EvalError as exc:
            err(th.name, f"theorem evaluation failed: {exc}")

    return WellformednessReport(tuple(diags))


def check_context_wellformed(contexts: list, root: str) -> WellformednessReport:
    """Standalone context audit: resolution plus axiom/theorem evaluation."""
    diags: list = []
    try:
        _, consts, axioms, theorems = resolve_contexts(contexts, [root])
    except (ModelError, EvalError) as exc:
        return WellformednessReport((Diagnostic("ERROR", root, str(exc)),))
    for ax in axioms:
        try:
            if not eval_pred(ax.pred, consts):
                diags.append(Diagnostic("AXIOM_FAILED", ax.name, "axiom is false under constants"))
        except EvalError as exc:
            diags.append(Diagnostic("ERROR", ax.name, f"axiom evaluation failed: {exc}"))
    for th in theorems:
        try:
            if not eval_pred(th.pred, consts):
                diags.append(Diagnostic("THEOREM_FAILED", th.name, "theorem is false under constants"))
        except EvalError as exc:
            diags.append(Diagnostic("ERROR", th.name, f"theorem evaluation failed: {exc}"))
    return WellformednessReport(tuple(diags))
