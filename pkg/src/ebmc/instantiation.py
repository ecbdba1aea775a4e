"""Generic instantiation: rename a pattern development's namespaces, bind
its static names through a parameterization context, and check the
pattern's axioms as evaluated obligations of the instance.

A pattern is a refinement chain of machines plus the contexts they see.
Instantiation rewrites every namespace consistently (sets, constants,
variables, events, parameters, and machine names), then points the
renamed machines at the parameterization context, which must resolve
every renamed static name to a concrete value.  If all pattern axioms
evaluate to true under that context, the pattern's exploration results
carry over; verify_inheritance re-explores the instance and confirms it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .composition import Correspondence, graph_equivalent
from .explorer import check_deadlock, check_invariants, explore
from .exprs import rename_idents
from .model import (
    Action,
    Context,
    Event,
    Machine,
    NamedPred,
    Scope,
    VarDecl,
    resolve,
    resolve_contexts,
)
from .values import EvalError, sorted_values
from .exprs import eval_pred


class InstantiationError(Exception):
    pass


class RenamingCollision(InstantiationError):
    pass


class UncoveredPatternName(InstantiationError):
    pass


_NAMESPACES = ("sets", "constants", "variables", "events", "parameters", "machines")


@dataclass(frozen=True)
class Renaming:
    sets: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    variables: dict = field(default_factory=dict)
    events: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    machines: dict = field(default_factory=dict)

    def validate(self):
        for ns in _NAMESPACES:
            mapping = getattr(self, ns)
            targets = list(mapping.values())
            if len(set(targets)) != len(targets):
                raise RenamingCollision(f"renaming not injective in {ns}")

    def ident_map(self) -> dict:
        """Combined map for identifier references inside expressions."""
        out: dict = {}
        for ns in ("sets", "constants", "variables", "parameters"):
            for old, new in getattr(self, ns).items():
                if old in out and out[old] != new:
                    raise RenamingCollision(
                        f"{old} renamed inconsistently across namespaces")
                out[old] = new
        return out


@dataclass(frozen=True)
class ParameterizationContext:
    """Contexts supplying concrete definitions for the pattern's statics."""

    contexts: tuple  # Context objects, the first extends the problem side
    root: str        # name of the context the instance machines see


@dataclass(frozen=True)
class AxiomCheck:
    name: str
    holds: bool
    detail: str = ""


@dataclass(frozen=True)
class InheritedResult:
    instance_machine: str
    pattern_machine: str
    checks: tuple = ("invariants", "deadlock")


@dataclass(frozen=True)
class InstantiationResult:
    machines: tuple            # renamed chain, same order as the pattern
    axiom_report: tuple        # AxiomCheck per pattern axiom
    manifest: tuple            # InheritedResult entries; empty unless all axioms hold

    @property
    def axioms_hold(self) -> bool:
        return all(a.holds for a in self.axiom_report)


def _rename_named(np: NamedPred, imap) -> NamedPred:
    return NamedPred(np.name, np.tag, rename_idents(np.pred, imap))


def _rename_event(e: Event, imap, events_map) -> Event:
    return Event(
        name=events_map.get(e.name, e.name),
        params=tuple((imap.get(n, n), rename_idents(d, imap)) for n, d in e.params),
        guards=tuple(rename_idents(g, imap) for g in e.guards),
        actions=tuple(
            Action(
                imap.get(a.var, a.var),
                a.kind,
                rename_idents(a.arg, imap) if a.arg is not None else None,
                rename_idents(a.rhs, imap),
            )
            for a in e.actions
        ),
        refines_event=events_map.get(e.refines_event, e.refines_event),
        is_new=e.is_new,
    )


def rename_machine(m: Machine, renaming: Renaming, sees: tuple) -> Machine:
    imap = renaming.ident_map()
    return Machine(
        name=renaming.machines.get(m.name, m.name),
        sees=sees,
        refines=renaming.machines.get(m.refines, m.refines),
        variables=tuple(
            VarDecl(imap.get(v.name, v.name), rename_idents(v.shape, imap))
            for v in m.variables
        ),
        invariants=tuple(_rename_named(i, imap) for i in m.invariants),
        events=tuple(_rename_event(e, imap, renaming.events) for e in m.events),
    )


def instantiate(
    pattern_machines: list,
    pattern_contexts: list,
    renaming: Renaming,
    pctx: ParameterizationContext,
) -> InstantiationResult:
    """Rename the whole chain, re-point it at the parameterization context,
    and evaluate the pattern's axioms there."""
    renaming.validate()
    imap = renaming.ident_map()

    try:
        _, pconsts, _, _ = resolve_contexts(list(pctx.contexts), [pctx.root])
    except Exception as exc:
        raise InstantiationError(f"parameterization context broken: {exc}") from exc

    # every renamed static name of the pattern must resolve in the pctx
    for ctx in pattern_contexts:
        for cs in ctx.sets:
            target = renaming.sets.get(cs.name, cs.name)
            if target not in pconsts:
                raise UncoveredPatternName(f"carrier set {cs.name} -> {target}")
        for cd in ctx.constants:
            target = renaming.constants.get(cd.name, cd.name)
            if target not in pconsts:
                raise UncoveredPatternName(f"constant {cd.name} -> {target}")

    machines = tuple(
        rename_machine(m, renaming, sees=(pctx.root,)) for m in pattern_machines
    )

    axiom_report = []
    for ctx in pattern_contexts:
        for ax in ctx.axioms:
            renamed = rename_idents(ax.pred, imap)
            try:
                ok = eval_pred(renamed, pconsts)
                detail = "" if ok else "axiom false under parameterization"
            except EvalError as exc:
                ok = False
                detail = f"evaluation failed: {exc}"
            axiom_report.append(AxiomCheck(ax.name, ok, detail))

    manifest: tuple = ()
    if all(a.holds for a in axiom_report):
        manifest = tuple(
            InheritedResult(instance_machine=i.name, pattern_machine=p.name)
            for p, i in zip(pattern_machines, machines)
        )
    return InstantiationResult(machines, tuple(axiom_report), manifest)


@dataclass(frozen=True)
class InheritanceVerdict:
    equal: bool
    detail: str = ""


def derive_atom_map(pattern_scope: Scope, instance_scope: Scope, renaming: Renaming) -> dict:
    """Positional correspondence between pattern carrier-set atoms and the
    values the parameterization context supplies for the renamed name."""
    amap: dict = {}
    for cs in pattern_scope.sets.values():
        target = renaming.sets.get(cs.name, cs.name)
        val = instance_scope.constants.get(target)
        if not isinstance(val, frozenset):
            continue
        if target in instance_scope.sets:
            elems = list(instance_scope.sets[target].elements)
        else:
            elems = sorted_values(val)
        if len(elems) != len(cs.elements):
            raise InstantiationError(
                f"{cs.name}: pattern has {len(cs.elements)} elements, "
                f"instance {target} has {len(elems)}")
        for old, new in zip(cs.elements, elems):
            amap[old] = new
    return amap


def verify_inheritance(
    pattern_scope: Scope,
    instance_scope: Scope,
    renaming: Renaming,
    bound: int = 1_000_000,
) -> InheritanceVerdict:
    """Executable audit of the inheritance claim: re-explore the instance
    and require its graph and check results to equal the pattern's, up to
    the renaming."""
    pg, _ = explore(pattern_scope, max_states=bound)
    ig, _ = explore(instance_scope, max_states=bound)
    if pg.bound_hit or ig.bound_hit:
        return InheritanceVerdict(False, "bound exceeded")

    p_inv = check_invariants(pg, pattern_scope)
    i_inv = check_invariants(ig, instance_scope)
    p_dead = check_deadlock(pg)
    i_dead = check_deadlock(ig)

    if (pg.state_count, pg.edge_count) != (ig.state_count, ig.edge_count):
        return InheritanceVerdict(
            False,
            f"state/edge counts differ: pattern {pg.state_count}/{pg.edge_count}, "
            f"instance {ig.state_count}/{ig.edge_count}")
    if len(p_inv) != len(i_inv) or len(p_dead) != len(i_dead):
        return InheritanceVerdict(False, "check outcomes differ")

    amap = derive_atom_map(pattern_scope, instance_scope, renaming)
    corr = Correspondence(
        var_map={v: k for k, v in renaming.variables.items()},
        event_map={v: k for k, v in renaming.events.items()},
        param_map={v: k for k, v in renaming.parameters.items()},
        atom_map={v: k for k, v in amap.items()},
    )
    eq, witness = graph_equivalent(pg, ig, corr)
    if not eq:
        return InheritanceVerdict(False, f"graphs differ: {witness}")
    return InheritanceVerdict(True, f"{pg.state_count} states, {pg.edge_count} edges")
