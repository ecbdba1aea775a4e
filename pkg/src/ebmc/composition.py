"""Shared-event composition of machines, variable-partition decomposition,
and the labeled-transition-system equivalence oracle used to audit that a
decomposition recomposes to the original machine.

Synchronisation is by event: a composite event conjoins the participants'
guards under unified parameter names and unions their actions.  Events of
a machine not mentioned in any synchronisation interleave unchanged.
Decomposition is the inverse direction: each event is projected onto the
components whose variables it touches, guard conjunct by guard conjunct;
a conjunct mixing variables of two components is rejected rather than
approximated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .explorer import StateGraph
from .exprs import Expr, refs
from .model import INIT_EVENT, Action, Event, Machine, NamedPred, VarDecl
from .values import rename_atoms, value_key


class CompositionError(Exception):
    pass


class VariableClash(CompositionError):
    pass


class ParameterArityMismatch(CompositionError):
    pass


class ContextConflict(CompositionError):
    pass


class NonSeparableGuard(CompositionError):
    pass


class NonSeparableAction(CompositionError):
    pass


class PartialGraph(CompositionError):
    pass


@dataclass(frozen=True)
class SyncSpec:
    """Per composite event: the (machine, local event) participants."""

    syncs: dict  # composite event name -> tuple of (machine name, event name)

    def validate(self, machines: list):
        by_name = {m.name: m for m in machines}
        used: dict = {}
        for comp, participants in self.syncs.items():
            for mname, ename in participants:
                if mname not in by_name:
                    raise CompositionError(f"sync {comp}: unknown machine {mname}")
                try:
                    by_name[mname].event(ename)
                except KeyError:
                    raise CompositionError(
                        f"sync {comp}: machine {mname} has no event {ename}") from None
                key = (mname, ename)
                if key in used:
                    raise CompositionError(
                        f"event {mname}.{ename} appears in syncs {used[key]} and {comp}")
                used[key] = comp


@dataclass(frozen=True)
class DecompositionSpec:
    """Total partition of a machine's variables into named components."""

    components: tuple    # component names, in declaration order
    partition: dict      # variable name -> component name

    def validate(self, machine: Machine):
        for v in machine.var_names():
            if v not in self.partition:
                raise CompositionError(f"partition misses variable {v}")
        for v, comp in self.partition.items():
            if comp not in self.components:
                raise CompositionError(f"partition target {comp} undeclared")
            if v not in machine.var_names():
                raise CompositionError(f"partition names unknown variable {v}")


def compose(machines: list, spec: SyncSpec, name: Optional[str] = None) -> Machine:
    """Composite machine: disjoint variable union, synchronised events with
    conjoined guards and unified parameters, interleaving elsewhere."""
    spec.validate(machines)
    seen_vars: dict = {}
    for m in machines:
        for v in m.var_names():
            if v in seen_vars:
                raise VariableClash(f"variable {v} in both {seen_vars[v]} and {m.name}")
            seen_vars[v] = m.name

    sees: list = []
    for m in machines:
        for c in m.sees:
            if c not in sees:
                sees.append(c)

    variables = tuple(v for m in machines for v in m.variables)
    invariants = tuple(i for m in machines for i in m.invariants)

    init_actions: list = []
    init_guards: list = []
    for m in machines:
        init = m.init_event()
        init_actions.extend(init.actions)
        init_guards.extend(init.guards)
    events = [Event(INIT_EVENT, (), tuple(init_guards), tuple(init_actions))]

    synced = {(mn, en) for parts in spec.syncs.values() for mn, en in parts}
    by_name = {m.name: m for m in machines}

    for comp_name, participants in spec.syncs.items():
        parts = [by_name[mn].event(en) for mn, en in participants]
        params: list = []
        param_domains: dict = {}
        for ev in parts:
            for pname, pdom in ev.params:
                if pname in param_domains:
                    if param_domains[pname] != pdom:
                        # both constraints apply: intersect the domains
                        idx = next(i for i, (n, _) in enumerate(params) if n == pname)
                        merged = Expr("inter", (param_domains[pname], pdom))
                        params[idx] = (pname, merged)
                        param_domains[pname] = merged
                else:
                    param_domains[pname] = pdom
                    params.append((pname, pdom))
        guards = tuple(g for ev in parts for g in ev.guards)
        actions: list = []
        assigned: set = set()
        for ev in parts:
            for a in ev.actions:
                if a.var in assigned:
                    raise VariableClash(
                        f"sync {comp_name}: variable {a.var} assigned by two participants")
                assigned.add(a.var)
                actions.append(a)
        events.append(Event(comp_name, tuple(params), guards, tuple(actions)))

    for m in machines:
        for ev in m.regular_events():
            if (m.name, ev.name) not in synced:
                events.append(
                    Event(ev.name, ev.params, ev.guards, ev.actions))

    return Machine(
        name=name or "_".join(m.name for m in machines),
        sees=tuple(sees),
        variables=variables,
        invariants=invariants,
        events=tuple(events),
    )


@dataclass(frozen=True)
class DecomposeResult:
    machines: tuple
    sync: SyncSpec
    non_distributable: tuple  # invariants left on the composite only


def _conjunct_component(node, partition, what) -> Optional[str]:
    comps = {partition[n] for n in refs(node) if n in partition}
    if len(comps) > 1:
        raise NonSeparableGuard(f"{what} mixes components {sorted(comps)}")
    return comps.pop() if comps else None


def decompose(machine: Machine, spec: DecompositionSpec) -> DecomposeResult:
    """Split a machine along a variable partition into synchronised
    sub-machines (one per component)."""
    spec.validate(machine)
    part = spec.partition

    comp_vars = {
        c: tuple(v for v in machine.variables if part[v.name] == c)
        for c in spec.components
    }

    # invariants move to the single component they mention, if any
    comp_invs: dict = {c: [] for c in spec.components}
    non_dist: list = []
    for inv in machine.invariants:
        comps = {part[n] for n in refs(inv.pred) if n in part}
        if len(comps) == 1:
            comp_invs[comps.pop()].append(inv)
        elif comps:
            non_dist.append(inv)
        # constant-only invariants stay composite-only as well
        else:
            non_dist.append(inv)

    comp_events: dict = {c: [] for c in spec.components}
    syncs: dict = {}

    for ev in machine.events:
        where = f"{machine.name}.{ev.name}"
        conjunct_comp: list = []
        for g in ev.guards:
            conjunct_comp.append(_conjunct_component(g, part, f"{where} guard"))
        action_comp: list = []
        for a in ev.actions:
            target = part[a.var]
            for n in refs(a.rhs):
                if n in part and part[n] != target:
                    raise NonSeparableAction(
                        f"{where}: action on {a.var} reads {n} of another component")
            if a.arg is not None:
                for n in refs(a.arg):
                    if n in part and part[n] != target:
                        raise NonSeparableAction(
                            f"{where}: update index on {a.var} reads {n}")
            action_comp.append(target)
        for pname, pdom in ev.params:
            if any(n in part for n in refs(pdom)):
                raise NonSeparableGuard(
                    f"{where}: parameter {pname} domain reads variables; "
                    "use a constant domain plus a guard conjunct")

        touched = [c for c in spec.components
                   if c in set(action_comp) | {x for x in conjunct_comp if x}]
        if not touched:
            touched = [spec.components[0]]
        first = touched[0]

        for comp in touched:
            guards = tuple(
                g for g, gc in zip(ev.guards, conjunct_comp)
                if gc == comp or (gc is None and comp == first)
            )
            actions = tuple(
                a for a, ac in zip(ev.actions, action_comp) if ac == comp
            )
            used: set = set()
            for g in guards:
                used |= refs(g)
            for a in actions:
                used |= refs(a.rhs)
                if a.arg is not None:
                    used |= refs(a.arg)
            params = tuple((n, d) for n, d in ev.params if n in used)
            comp_events[comp].append(
                Event(ev.name, params, guards, actions))

        if ev.name != INIT_EVENT and len(touched) > 1:
            syncs[ev.name] = tuple((c, ev.name) for c in touched)

    machines = tuple(
        Machine(
            name=c,
            sees=machine.sees,
            variables=comp_vars[c],
            invariants=tuple(comp_invs[c]),
            events=tuple(comp_events[c]),
        )
        for c in spec.components
    )
    return DecomposeResult(machines, SyncSpec(syncs), tuple(non_dist))


# -- graph equivalence -------------------------------------------------------


@dataclass(frozen=True)
class Correspondence:
    """Renaming applied to the right-hand graph before comparison."""

    var_map: dict = field(default_factory=dict)     # right var -> left var
    event_map: dict = field(default_factory=dict)   # right event -> left event
    param_map: dict = field(default_factory=dict)   # right param -> left param
    atom_map: dict = field(default_factory=dict)    # right atom -> left atom


@dataclass(frozen=True)
class EquivalenceWitness:
    kind: str   # "state" | "edge" | "initial"
    side: str   # "left-only" | "right-only"
    item: object

    def __str__(self):
        return f"{self.kind} {self.side}: {self.item}"


def _canon_states(graph: StateGraph, var_order, var_map, atom_map):
    names = [var_map.get(n, n) for n in graph.var_names]
    pos = {n: i for i, n in enumerate(names)}
    missing = [v for v in var_order if v not in pos]
    if missing:
        raise CompositionError(f"correspondence misses variables {missing}")
    reorder = [pos[v] for v in var_order]
    out = []
    for st in graph.states:
        vals = [rename_atoms(st[i], atom_map) if atom_map else st[i] for i in reorder]
        out.append(tuple(vals))
    return out


def _canon_label(label, event_map, param_map, atom_map):
    params = tuple(
        sorted(
            (param_map.get(n, n), rename_atoms(v, atom_map) if atom_map else v)
            for n, v in label.params
        )
    )
    return (event_map.get(label.event, label.event), params)


def graph_equivalent(
    g1: StateGraph,
    g2: StateGraph,
    correspondence: Optional[Correspondence] = None,
) -> tuple:
    """Compare two fully explored graphs as labeled transition systems.

    States are identified by variable content (after applying the
    correspondence to g2), so equivalence is set equality of initial
    states, states, and labeled edges.  Returns (equivalent, witness).
    """
    if g1.bound_hit or g2.bound_hit:
        raise PartialGraph("graphs must be fully explored")
    c = correspondence or Correspondence()

    var_order = list(g1.var_names)
    left_states = [tuple(st) for st in g1.states]
    right_states = _canon_states(g2, var_order, c.var_map, c.atom_map)

    def edge_key(states, graph, canon_label):
        return {
            (states[s], canon_label(lab), states[t])
            for s, lab, t in graph.edges
        }

    left_set = set(left_states)
    right_set = set(right_states)
    if left_set != right_set:
        only_left = sorted(left_set - right_set, key=value_key)
        only_right = sorted(right_set - left_set, key=value_key)
        if only_left:
            return False, EquivalenceWitness("state", "left-only", dict(zip(var_order, only_left[0])))
        return False, EquivalenceWitness("state", "right-only", dict(zip(var_order, only_right[0])))

    left_init = {left_states[i] for i in g1.initial}
    right_init = {right_states[i] for i in g2.initial}
    if left_init != right_init:
        only = sorted(left_init ^ right_init, key=value_key)
        side = "left-only" if only[0] in left_init else "right-only"
        return False, EquivalenceWitness("initial", side, dict(zip(var_order, only[0])))

    ident = lambda lab: _canon_label(lab, {}, {}, {})
    conv = lambda lab: _canon_label(lab, c.event_map, c.param_map, c.atom_map)
    left_edges = edge_key(left_states, g1, ident)
    right_edges = edge_key(right_states, g2, conv)
    if left_edges != right_edges:
        diff = left_edges ^ right_edges
        item = sorted(diff, key=lambda e: (value_key(e[0]), e[1], value_key(e[2])))[0]
        side = "left-only" if item in left_edges else "right-only"
        src, lab, dst = item
        return False, EquivalenceWitness(
            "edge", side,
            {"from": dict(zip(var_order, src)), "label": lab, "to": dict(zip(var_order, dst))},
        )
    return True, None
