"""Exhaustive breadth-first reachability with invariant and deadlock
checking.

States are tuples of variable values in declaration order, deduplicated by
native hashing.  Exploration is deterministic: events fire in declaration
order, parameter domains enumerate in canonical value order, and
nondeterministic (::) actions fan out in canonical order, so two runs of
the same machine produce identical graphs.  Parallel workers compute
successor sets for a frontier concurrently but merge them in frontier
order, which keeps the published graph identical to the sequential one.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .model import INIT_EVENT, Scope
from .values import EvalError, TypeMismatch, sorted_values, value_str

DEFAULT_MAX_STATES = 1_000_000


class ExplorerError(Exception):
    pass


@dataclass(frozen=True)
class TransitionLabel:
    event: str
    params: tuple = ()  # ((name, value), ...) in declaration order

    def __str__(self):
        if not self.params:
            return self.event
        inner = ", ".join(f"{n}={value_str(v)}" for n, v in self.params)
        return f"{self.event}({inner})"


@dataclass(frozen=True)
class Violation:
    kind: str  # INVARIANT | DEADLOCK | THEOREM
    invariant: Optional[str]
    tag: Optional[str]
    trace: tuple  # TransitionLabel from an initial state
    state: dict  # variable name -> Value at the end state

    def to_json(self) -> str:
        doc = {
            "kind": self.kind,
            "invariant": self.invariant,
            "tag": self.tag,
            "trace": [
                {"event": t.event, "params": {n: value_str(v) for n, v in t.params}}
                for t in self.trace
            ],
            "state": {k: value_str(v) for k, v in sorted(self.state.items())},
        }
        return json.dumps(doc, sort_keys=True)


class StateGraph:
    """Reachable states plus labeled transitions of one machine."""

    def __init__(self, var_names):
        self.var_names = tuple(var_names)
        self.states: list = []          # id -> state tuple
        self.index: dict = {}           # state tuple -> id
        self.initial: list = []         # ids produced by INITIALISATION
        self.edges: list = []           # (src id, TransitionLabel, dst id)
        self.parent: list = []          # id -> (parent id, label) or None
        self.out_degree: list = []
        self.bound_hit = False

    def add_state(self, state, parent) -> tuple:
        sid = self.index.get(state)
        if sid is not None:
            return sid, False
        sid = len(self.states)
        self.states.append(state)
        self.index[state] = sid
        self.parent.append(parent)
        self.out_degree.append(0)
        return sid, True

    def state_dict(self, sid: int) -> dict:
        return dict(zip(self.var_names, self.states[sid]))

    def trace_to(self, sid: int) -> tuple:
        labels = []
        cur = sid
        while True:
            p = self.parent[cur]
            if p is None:
                break
            cur, label = p[0], p[1]
            labels.append(label)
        return tuple(reversed(labels))

    @property
    def state_count(self) -> int:
        return len(self.states)

    @property
    def edge_count(self) -> int:
        return len(self.edges)


class _CompiledEvent:
    __slots__ = ("name", "params", "guards", "actions", "event")

    def __init__(self, event, var_index):
        self.event = event
        self.name = event.name
        self.params = [(n, d.compiled()) for n, d in event.params]
        self.guards = [g.compiled() for g in event.guards]
        self.actions = [
            (var_index[a.var], a.kind,
             a.arg.compiled() if a.arg is not None else None,
             a.rhs.compiled())
            for a in event.actions
        ]


class CompiledMachine:
    """Scope compiled for exploration; safe for concurrent readers."""

    def __init__(self, scope: Scope):
        self.scope = scope
        self.machine = scope.machine
        self.var_names = scope.machine.var_names()
        self.var_index = {n: i for i, n in enumerate(self.var_names)}
        self.constants = dict(scope.constants)
        self.init = None
        self.events = []
        for e in scope.machine.events:
            ce = _CompiledEvent(e, self.var_index)
            if e.name == INIT_EVENT:
                self.init = ce
            else:
                self.events.append(ce)
        self.invariants = [
            (inv.name, inv.tag, inv.pred.compiled())
            for inv in scope.machine.invariants
        ]
        self.shapes = [
            (v.name, v.shape.compiled()) for v in scope.machine.variables
        ]

    def env_for(self, state) -> dict:
        env = dict(self.constants)
        for name, v in zip(self.var_names, state):
            env[name] = v
        return env

    def initial_states(self) -> list:
        if self.init is None:
            raise ExplorerError(f"{self.machine.name}: no {INIT_EVENT} event")
        env = dict(self.constants)
        try:
            for g in self.init.guards:
                if not g(env):
                    return []
            empty = (None,) * len(self.var_names)
            return [s for _, s in self._fire(self.init, env, empty, ())]
        except EvalError as exc:
            raise ExplorerError(f"{self.machine.name}.{INIT_EVENT}: {exc}") from exc

    def _fire(self, ce: _CompiledEvent, env: dict, state, binding) -> list:
        """Fan out one satisfied (event, binding): one successor per
        combination of bounded-choice values, canonical order."""
        updates: list = []  # (index, [values...])
        for idx, kind, argc, rhsc in ce.actions:
            if kind == ":=":
                if argc is not None:
                    old = env[self.var_names[idx]]
                    if not isinstance(old, frozenset):
                        raise TypeMismatch(
                            f"{ce.name}: function update on non-relation {self.var_names[idx]}")
                    key = argc(env)
                    val = rhsc(env)
                    new = frozenset(p for p in old if p[0] != key) | {(key, val)}
                    updates.append((idx, [new]))
                else:
                    updates.append((idx, [rhsc(env)]))
            else:  # bounded choice v :: S
                choices = rhsc(env)
                if not isinstance(choices, frozenset):
                    raise TypeMismatch(f"{ce.name}: :: requires a finite set")
                updates.append((idx, sorted_values(choices)))
        results: list = []
        label = TransitionLabel(ce.name, binding)

        def expand(i, acc):
            if i == len(updates):
                new_state = list(state)
                for idx, v in acc:
                    new_state[idx] = v
                results.append((label, tuple(new_state)))
                return
            idx, vals = updates[i]
            for v in vals:
                expand(i + 1, acc + [(idx, v)])

        expand(0, [])
        return results

    def successors(self, state) -> list:
        """All (label, successor) pairs, canonical order."""
        env = self.env_for(state)
        out: list = []
        for ce in self.events:
            try:
                self._event_successors(ce, env, state, out)
            except EvalError as exc:
                raise ExplorerError(
                    f"{self.machine.name}.{ce.name}: {exc} "
                    f"(state {dict(zip(self.var_names, map(value_str, state)))})"
                ) from exc
        return out

    def _event_successors(self, ce, env, state, out):
        params = ce.params

        def enum(i, binding):
            if i == len(params):
                for g in ce.guards:
                    if not g(env):
                        return
                out.extend(self._fire(ce, env, state, tuple(binding)))
                return
            name, domc = params[i]
            domain = domc(env)
            if not isinstance(domain, frozenset):
                raise TypeMismatch(f"parameter {name}: domain is not a set")
            for v in sorted_values(domain):
                env[name] = v
                binding.append((name, v))
                enum(i + 1, binding)
                binding.pop()
            if params[i][0] in env:
                del env[name]

        enum(0, [])

    def check_state(self, state) -> Optional[tuple]:
        """First violated invariant on a state, or None."""
        env = self.env_for(state)
        for name, tag, c in self.invariants:
            try:
                if not c(env):
                    return (name, tag)
            except EvalError as exc:
                raise ExplorerError(f"{self.machine.name}.{name}: {exc}") from exc
        return None


def successors(scope_or_compiled, state) -> list:
    cm = _as_compiled(scope_or_compiled)
    if isinstance(state, dict):
        state = tuple(state[n] for n in cm.var_names)
    return cm.successors(state)


def _as_compiled(s) -> CompiledMachine:
    return s if isinstance(s, CompiledMachine) else CompiledMachine(s)


def explore(
    scope,
    max_states: int = DEFAULT_MAX_STATES,
    workers: int = 1,
    fail_fast: bool = False,
) -> tuple:
    """Breadth-first closure from the initial states.

    Returns (StateGraph, first Violation or None).  With fail_fast the
    search stops at the first state violating an invariant; otherwise the
    graph is completed and invariants are left to check_invariants.
    """
    cm = _as_compiled(scope)
    graph = StateGraph(cm.var_names)
    violation = None

    def violating(sid) -> Optional[Violation]:
        hit = cm.check_state(graph.states[sid])
        if hit is None:
            return None
        return Violation(
            kind="INVARIANT",
            invariant=hit[0],
            tag=hit[1],
            trace=graph.trace_to(sid),
            state=graph.state_dict(sid),
        )

    for st in cm.initial_states():
        if len(graph.states) >= max_states:
            graph.bound_hit = True
            return graph, violation
        sid, new = graph.add_state(st, None)
        if new:
            graph.initial.append(sid)
            if fail_fast:
                violation = violating(sid)
                if violation:
                    return graph, violation

    frontier = list(graph.initial)
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while frontier:
            if pool is not None:
                all_succ = list(pool.map(cm.successors, (graph.states[s] for s in frontier)))
            else:
                all_succ = [cm.successors(graph.states[s]) for s in frontier]
            next_frontier: list = []
            for sid, succ in zip(frontier, all_succ):
                for label, st in succ:
                    tid = graph.index.get(st)
                    if tid is None:
                        if len(graph.states) >= max_states:
                            graph.bound_hit = True
                            graph.edges.append((sid, label, graph.add_state(st, (sid, label))[0]))
                            graph.out_degree[sid] += 1
                            return graph, violation
                        tid, _ = graph.add_state(st, (sid, label))
                        next_frontier.append(tid)
                        if fail_fast:
                            violation = violating(tid)
                            if violation:
                                graph.edges.append((sid, label, tid))
                                graph.out_degree[sid] += 1
                                return graph, violation
                    graph.edges.append((sid, label, tid))
                    graph.out_degree[sid] += 1
            frontier = next_frontier
    finally:
        if pool is not None:
            pool.shutdown(wait=False)
    return graph, violation


def check_invariants(graph: StateGraph, scope) -> list:
    """One Violation per invariant at its first-reached (hence shortest
    BFS trace) violating state; empty list means all states conform."""
    cm = _as_compiled(scope)
    pending = {name: (tag, c) for name, tag, c in cm.invariants}
    found: dict = {}
    order: list = [name for name, _, _ in cm.invariants]
    for sid, state in enumerate(graph.states):
        if not pending:
            break
        env = cm.env_for(state)
        for name in list(pending):
            tag, c = pending[name]
            try:
                ok = c(env)
            except EvalError as exc:
                raise ExplorerError(f"{cm.machine.name}.{name}: {exc}") from exc
            if not ok:
                found[name] = Violation(
                    kind="INVARIANT",
                    invariant=name,
                    tag=tag,
                    trace=graph.trace_to(sid),
                    state=graph.state_dict(sid),
                )
                del pending[name]
    return [found[n] for n in order if n in found]


def check_deadlock(graph: StateGraph) -> list:
    """DEADLOCK Violations for reachable states with no successors.
    When graph.bound_hit the graph is partial and so is this answer."""
    out = []
    for sid, deg in enumerate(graph.out_degree):
        if deg == 0:
            out.append(
                Violation(
                    kind="DEADLOCK",
                    invariant=None,
                    tag=None,
                    trace=graph.trace_to(sid),
                    state=graph.state_dict(sid),
                )
            )
    return out


def replay(scope, trace) -> list:
    """Re-run a trace from the initial states using successors(); returns
    the list of reachable end-state dicts.  Raises if a step is disabled."""
    cm = _as_compiled(scope)
    candidates = cm.initial_states()
    if not candidates:
        raise ExplorerError("no initial states")
    for label in trace:
        next_states = []
        for st in candidates:
            for lab, succ in cm.successors(st):
                if lab == label:
                    next_states.append(succ)
        if not next_states:
            raise ExplorerError(f"trace step {label} not enabled")
        candidates = next_states
    return [dict(zip(cm.var_names, st)) for st in candidates]
