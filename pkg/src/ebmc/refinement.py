"""Forward-simulation refinement checking over explored state spaces.

The abstract and concrete machines get disjoint namespaces by prefixing
variable names with ``abs_`` and ``conc_``; the gluing invariant J is a
conjunction of predicates over those prefixed names plus shared constants.
The check explores reachable J-satisfying pairs: every concrete step must
be matched by an abstract step of the mapped event re-establishing J (any
abstract parameter binding may serve as the witness), and steps of NEW
events must re-establish J with the abstract state unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .exprs import refs
from .explorer import CompiledMachine, TransitionLabel
from .model import INIT_EVENT, Machine, Scope
from .values import EvalError, value_str

ABS_PREFIX = "abs_"
CONC_PREFIX = "conc_"

NEW = None  # event_map value marking a concrete event as new


class RefinementError(Exception):
    pass


class NamespaceClash(RefinementError):
    pass


@dataclass(frozen=True)
class GluingSpec:
    gluing: tuple        # Pred conjuncts over abs_/conc_ prefixed variables
    event_map: dict      # concrete event name -> abstract event name | NEW

    def validate(self, abstract: Machine, concrete: Machine):
        abs_events = {e.name for e in abstract.regular_events()}
        for e in concrete.regular_events():
            if e.name not in self.event_map:
                raise RefinementError(f"concrete event {e.name} unmapped")
            target = self.event_map[e.name]
            if target is not NEW and target not in abs_events:
                raise RefinementError(
                    f"{e.name} maps to unknown abstract event {target}")


def event_map_from(concrete: Machine, abstract: Machine) -> dict:
    """Default event map: explicit refines/new annotations, else same name."""
    abs_events = {e.name for e in abstract.regular_events()}
    out = {}
    for e in concrete.regular_events():
        if e.is_new:
            out[e.name] = NEW
        elif e.refines_event is not None:
            out[e.name] = e.refines_event
        elif e.name in abs_events:
            out[e.name] = e.name
        else:
            raise RefinementError(
                f"cannot infer mapping for concrete event {e.name}")
    return out


@dataclass(frozen=True)
class RefinementWitness:
    reason: str                     # "no-abstract-match" | "J-broken" | "init-unmatched"
    trace: tuple                    # concrete TransitionLabels reaching the failure
    step: Optional[TransitionLabel]
    conc_state: dict
    abs_state: Optional[dict]

    def __str__(self):
        steps = " -> ".join(str(t) for t in self.trace) or "<init>"
        at = f" at step {self.step}" if self.step else ""
        return f"{self.reason}{at} after {steps}"


@dataclass(frozen=True)
class RefinementVerdict:
    holds: bool
    witness: Optional[RefinementWitness] = None
    bound_hit: bool = False
    pairs_explored: int = 0

    @property
    def inconclusive(self) -> bool:
        return self.bound_hit and not self.holds and self.witness is None


def _merged_constants(a: CompiledMachine, c: CompiledMachine) -> dict:
    merged = dict(a.constants)
    for k, v in c.constants.items():
        if k in merged and merged[k] != v:
            raise NamespaceClash(f"constant {k} differs between machines")
        merged[k] = v
    return merged


def _check_new_events_syntactically(spec: GluingSpec, concrete: Machine):
    """Early lint: a NEW event must not assign a concrete variable that a
    gluing conjunct directly equates with an abstract variable."""
    retained = {}
    for g in spec.gluing:
        if g.op == "eq":
            l, r = g.args
            if l.op == "ref" and r.op == "ref":
                ln, rn = l.args[0], r.args[0]
                if ln.startswith(ABS_PREFIX) and rn.startswith(CONC_PREFIX):
                    retained.setdefault(rn[len(CONC_PREFIX):], ln)
                if rn.startswith(ABS_PREFIX) and ln.startswith(CONC_PREFIX):
                    retained.setdefault(ln[len(CONC_PREFIX):], rn)
    for e in concrete.regular_events():
        if spec.event_map.get(e.name, "x") is NEW:
            for act in e.actions:
                if act.var in retained:
                    raise RefinementError(
                        f"NEW event {e.name} modifies {act.var}, which the "
                        f"gluing equates with abstract {retained[act.var]}")


def check_refinement(
    abstract: Scope,
    concrete: Scope,
    spec: GluingSpec,
    bound: int = 1_000_000,
) -> RefinementVerdict:
    """Product exploration of J-linked state pairs (forward simulation)."""
    spec.validate(abstract.machine, concrete.machine)
    _check_new_events_syntactically(spec, concrete.machine)

    am = CompiledMachine(abstract)
    cm = CompiledMachine(concrete)
    consts = _merged_constants(am, cm)

    for g in spec.gluing:
        for name in refs(g):
            if name in consts:
                continue
            if name.startswith(ABS_PREFIX) and name[len(ABS_PREFIX):] in am.var_index:
                continue
            if name.startswith(CONC_PREFIX) and name[len(CONC_PREFIX):] in cm.var_index:
                continue
            raise NamespaceClash(f"gluing references unknown name {name}")

    gluing_c = [g.compiled() for g in spec.gluing]
    abs_names = [ABS_PREFIX + n for n in am.var_names]
    conc_names = [CONC_PREFIX + n for n in cm.var_names]

    def j_holds(astate, cstate) -> bool:
        env = dict(consts)
        for n, v in zip(abs_names, astate):
            env[n] = v
        for n, v in zip(conc_names, cstate):
            env[n] = v
        try:
            return all(g(env) for g in gluing_c)
        except EvalError as exc:
            raise RefinementError(f"gluing evaluation failed: {exc}") from exc

    abs_succ_cache: dict = {}

    def abs_succs(astate):
        got = abs_succ_cache.get(astate)
        if got is None:
            by_event: dict = {}
            for label, st in am.successors(astate):
                by_event.setdefault(label.event, []).append(st)
            abs_succ_cache[astate] = got = by_event
        return got

    conc_succ_cache: dict = {}

    def conc_succs(cstate):
        got = conc_succ_cache.get(cstate)
        if got is None:
            conc_succ_cache[cstate] = got = cm.successors(cstate)
        return got

    def cdict(cstate):
        return dict(zip(cm.var_names, cstate))

    def adict(astate):
        return dict(zip(am.var_names, astate))

    abs_inits = am.initial_states()
    conc_inits = cm.initial_states()

    pairs: dict = {}
    parent: list = []
    order: list = []
    frontier: list = []

    def add_pair(a, c, par):
        key = (a, c)
        pid = pairs.get(key)
        if pid is not None:
            return pid, False
        pid = len(order)
        pairs[key] = pid
        order.append(key)
        parent.append(par)
        return pid, True

    def trace_of(pid) -> tuple:
        out = []
        while True:
            p = parent[pid]
            if p is None:
                break
            pid, label = p
            out.append(label)
        return tuple(reversed(out))

    for c0 in conc_inits:
        matched = False
        for a0 in abs_inits:
            if j_holds(a0, c0):
                matched = True
                pid, new = add_pair(a0, c0, None)
                if new:
                    frontier.append(pid)
        if not matched:
            return RefinementVerdict(
                holds=False,
                witness=RefinementWitness(
                    reason="init-unmatched",
                    trace=(),
                    step=None,
                    conc_state=cdict(c0),
                    abs_state=None,
                ),
            )

    while frontier:
        next_frontier = []
        for pid in frontier:
            astate, cstate = order[pid]
            for label, cnext in conc_succs(cstate):
                target = spec.event_map[label.event]
                if target is NEW:
                    if not j_holds(astate, cnext):
                        return RefinementVerdict(
                            holds=False,
                            witness=RefinementWitness(
                                reason="J-broken",
                                trace=trace_of(pid),
                                step=label,
                                conc_state=cdict(cnext),
                                abs_state=adict(astate),
                            ),
                            pairs_explored=len(order),
                        )
                    matches = [astate]
                else:
                    matches = [
                        anext
                        for anext in abs_succs(astate).get(target, ())
                        if j_holds(anext, cnext)
                    ]
                    if not matches:
                        return RefinementVerdict(
                            holds=False,
                            witness=RefinementWitness(
                                reason="no-abstract-match",
                                trace=trace_of(pid),
                                step=label,
                                conc_state=cdict(cnext),
                                abs_state=adict(astate),
                            ),
                            pairs_explored=len(order),
                        )
                for anext in matches:
                    if len(order) >= bound:
                        return RefinementVerdict(
                            holds=False, bound_hit=True, pairs_explored=len(order))
                    npid, new = add_pair(anext, cnext, (pid, label))
                    if new:
                        next_frontier.append(npid)
        frontier = next_frontier

    return RefinementVerdict(holds=True, pairs_explored=len(order))


def identity_gluing(machine: Machine) -> GluingSpec:
    """J equating every paired variable, identity event map (reflexivity)."""
    from .exprs import Expr, Pred

    conjuncts = tuple(
        Pred("eq", (Expr("ref", (ABS_PREFIX + v,)), Expr("ref", (CONC_PREFIX + v,))))
        for v in machine.var_names()
    )
    event_map = {e.name: e.name for e in machine.regular_events()}
    return GluingSpec(gluing=conjuncts, event_map=event_map)


def check_refinement_transitively(
    a: Scope, b: Scope, c: Scope,
    j1: GluingSpec, j2: GluingSpec,
    bound: int = 10_000,
) -> RefinementVerdict:
    """Audit transitivity at desk scale: explore (a,b,c) triples linked by
    J1(a,b) and J2(b,c); every concrete step of c must be matched through
    the composed maps with some b and a steps re-establishing both
    gluings.  The existential intermediate state is the explored b."""
    am, bm, cmm = CompiledMachine(a), CompiledMachine(b), CompiledMachine(c)
    consts = _merged_constants(am, bm)
    consts = {**consts, **_merged_constants(bm, cmm)}

    j1c = [g.compiled() for g in j1.gluing]
    j2c = [g.compiled() for g in j2.gluing]

    def holds(gc, pre_names, post_names, pre, post):
        env = dict(consts)
        for n, v in zip(pre_names, pre):
            env[n] = v
        for n, v in zip(post_names, post):
            env[n] = v
        return all(g(env) for g in gc)

    a_abs = [ABS_PREFIX + n for n in am.var_names]
    b_conc = [CONC_PREFIX + n for n in bm.var_names]
    b_abs = [ABS_PREFIX + n for n in bm.var_names]
    c_conc = [CONC_PREFIX + n for n in cmm.var_names]

    def j1_holds(sa, sb):
        return holds(j1c, a_abs, b_conc, sa, sb)

    def j2_holds(sb, sc):
        return holds(j2c, b_abs, c_conc, sb, sc)

    succs_cache: dict = {}

    def succs(machine, state):
        key = (id(machine), state)
        if key not in succs_cache:
            by_event: dict = {}
            for label, st in machine.successors(state):
                by_event.setdefault(label.event, []).append(st)
            succs_cache[key] = by_event
        return succs_cache[key]

    triples: set = set()
    frontier: list = []
    for sc0 in cmm.initial_states():
        seeded = False
        for sb0 in bm.initial_states():
            if not j2_holds(sb0, sc0):
                continue
            for sa0 in am.initial_states():
                if j1_holds(sa0, sb0):
                    t = (sa0, sb0, sc0)
                    if t not in triples:
                        triples.add(t)
                        frontier.append(t)
                    seeded = True
        if not seeded:
            return RefinementVerdict(
                holds=False,
                witness=RefinementWitness(
                    reason="init-unmatched", trace=(), step=None,
                    conc_state=dict(zip(cmm.var_names, sc0)), abs_state=None),
            )

    while frontier:
        nxt = []
        for sa, sb, sc in frontier:
            for label, sc2 in cmm.successors(sc):
                b_target = j2.event_map[label.event]
                if b_target is NEW:
                    b_matches = [(sb, None)]
                else:
                    b_matches = [
                        (sb2, b_target)
                        for sb2 in succs(bm, sb).get(b_target, ())
                        if j2_holds(sb2, sc2)
                    ]
                ok = []
                for sb2, b_evt in b_matches:
                    if b_evt is None:
                        if j1_holds(sa, sb2):
                            ok.append((sa, sb2))
                        continue
                    a_target = j1.event_map[b_evt]
                    if a_target is NEW:
                        if j1_holds(sa, sb2):
                            ok.append((sa, sb2))
                    else:
                        for sa2 in succs(am, sa).get(a_target, ()):
                            if j1_holds(sa2, sb2):
                                ok.append((sa2, sb2))
                if not ok:
                    return RefinementVerdict(
                        holds=False,
                        witness=RefinementWitness(
                            reason="no-abstract-match",
                            trace=(),
                            step=label,
                            conc_state=dict(zip(cmm.var_names, sc2)),
                            abs_state=dict(zip(am.var_names, sa)),
                        ),
                        pairs_explored=len(triples),
                    )
                for sa2, sb2 in ok:
                    if len(triples) >= bound:
                        return RefinementVerdict(
                            holds=False, bound_hit=True, pairs_explored=len(triples))
                    t = (sa2, sb2, sc2)
                    if t not in triples:
                        triples.add(t)
                        nxt.append(t)
        frontier = nxt
    return RefinementVerdict(holds=True, pairs_explored=len(triples))
