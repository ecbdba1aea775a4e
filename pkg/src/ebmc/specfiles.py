"""Parsers for the small sidecar formats that drive refinement checking
(.glue), composition (.sync), decomposition (.part) and instantiation
(.ren).  All are line oriented with '#' comments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .composition import DecompositionSpec, SyncSpec
from .instantiation import Renaming
from .model import Machine
from .parser import parse_pred_text
from .refinement import NEW, GluingSpec, RefinementError


class SpecFileError(Exception):
    pass


def _lines(text: str):
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield i, line


@dataclass(frozen=True)
class GlueFile:
    abstract: str
    concrete: str
    event_lines: dict      # concrete event -> abstract event | NEW
    gluing: tuple          # Pred conjuncts


def parse_glue(text: str, filename: str = "<glue>") -> GlueFile:
    abstract = concrete = None
    event_lines: dict = {}
    gluing: list = []
    section = None
    for ln, line in _lines(text):
        where = f"{filename}:{ln}"
        if line.startswith("glue "):
            parts = line.split()
            if len(parts) != 3:
                raise SpecFileError(f"{where}: expected 'glue ABSTRACT CONCRETE'")
            _, abstract, concrete = parts
        elif line == "refines":
            section = "refines"
        elif line == "gluing":
            section = "gluing"
        elif section == "refines":
            if "->" not in line:
                raise SpecFileError(f"{where}: expected 'concreteEvt -> abstractEvt | new'")
            lhs, rhs = (s.strip() for s in line.split("->", 1))
            event_lines[lhs] = NEW if rhs == "new" else rhs
        elif section == "gluing":
            gluing.append(parse_pred_text(line, filename))
        else:
            raise SpecFileError(f"{where}: line outside any section: {line}")
    if abstract is None:
        raise SpecFileError(f"{filename}: missing 'glue ABSTRACT CONCRETE' header")
    return GlueFile(abstract, concrete, event_lines, tuple(gluing))


def build_gluing(abstract: Machine, concrete: Machine, glue: GlueFile) -> GluingSpec:
    """Event map from explicit glue lines, falling back to the machine's
    refines/new annotations and then to same-name matching."""
    abs_events = {e.name for e in abstract.regular_events()}
    event_map: dict = {}
    for e in concrete.regular_events():
        if e.name in glue.event_lines:
            event_map[e.name] = glue.event_lines[e.name]
        elif e.is_new:
            event_map[e.name] = NEW
        elif e.refines_event is not None:
            event_map[e.name] = e.refines_event
        elif e.name in abs_events:
            event_map[e.name] = e.name
        else:
            raise RefinementError(
                f"no mapping for concrete event {e.name} "
                f"(add a 'refines' line to the glue file)")
    spec = GluingSpec(gluing=glue.gluing, event_map=event_map)
    spec.validate(abstract, concrete)
    return spec


def parse_sync(text: str, filename: str = "<sync>") -> SyncSpec:
    syncs: dict = {}
    for ln, line in _lines(text):
        where = f"{filename}:{ln}"
        if not line.startswith("sync "):
            raise SpecFileError(f"{where}: expected 'sync NAME = M.evt & M.evt ...'")
        rest = line[len("sync "):]
        if "=" not in rest:
            raise SpecFileError(f"{where}: missing '='")
        name, rhs = (s.strip() for s in rest.split("=", 1))
        participants = []
        for part in rhs.split("&"):
            part = part.strip()
            if "." not in part:
                raise SpecFileError(f"{where}: participant {part!r} is not M.event")
            mname, ename = part.split(".", 1)
            participants.append((mname.strip(), ename.strip()))
        if name in syncs:
            raise SpecFileError(f"{where}: duplicate sync {name}")
        syncs[name] = tuple(participants)
    return SyncSpec(syncs)


def render_sync(spec: SyncSpec) -> str:
    lines = []
    for name, parts in spec.syncs.items():
        rhs = " & ".join(f"{m}.{e}" for m, e in parts)
        lines.append(f"sync {name} = {rhs}")
    return "\n".join(lines) + "\n"


def parse_part(text: str, filename: str = "<part>") -> tuple:
    """Returns (machine name, DecompositionSpec)."""
    machine = None
    components: list = []
    partition: dict = {}
    for ln, line in _lines(text):
        where = f"{filename}:{ln}"
        if line.startswith("part "):
            machine = line.split(None, 1)[1].strip()
        elif line.startswith("component "):
            rest = line[len("component "):]
            if ":" not in rest:
                raise SpecFileError(f"{where}: expected 'component NAME: vars...'")
            cname, vars_ = rest.split(":", 1)
            cname = cname.strip()
            components.append(cname)
            for v in vars_.replace(",", " ").split():
                if v in partition:
                    raise SpecFileError(f"{where}: variable {v} assigned twice")
                partition[v] = cname
        else:
            raise SpecFileError(f"{where}: unexpected line {line!r}")
    if machine is None:
        raise SpecFileError(f"{filename}: missing 'part MACHINE' header")
    return machine, DecompositionSpec(tuple(components), partition)


_REN_SECTIONS = ("sets", "constants", "variables", "events", "parameters", "machines")


def parse_ren(text: str, filename: str = "<ren>") -> Renaming:
    maps: dict = {ns: {} for ns in _REN_SECTIONS}
    section = None
    for ln, line in _lines(text):
        where = f"{filename}:{ln}"
        word = line.rstrip(":")
        if word in _REN_SECTIONS and ("->" not in line):
            section = word
            continue
        if section is None:
            raise SpecFileError(f"{where}: rename line before any section header")
        if "->" not in line:
            raise SpecFileError(f"{where}: expected 'old -> new'")
        old, new = (s.strip() for s in line.split("->", 1))
        if old in maps[section]:
            raise SpecFileError(f"{where}: {old} renamed twice in {section}")
        maps[section][old] = new
    return Renaming(**maps)
