"""Finite set-theoretic values.

Values are plain Python data so that set algebra runs on native
``frozenset`` operations:

    Bool  -> bool          (truth values; machine variables may hold them)
    Int   -> int           (bounded, see INT_MIN/INT_MAX)
    Atom  -> str           (an element of a declared carrier set)
    Pair  -> 2-tuple       (ordered pair; relations are sets of pairs)
    SetV  -> frozenset     (duplicate-free by construction)

Booleans are kept out of set elements: Python's ``True == 1`` would break
structural equality for mixed sets, and nothing in the modeling language
needs a set of booleans.  Sets range over ints, atoms, pairs and sets.
"""

from __future__ import annotations

from typing import Union

Value = Union[bool, int, str, tuple, frozenset]

INT_MIN = -1024
INT_MAX = 1024


class EvalError(Exception):
    """Base class for evaluation failures."""


class UnboundIdentifier(EvalError):
    pass


class IntOutOfBounds(EvalError):
    pass


class TypeMismatch(EvalError):
    pass


def check_int(n: int) -> int:
    if n < INT_MIN or n > INT_MAX:
        raise IntOutOfBounds(f"integer {n} outside [{INT_MIN}, {INT_MAX}]")
    return n


def mkset(items) -> frozenset:
    s = frozenset(items)
    for v in s:
        if isinstance(v, bool):
            raise TypeMismatch("booleans cannot be set elements")
    return s


def mkpair(a: Value, b: Value) -> tuple:
    return (a, b)


def is_pair(v: Value) -> bool:
    return isinstance(v, tuple) and len(v) == 2


def is_relation(v: Value) -> bool:
    return isinstance(v, frozenset) and all(is_pair(x) for x in v)


_TYPE_RANK = {int: 0, str: 1, tuple: 2, frozenset: 3}


def value_key(v: Value):
    """Total order on values; used for canonical set printing and
    deterministic enumeration of nondeterministic choices."""
    if isinstance(v, bool):
        return (-1, v)
    if isinstance(v, int):
        return (0, v)
    if isinstance(v, str):
        return (1, v)
    if isinstance(v, tuple):
        return (2, tuple(value_key(x) for x in v))
    if isinstance(v, frozenset):
        return (3, tuple(sorted(value_key(x) for x in v)))
    raise TypeMismatch(f"not a value: {v!r}")


def sorted_values(vs) -> list:
    return sorted(vs, key=value_key)


def value_str(v: Value) -> str:
    """Canonical printed form; sets print their elements sorted."""
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return v
    if isinstance(v, tuple):
        return f"({value_str(v[0])}|->{value_str(v[1])})"
    if isinstance(v, frozenset):
        return "{" + ", ".join(value_str(x) for x in sorted_values(v)) + "}"
    raise TypeMismatch(f"not a value: {v!r}")


def rename_atoms(v: Value, mapping: dict) -> Value:
    """Structurally replace atom names (used by instantiation audits)."""
    if isinstance(v, str):
        return mapping.get(v, v)
    if isinstance(v, tuple):
        return (rename_atoms(v[0], mapping), rename_atoms(v[1], mapping))
    if isinstance(v, frozenset):
        return frozenset(rename_atoms(x, mapping) for x in v)
    return v
