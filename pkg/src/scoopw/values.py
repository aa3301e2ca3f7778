"""Runtime values shared by the compiled IR and the configuration model.

Values are plain Python objects: ``int`` (INTEGER), ``bool`` (BOOLEAN),
``None`` (Void) and :class:`Ref` (object reference).
"""

from __future__ import annotations

from typing import NamedTuple, Union

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


class Ref(NamedTuple):
    handler: int
    obj: int

    __repr__ = tuple.__repr__


Value = Union[int, bool, None, Ref]


class RuntimeFault(Exception):
    """A run-time error that turns the current configuration into an error
    configuration (``kind`` is an ErrorMarker kind such as ``"VoidCall"``)."""

    def __init__(self, kind: str, detail: str):
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.detail = detail


def checked(n: int) -> int:
    if n < INT_MIN or n > INT_MAX:
        raise RuntimeFault("Overflow", f"integer overflow ({n})")
    return n


def default_value(type_name: str | None) -> Value:
    if type_name == "INTEGER":
        return 0
    if type_name == "BOOLEAN":
        return False
    return None


def format_value(v: Value) -> str:
    if v is None:
        return "Void"
    if v is True:
        return "True"
    if v is False:
        return "False"
    if isinstance(v, tuple):
        return f"@{v[0]}.{v[1]}"
    return str(v)
