"""GraphViz rendering of CFAs."""
from __future__ import annotations

from .lang import Cfa


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def dump_dot(cfa: Cfa, name: str = "cfa") -> str:
    lines = [f"digraph {name} {{", "  rankdir=TB;"]
    for v in cfa.vertices:
        attrs = [f"label={_quote(cfa.vertex_name(v))}"]
        attrs.append("shape=doublecircle" if v in cfa.errors else "shape=circle")
        if v == cfa.init:
            attrs.append("penwidth=2")
        lines.append(f"  n{v} [{', '.join(attrs)}];")
    for e in cfa.edges:
        attrs = [f"label={_quote(str(e.stmt))}"]
        if e.tag == "accel":
            attrs.append("style=bold")
        elif e.tag:
            attrs.append(f"comment={_quote(e.tag)}")
        lines.append(f"  n{e.src} -> n{e.dst} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
