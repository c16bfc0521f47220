"""Suite manifests.

A manifest is a TOML-subset file with one ``[[program]]`` block per
benchmark.  Recognized keys per block:

    id                  required, unique
    source              path to the .gtlc file, relative to the manifest
    apply_inputs        array of argument lists, each argument a program text
    <mode>_expect       golden migrated surface text (optional)
    <mode>_context      distinguishing context (.gtlc with one HOLE)
    <mode>_witness      hand-written compatible migration (.gtlc)

where <mode> is ``precise`` or ``compatible``.  A program may carry a
context or a witness for a mode, not both.

Only the needed TOML subset is implemented (no TOML parser is available
for this interpreter): table arrays, strings, integers, booleans, and
(nested) single-line or multi-line arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


class ManifestError(Exception):
    pass


def _parse_value(text: str, pos: int):
    n = len(text)
    while pos < n and text[pos] in " \t":
        pos += 1
    if pos >= n:
        raise ManifestError("missing value")
    c = text[pos]
    if c == '"':
        out = []
        pos += 1
        while pos < n and text[pos] != '"':
            if text[pos] == "\\" and pos + 1 < n:
                out.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(text[pos + 1], text[pos + 1]))
                pos += 2
            else:
                out.append(text[pos])
                pos += 1
        if pos >= n:
            raise ManifestError("unterminated string")
        return "".join(out), pos + 1
    if c == "[":
        items = []
        pos += 1
        while True:
            while pos < n and text[pos] in " \t,":
                pos += 1
            if pos >= n:
                raise ManifestError("unterminated array")
            if text[pos] == "]":
                return items, pos + 1
            value, pos = _parse_value(text, pos)
            items.append(value)
    if text.startswith("true", pos):
        return True, pos + 4
    if text.startswith("false", pos):
        return False, pos + 5
    j = pos
    while j < n and (text[j].isdigit() or text[j] == "-"):
        j += 1
    if j > pos:
        return int(text[pos:j]), j
    raise ManifestError(f"cannot parse value at: {text[pos:pos+20]!r}")


def parse_toml_subset(text: str) -> dict:
    """Tables and table arrays of scalar/array values."""
    root: dict = {}
    current = root
    # Join multi-line arrays before line-wise parsing.
    joined: list[str] = []
    buf = ""
    depth = 0
    for raw in text.splitlines():
        line = raw.split("#", 1)[0] if not _hash_in_string(raw) else raw
        buf += (" " if buf else "") + line.strip()
        depth += line.count("[") - line.count("]")
        if depth <= 0:
            if buf.strip():
                joined.append(buf)
            buf = ""
            depth = 0
    if buf.strip():
        joined.append(buf)

    for line in joined:
        line = line.strip()
        if not line:
            continue
        if line.startswith("[["):
            name = line.strip("[]").strip()
            current = {}
            root.setdefault(name, []).append(current)
            continue
        if line.startswith("["):
            name = line.strip("[]").strip()
            current = root.setdefault(name, {})
            continue
        if "=" not in line:
            raise ManifestError(f"cannot parse line: {line!r}")
        key, _, rest = line.partition("=")
        value, _ = _parse_value(rest, 0)
        current[key.strip()] = value
    return root


def _hash_in_string(line: str) -> bool:
    in_string = False
    for i, c in enumerate(line):
        if c == '"' and (i == 0 or line[i - 1] != "\\"):
            in_string = not in_string
        if c == "#" and not in_string:
            return False
    return "#" in line


@dataclass
class ModeSpec:
    expect: str | None = None
    context: Path | None = None  # distinguishing context
    witness: Path | None = None  # hand-written compatible migration


@dataclass
class ProgramEntry:
    id: str
    source: Path
    apply_inputs: list[list[str]] = field(default_factory=list)
    modes: dict[str, ModeSpec] = field(default_factory=dict)

    def mode(self, name: str) -> ModeSpec:
        return self.modes.get(name, ModeSpec())


@dataclass
class SuiteManifest:
    path: Path
    entries: list[ProgramEntry]


def load_manifest(path: str | Path) -> SuiteManifest:
    path = Path(path)
    data = parse_toml_subset(path.read_text())
    base = path.parent
    entries: list[ProgramEntry] = []
    seen: set[str] = set()
    for block in data.get("program", []):
        if "id" not in block or "source" not in block:
            raise ManifestError("every [[program]] needs id and source")
        pid = block["id"]
        if pid in seen:
            raise ManifestError(f"duplicate program id {pid!r}")
        seen.add(pid)
        inputs = block.get("apply_inputs", [])
        if inputs and not all(isinstance(x, list) for x in inputs):
            raise ManifestError(f"{pid}: apply_inputs must be an array of argument lists")
        entry = ProgramEntry(pid, base / block["source"], [list(x) for x in inputs])
        for mode in ("precise", "compatible"):
            spec = ModeSpec(
                expect=block.get(f"{mode}_expect"),
                context=(base / block[f"{mode}_context"]) if f"{mode}_context" in block else None,
                witness=(base / block[f"{mode}_witness"]) if f"{mode}_witness" in block else None,
            )
            if spec.context is not None and spec.witness is not None:
                raise ManifestError(
                    f"{pid}: a program may carry a distinguishing context or a "
                    f"compatible witness for mode {mode!r}, not both"
                )
            entry.modes[mode] = spec
        entries.append(entry)
    return SuiteManifest(path, entries)
