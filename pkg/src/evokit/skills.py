"""Hierarchical skill loading: metadata stays in context, bodies load on demand.

A skill is a directory containing a ``SKILL.md`` file with a small front
matter header (name, summary, version) followed by the instruction body.
Discovery builds an immutable index whose one-line-per-skill rendering goes
into every agent's pinned context; the full body is only read when the agent
calls the ``load_skill`` tool.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import EvokitError
from .tools import ToolDescriptor, ToolHandler

MANIFEST_FILENAME = "SKILL.md"
SKILL_TOOL_NAME = "load_skill"
METADATA_HEADER = "Available skills (read one with the load_skill tool):"


class ManifestParseError(EvokitError):
    pass


class SkillNotFound(EvokitError):
    pass


class BodyReadError(EvokitError):
    pass


@dataclass(frozen=True)
class SkillManifest:
    name: str
    summary: str
    version: str
    body_path: Path


@dataclass(frozen=True)
class SkillIndex:
    """Immutable name-to-manifest map; safe to share across agent slots."""

    skills: dict[str, SkillManifest]
    shadowed: tuple[tuple[str, str], ...] = ()

    def __len__(self) -> int:
        return len(self.skills)

    def names(self) -> list[str]:
        return sorted(self.skills)


def _split_front_matter(text: str, source: Path) -> tuple[dict[str, str], str]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "---":
        raise ManifestParseError(f"{source}: missing front matter opening '---'")
    fields: dict[str, str] = {}
    for i, line in enumerate(lines[1:], start=1):
        if line.strip() == "---":
            body = "\n".join(lines[i + 1 :]).lstrip("\n")
            return fields, body
        if not line.strip():
            continue
        if ":" not in line:
            raise ManifestParseError(f"{source}: bad front matter line {line!r}")
        key, value = line.split(":", 1)
        if key.strip() not in ("name", "summary", "version"):
            raise ManifestParseError(f"{source}: unknown front matter key {key.strip()!r}")
        fields[key.strip()] = value.strip()
    raise ManifestParseError(f"{source}: missing front matter closing '---'")


def _parse_manifest(path: Path) -> SkillManifest:
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ManifestParseError(f"{path}: cannot read manifest ({exc})") from exc
    fields, _ = _split_front_matter(text, path)
    if not fields.get("name"):
        raise ManifestParseError(f"{path}: front matter needs a non-empty name")
    return SkillManifest(
        name=fields["name"],
        summary=fields.get("summary", ""),
        version=fields.get("version", "0"),
        body_path=path,
    )


def discover(paths: Iterable[str | Path]) -> SkillIndex:
    """Scan the given roots for skill manifests.

    Roots are scanned in the order given and directories within a root in
    sorted order, so repeated discovery over the same tree is idempotent.
    A name seen twice keeps its first manifest; later ones are recorded as
    shadowed instead of raising, which lets experiment configs layer packs.
    """
    skills: dict[str, SkillManifest] = {}
    shadowed: list[tuple[str, str]] = []
    for root in paths:
        root = Path(root)
        if not root.is_dir():
            raise FileNotFoundError(f"skill root does not exist: {root}")
        for manifest_path in sorted(root.rglob(MANIFEST_FILENAME)):
            manifest = _parse_manifest(manifest_path)
            if manifest.name in skills:
                shadowed.append((manifest.name, str(manifest_path)))
            else:
                skills[manifest.name] = manifest
    ordered = {name: skills[name] for name in sorted(skills)}
    return SkillIndex(skills=ordered, shadowed=tuple(shadowed))


def render_metadata(index: SkillIndex) -> str:
    """One line per skill under a fixed header; empty index renders empty."""
    if not index.skills:
        return ""
    lines = [METADATA_HEADER]
    for name in index.names():
        summary = index.skills[name].summary.replace("\n", " ")
        lines.append(f"{name} — {summary}")
    return "\n".join(lines)


def load_body(index: SkillIndex, name: str) -> str:
    manifest = index.skills.get(name)
    if manifest is None:
        raise SkillNotFound(f"no such skill: {name}")
    try:
        text = manifest.body_path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise BodyReadError(f"{manifest.body_path}: cannot read body ({exc})") from exc
    _, body = _split_front_matter(text, manifest.body_path)
    return body


def skill_tool(index: SkillIndex) -> tuple[ToolDescriptor, ToolHandler]:
    """The load_skill tool exposing on-demand bodies to agents."""
    descriptor = ToolDescriptor(
        name=SKILL_TOOL_NAME,
        description="Load the full instructions of a named skill.",
        parameters={
            "type": "object",
            "properties": {"name": {"type": "string", "description": "skill name"}},
            "required": ["name"],
        },
        source="skill",
    )

    def handler(arguments: dict) -> str:
        return load_body(index, str(arguments.get("name", "")))

    return descriptor, handler
