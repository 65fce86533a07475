"""Plain-text prompt templates with ``{placeholder}`` slots.

A template file holds a ``<system>`` section and a ``<user>`` section. Only
bare identifiers in braces are placeholders, so JSON examples inside a
template (``{"sub_query": ...}``) pass through untouched.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from hopqa.errors import MissingPlaceholder

_SLOT = re.compile(r"\{([a-z_][a-z0-9_]*)\}")
_SECTION = re.compile(r"^<(system|user)>\s*$", re.MULTILINE)


@dataclass(frozen=True)
class Prompt:
    system_text: str
    user_text: str

    def __len__(self) -> int:
        return len(self.system_text) + len(self.user_text)


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    system_text: str
    user_text: str
    required_placeholders: frozenset[str] = frozenset()

    @classmethod
    def from_text(cls, name: str, text: str) -> "PromptTemplate":
        parts = _SECTION.split(text)
        sections = dict(zip(parts[1::2], parts[2::2]))
        if "system" not in sections or "user" not in sections:
            raise ValueError(f"template {name!r} needs <system> and <user> sections")
        system, user = sections["system"].strip("\n"), sections["user"].strip("\n")
        slots = frozenset(_SLOT.findall(system) + _SLOT.findall(user))
        return cls(name, system, user, slots)

    def render(self, **values: str) -> Prompt:
        missing = self.required_placeholders - values.keys()
        if missing:
            raise MissingPlaceholder(self.name, missing)

        def fill(text: str) -> str:
            return _SLOT.sub(lambda m: str(values[m.group(1)]) if m.group(1) in values else m.group(0), text)

        return Prompt(fill(self.system_text), fill(self.user_text))


def _read(template_dir: Optional[Path], filename: str) -> str:
    if template_dir is not None:
        return (Path(template_dir) / filename).read_text(encoding="utf-8")
    return resources.files("hopqa").joinpath("templates", filename).read_text(encoding="utf-8")


def load_template(name: str, template_dir: str | Path | None = None) -> PromptTemplate:
    return PromptTemplate.from_text(name, _read(Path(template_dir) if template_dir else None, f"{name}.txt"))


def load_decomposition_examples(template_dir: str | Path | None = None) -> list[dict]:
    return json.loads(_read(Path(template_dir) if template_dir else None, "decompose_examples.json"))
