"""Prompt catalog loader.

Templates are data files under ``prompts/``, each split into ``[system]`` and
``[user]`` sections with ``{name}`` placeholders. Rendering only substitutes
keys it is given, so literal braces in template text are safe.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..errors import InvalidInputError

_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    system_text: str
    user_text: str


@lru_cache(maxsize=None)
def load_template(name: str) -> PromptTemplate:
    try:
        raw = resources.files("storysearch.prompts").joinpath(f"{name}.txt").read_text("utf-8")
    except FileNotFoundError:
        raise InvalidInputError(f"unknown prompt template {name!r}") from None
    if not raw.startswith("[system]\n") or "\n[user]\n" not in raw:
        raise InvalidInputError(f"template {name!r} must have [system] and [user] sections")
    system_part, user_part = raw[len("[system]\n") :].split("\n[user]\n", 1)
    return PromptTemplate(name=name, system_text=system_part.strip(), user_text=user_part.strip("\n"))


def render(template_text: str, values: dict[str, str]) -> str:
    """Substitute known placeholders and collapse blank-line runs left by empty ones."""

    def sub(match: re.Match) -> str:
        key = match.group(1)
        return values[key] if key in values else match.group(0)

    text = _PLACEHOLDER.sub(sub, template_text)
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip("\n")
