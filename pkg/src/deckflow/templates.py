"""Prompt templates, shipped as plain text files so operators can edit them.

A template directory overrides individual packaged templates by filename;
missing names fall back to the packaged defaults.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Optional, Union

from .errors import BadConfig

COHERENT_REWRITE = "coherent_rewrite"
GOAL_DECOMPOSE = "goal_decompose"
SHARED_FEATURES = "shared_features"


class TemplateStore:
    def __init__(self, directory: Optional[Union[str, Path]] = None):
        self.directory = Path(directory) if directory else None
        self._cache: dict[str, str] = {}

    def text(self, name: str) -> str:
        if name in self._cache:
            return self._cache[name]
        if self.directory is not None:
            candidate = self.directory / f"{name}.txt"
            if candidate.is_file():
                loaded = candidate.read_text(encoding="utf-8").strip()
                self._cache[name] = loaded
                return loaded
        try:
            packaged = (
                resources.files("deckflow").joinpath(f"templates/{name}.txt").read_text("utf-8")
            )
        except FileNotFoundError as exc:
            raise BadConfig(f"no template named {name!r}") from exc
        loaded = packaged.strip()
        self._cache[name] = loaded
        return loaded

    def render(self, name: str, **fields: str) -> str:
        try:
            return self.text(name).format(**fields)
        except (KeyError, IndexError) as exc:
            raise BadConfig(f"template {name!r} references unknown field {exc}") from exc

    def validate(self) -> None:
        """Resolve every known template now so a bad override dir fails at startup."""
        if self.directory is not None and not self.directory.is_dir():
            raise BadConfig(f"template directory {self.directory} does not exist")
        for name in (COHERENT_REWRITE, GOAL_DECOMPOSE, SHARED_FEATURES):
            self.text(name)
