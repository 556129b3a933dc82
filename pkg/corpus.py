"""
corpus.py
=========
The four reference programs (BC, PR, SSSP, TC) as fixtures.

``corpus/corpus.yml`` lists each program with its entry function, default
arguments, matching oracle and expected construct census. Every consumer
(CLI subcommands, tests, golden regeneration) goes through ``load_corpus``.
"""

from __future__ import annotations

import sys
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from constants import TOLERANCES
from csr import CsrGraph
from dsl_ast import Program, walk
from errors import ConfigError, UnknownCorpusEntry
from frontend import parse_source

CORPUS_DIR = Path(__file__).resolve().parent / "corpus"
MANIFEST = "corpus.yml"

CENSUS_KINDS = ("ForAll", "FixedPoint", "IterateInBFS", "IterateInReverse", "MinMaxAssign",
                "ReduceAssign")


@dataclass
class CorpusEntry:
    name: str
    source: Path
    function: str
    oracle: str
    output: str
    max_lines: int
    args: dict = field(default_factory=dict)
    census: dict[str, int] = field(default_factory=dict)

    @property
    def tolerance(self) -> tuple[str, float]:
        return TOLERANCES[self.oracle]

    def read_source(self) -> str:
        return self.source.read_text(encoding="utf-8")

    def to_dict(self) -> dict:
        return {
            "source": self.source.name,
            "function": self.function,
            "oracle": self.oracle,
            "output": self.output,
            "max_lines": self.max_lines,
            "args": dict(self.args),
            "census": dict(self.census),
        }

    @classmethod
    def from_dict(cls, name: str, data: dict, directory: Path) -> CorpusEntry:
        try:
            return cls(
                name=name,
                source=directory / data["source"],
                function=data["function"],
                oracle=data["oracle"],
                output=data["output"],
                max_lines=int(data["max_lines"]),
                args=dict(data.get("args") or {}),
                census={k: int(v) for k, v in (data.get("census") or {}).items()},
            )
        except KeyError as exc:
            raise ConfigError(f"corpus entry '{name}' is missing {exc}") from None


def _manifest(directory: Path) -> dict:
    path = directory / MANIFEST
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except FileNotFoundError:
        raise ConfigError(f"no corpus manifest at {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping of program entries")
    return data


def list_corpus(directory: Path | None = None) -> list[CorpusEntry]:
    directory = directory or CORPUS_DIR
    data = _manifest(directory)
    return [CorpusEntry.from_dict(name, data[name], directory) for name in sorted(data)]


def corpus_entry(name: str, directory: Path | None = None) -> CorpusEntry:
    for entry in list_corpus(directory):
        if entry.name == name:
            return entry
    known = ", ".join(e.name for e in list_corpus(directory))
    raise UnknownCorpusEntry(f"no corpus program named '{name}' (known: {known})")


def load_corpus(name: str, directory: Path | None = None,
                debug: bool = False) -> tuple[Program, CorpusEntry]:
    """Parse the corpus program *name* and return it with its manifest entry."""
    entry = corpus_entry(name, directory)
    if debug:
        print(f"[CORPUS] loading {entry.source}", file=sys.stderr)
    return parse_source(entry.read_source()), entry


def find_entry(path: Path, directory: Path | None = None) -> CorpusEntry | None:
    """Manifest entry whose source is *path*, if the file belongs to the corpus."""
    resolved = Path(path).resolve()
    for entry in list_corpus(directory):
        if entry.source.resolve() == resolved:
            return entry
    return None


def census(program: Program) -> dict[str, int]:
    """Count the census constructs across every function of *program*."""
    counts = Counter(type(node).__name__ for fn in program.functions for node in walk(fn))
    return {kind: counts.get(kind, 0) for kind in CENSUS_KINDS}


def code_lines(text: str) -> int:
    """Non-blank lines that are not pure ``//`` comments."""
    return sum(1 for line in text.splitlines()
               if line.strip() and not line.strip().startswith("//"))


def default_args(entry: CorpusEntry, graph: CsrGraph, overrides: dict | None = None) -> dict:
    """Manifest arguments with ``all`` expanded for node sets, then *overrides* applied."""
    args = dict(entry.args)
    args.update(overrides or {})
    for key, value in args.items():
        if value == "all":
            args[key] = range(graph.n)
    return args
