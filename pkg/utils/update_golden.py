"""
update_golden.py
================
Regenerate the codegen snapshots under ``tests/golden/<program>/<backend>/``
and the per-program analysis report ``tests/golden/<program>/analysis.yml``.

    python -m utils.update_golden            # rewrite every snapshot
    python -m utils.update_golden --check    # report stale snapshots, write nothing

Snapshots are generated with the default ``CodegenConfig``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from codegen import BackendKind, CodegenConfig, EmitUnit, generate
from corpus import list_corpus, load_corpus
from semantic import analysis_report, analyze, type_check

GOLDEN_DIR = Path(__file__).resolve().parent.parent / "tests" / "golden"


def golden_outputs(name: str) -> tuple[str, dict[BackendKind, EmitUnit]]:
    """Analysis report and every backend unit for corpus program *name*."""
    program, entry = load_corpus(name)
    annotated = type_check(program, entry=entry.function)
    analyses = analyze(annotated)
    units = {b: generate(annotated, analyses, b, CodegenConfig(), name=name)
             for b in BackendKind}
    return analysis_report(analyses, file=f"corpus/{entry.source.name}"), units


def expected_files(name: str) -> dict[Path, str]:
    """Relative snapshot path -> text for corpus program *name*."""
    report, units = golden_outputs(name)
    files = {Path(name) / "analysis.yml": report}
    for backend, unit in units.items():
        for file_name, text in unit.files:
            files[Path(name) / backend.value / file_name] = text
    return files


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Regenerate codegen golden snapshots")
    parser.add_argument("--out", type=Path, default=GOLDEN_DIR)
    parser.add_argument("--check", action="store_true",
                        help="only list snapshots that differ from fresh output")
    args = parser.parse_args(argv)

    stale = []
    for entry in list_corpus():
        for rel, text in expected_files(entry.name).items():
            path = args.out / rel
            current = path.read_text(encoding="utf-8") if path.exists() else None
            if current == text:
                continue
            stale.append(rel)
            if not args.check:
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(text, encoding="utf-8")
                print(f"[GOLDEN] wrote {rel}")
    if args.check:
        for rel in stale:
            print(f"[GOLDEN] stale: {rel}")
        return 1 if stale else 0
    print(f"[GOLDEN] {len(stale)} file(s) updated")
    return 0


if __name__ == "__main__":
    sys.exit(main())
