"""
compare_yamls.py
================
Compare two analysis reports (``graphdsl analyze`` / ``compile --emit-analysis``
output) or any two YAML files, and print what changed.

    python -m utils.compare_yamls old_analysis.yml new_analysis.yml

Region order matters in a report, so lists are compared in order.
"""

from __future__ import annotations

import sys
from pprint import pprint

import yaml
from deepdiff import DeepDiff


def load_yaml(filepath):
    try:
        with open(filepath, encoding="utf-8") as f:
            return yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        print(f"Error loading {filepath}: {e}", file=sys.stderr)
        sys.exit(1)


def diff_reports(data1, data2) -> DeepDiff:
    # warnings carry file names, which differ between otherwise equal runs
    return DeepDiff(data1, data2, exclude_regex_paths=[r"root\['warnings'\]\[\d+\]"])


def compare_reports(file1, file2) -> bool:
    diff = diff_reports(load_yaml(file1), load_yaml(file2))

    if not diff:
        print(f"Success: {file1} and {file2} are identical.")
        return True

    print(f"Differences found between {file1} and {file2}:")

    if "dictionary_item_added" in diff:
        print("\n[Items added in the second file]:")
        pprint(diff["dictionary_item_added"])

    if "dictionary_item_removed" in diff:
        print("\n[Items missing in the second file]:")
        pprint(diff["dictionary_item_removed"])

    if "iterable_item_added" in diff or "iterable_item_removed" in diff:
        print("\n[Regions / transfers / reductions added or removed]:")
        pprint(diff.get("iterable_item_added", {}))
        pprint(diff.get("iterable_item_removed", {}))

    if "values_changed" in diff:
        print("\n[Values that are different]:")
        for path, change in diff["values_changed"].items():
            print(f"  - {path}:")
            print(f"    Old: {change['old_value']}")
            print(f"    New: {change['new_value']}")

    if "type_changes" in diff:
        print("\n[Type mismatches]:")
        pprint(diff["type_changes"])
    return False


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        print("Usage: python -m utils.compare_yamls <report1.yml> <report2.yml>")
        return 2
    return 0 if compare_reports(argv[0], argv[1]) else 1


if __name__ == "__main__":
    sys.exit(main())
