"""
structural_check.py
===================
Token-level inspection of an EmitUnit against the analyses it was generated
from. Nothing is compiled; the checks only look at emitted text and the
unit's structure metadata:

* transfer balance: every span symbol has its host-to-device copy before the
  span and its device-to-host copy after it, and nothing else is copied
* graph arrays are copied to the device and never back
* each reduction, Min/Max and convergence flag shows its backend idiom
* OpenCL float atomics go through compare-and-swap helpers
* inside every fixedPoint loop the flag travels to the device and back
* the backend's kernel/host layout (split files, launches, pragmas)

``structural_check`` never raises; problems come back as violation strings.
"""

from __future__ import annotations

import re
import sys
from collections import Counter
from dataclasses import dataclass, field

from codegen import GRAPH_FIELDS, BackendKind, EmitUnit, emitter_class
from constants import PRELUDE_BEGIN, PRELUDE_END
from dsl_ast import MinMaxAssign, walk
from semantic import Analyses

_PRELUDE = re.compile(rf"{re.escape(PRELUDE_BEGIN)}.*?{re.escape(PRELUDE_END)}\n?", re.S)
_GRAPH_NAMES = frozenset(GRAPH_FIELDS.values())
_FLOAT_TYPES = ("float", "double")


@dataclass
class CheckReport:
    backend: str
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"backend": self.backend, "ok": self.ok, "violations": list(self.violations)}

    def format(self) -> str:
        if self.ok:
            return f"{self.backend}: structural check passed"
        lines = [f"{self.backend}: {len(self.violations)} structural violation(s)"]
        lines += [f"  - {v}" for v in self.violations]
        return "\n".join(lines)


def strip_prelude(text: str) -> str:
    return _PRELUDE.sub("", text)


class StructuralChecker:
    def __init__(self, unit: EmitUnit, analyses: Analyses, debug: bool = False):
        self.unit = unit
        self.analyses = analyses
        self.cfg = unit.config
        self.emitter = emitter_class(unit.backend)
        self.debug = debug
        self.body = "".join(strip_prelude(text) for _, text in unit.files)
        self.events = self.emitter.transfer_events(self.body, self.cfg)

    def _log(self, message: str):
        if self.debug:
            print(f"[CHECK] {message}", file=sys.stderr)

    # ------------------------------------------------------------------

    def transfer_balance(self) -> list[str]:
        expected: Counter = Counter()
        for span in self.analyses.transfers.spans:
            for name in span.symbols_in:
                expected["H2D", name] += 1
            for name in span.symbols_out:
                expected["D2H", name] += 1
        if self.emitter.explicit_flag_copies:
            for region in self.analyses.transfers.regions:
                if region.kind == "bfs":
                    expected["H2D", "bfs_finished"] += 1
                    expected["D2H", "bfs_finished"] += 1
        actual = Counter((d, n) for _, d, n in self.events if n not in _GRAPH_NAMES)
        violations = []
        for key in sorted(set(expected) | set(actual)):
            direction, name = key
            if actual[key] < expected[key]:
                violations.append(f"missing {direction} for {name}")
            elif actual[key] > expected[key]:
                violations.append(f"unexpected {direction} for {name}")
        return violations

    def static_graph(self) -> list[str]:
        used = set()
        for region in self.analyses.transfers.regions:
            used |= {GRAPH_FIELDS[f] for f in region.graph_symbols}
        copied_in = {n for _, d, n in self.events if d == "H2D"}
        violations = [f"missing H2D for graph array {name}"
                      for name in sorted(used - copied_in)]
        for _, direction, name in self.events:
            if direction == "D2H" and name in _GRAPH_NAMES:
                violations.append(f"device-to-host copy of static graph array {name}")
        return violations

    def _expected_idioms(self) -> Counter:
        expected: Counter = Counter()
        per_region: set[tuple[int, str]] = set()

        def add(token: str | None, region: int):
            if token is None:
                return
            if token.startswith("reduction("):
                if (region, token) in per_region:
                    return
                per_region.add((region, token))
            expected[token] += 1

        for red in self.analyses.reductions:
            if red.is_fixed_point_flag:
                add(self.emitter.idiom_token("Flag", "bool", True, red.target, self.cfg),
                    red.region)
            elif red.atomic:
                sym = red.stmt.target.meta["symbol"]
                scalar = sym.kind not in ("node-property", "edge-property")
                add(self.emitter.idiom_token(red.operator, sym.value_type.name, scalar,
                                             red.target, self.cfg), red.region)
        for region in self.analyses.transfers.regions:
            for node in walk(region.stmt):
                if isinstance(node, MinMaxAssign):
                    sym = node.targets[0].meta["symbol"]
                    scalar = sym.kind not in ("node-property", "edge-property")
                    add(self.emitter.idiom_token(node.kind, sym.value_type.name, scalar,
                                                 sym.name, self.cfg), region.id)
        return expected

    def idioms(self) -> list[str]:
        violations = []
        for token, count in sorted(self._expected_idioms().items()):
            found = self.body.count(token)
            if found != count:
                violations.append(f"expected {count} x '{token}', found {found}")
        return violations

    def float_atomics(self) -> list[str]:
        if self.unit.backend is not BackendKind.OPENCL:
            return []
        prefix = re.escape(self.cfg.device_var_prefix)
        violations = []
        for name, type_name in sorted(self.unit.structure.get("symbol_types", {}).items()):
            if type_name not in _FLOAT_TYPES:
                continue
            pattern = rf"\batom(?:ic)?_(?:add|sub|min|max)\(\s*&\s*{prefix}{re.escape(name)}\b"
            if re.search(pattern, self.body):
                violations.append(f"float atomics must use atomic_cmpxchg ({name})")
        return violations

    def flag_pairing(self) -> list[str]:
        violations = []
        on_device = set()
        for region in self.analyses.transfers.regions:
            on_device |= region.copy_in
        for fp in self.analyses.fixed_points:
            if not fp.fused or fp.flag not in on_device:
                continue
            loop = re.search(rf"while \(!{re.escape(fp.flag)}\)", self.body)
            if loop is None:
                violations.append(f"no host loop on fixedPoint flag {fp.flag}")
                continue
            h2d = [off for off, d, n in self.events
                   if n == fp.flag and d == "H2D" and off > loop.start()]
            if not h2d:
                violations.append(f"flag {fp.flag} is not copied to the device inside its loop")
                continue
            if not any(n == fp.flag and d == "D2H" and off >= h2d[0]
                       for off, d, n in self.events):
                violations.append(f"flag {fp.flag} is not copied back to the host inside "
                                  f"its loop")
        return violations

    def run(self) -> CheckReport:
        report = CheckReport(self.unit.backend.label)
        for check in (self.transfer_balance, self.static_graph, self.idioms,
                      self.float_atomics, self.flag_pairing):
            found = check()
            self._log(f"{check.__name__}: {len(found)} violation(s)")
            report.violations.extend(found)
        report.violations.extend(self.emitter.split_violations(self.unit))
        return report


def structural_check(unit: EmitUnit, analyses: Analyses, debug: bool = False) -> CheckReport:
    """Check *unit* against *analyses*; never raises."""
    try:
        return StructuralChecker(unit, analyses, debug=debug).run()
    except Exception as exc:
        label = getattr(getattr(unit, "backend", None), "label", "unknown")
        return CheckReport(label, [f"structural check could not run: {exc}"])
