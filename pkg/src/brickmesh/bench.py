"""Latency and payload benchmarks over the simulated topologies.

Per-leg delays are calibrated from target round-trip times by even
split: a direct path is one link crossed twice (leg = rtt/2), a relay
path is two links crossed four times (leg = rtt/4). The runs validate
pipeline arithmetic and per-row ordering, not physical networks — the
report headers say so.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from brickmesh.simnet import (
    LinkConfig,
    PayloadTooLargeError,
    SimWorld,
    run_rtt_probe,
)

ARCHES = ("p2p", "local-relay", "remote-relay")
ARCH_LABELS = {
    "p2p": "direct P2P",
    "local-relay": "local relay WS",
    "remote-relay": "remote relay WS",
}
JITTER_FRACTION = 0.1
PER_BYTE_MS = 1e-4  # serialization/transmission cost model, per leg

DISCLAIMER = (
    "simulated-topology benchmark: per-leg delays are calibrated from "
    "configured round-trip targets (even split across legs); this validates "
    "the pipeline and orderings, not physical networks"
)


class BenchConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BenchRowConfig:
    name: str
    targets: dict  # arch -> target RTT ms


@dataclass
class CellResult:
    row: str
    arch: str
    topology: str
    mean_rtt_ms: float
    p95_rtt_ms: float
    samples: int


@dataclass
class BenchReport:
    scenario: str
    jitter: bool
    seed: int
    reps: int
    cells: list[CellResult] = field(default_factory=list)
    ordering_ok: dict = field(default_factory=dict)  # row -> bool
    aggregates: dict = field(default_factory=dict)

    def cell(self, row: str, arch: str) -> CellResult:
        for c in self.cells:
            if c.row == row and c.arch == arch:
                return c
        raise KeyError((row, arch))

    def to_csv(self) -> str:
        lines = ["scenario,topology,row,arch,mean_rtt_ms,p95_rtt_ms,samples"]
        for c in self.cells:
            lines.append(
                f"{self.scenario},{c.topology},{c.row},{c.arch},"
                f"{c.mean_rtt_ms!r},{c.p95_rtt_ms!r},{c.samples}"
            )
        return "\n".join(lines) + "\n"

    def render_text(self) -> str:
        width = max(len(c.row) for c in self.cells) + 2
        out = [f"# {DISCLAIMER}", f"# jitter={'on' if self.jitter else 'off'} "
               f"seed={self.seed} reps={self.reps}"]
        header = "connection type".ljust(width) + "".join(
            ARCH_LABELS[a].rjust(18) for a in ARCHES)
        out.append(header)
        rows = sorted({c.row for c in self.cells}, key=self._row_order)
        for row in rows:
            line = row.ljust(width)
            for arch in ARCHES:
                line += f"{self.cell(row, arch).mean_rtt_ms:>15.2f} ms"
            out.append(line)
        agg = self.aggregates
        out.append("")
        out.append(
            f"aggregate mean: p2p {agg['p2p_mean_ms']:.2f} ms vs remote relay "
            f"{agg['remote_mean_ms']:.2f} ms -> {agg['reduction_pct']:.1f}% reduction"
        )
        return "\n".join(out) + "\n"

    def _row_order(self, row: str) -> int:
        for i, c in enumerate(self.cells):
            if c.row == row:
                return i
        return len(self.cells)


def bundled_links_path() -> Path:
    return Path(str(resources.files("brickmesh") / "scenarios" / "paper-links.json"))


def load_link_rows(path: str | Path) -> list[BenchRowConfig]:
    try:
        data = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise BenchConfigError(f"cannot load link config {path}: {exc}") from exc
    rows = data.get("rows")
    if not isinstance(rows, list) or not rows:
        raise BenchConfigError("link config needs a nonempty 'rows' list")
    out = []
    for i, row in enumerate(rows):
        missing = [k for k in ("name", *ARCHES) if k not in row]
        if missing:
            raise BenchConfigError(f"rows[{i}] missing keys: {', '.join(missing)}")
        out.append(BenchRowConfig(
            name=row["name"],
            targets={arch: float(row[arch]) for arch in ARCHES},
        ))
    return out


def _topology_of(arch: str) -> str:
    return "direct" if arch == "p2p" else arch


def _measure_path(
    target_rtt_ms: float,
    arch: str,
    reps: int,
    jitter: bool,
    seed: int,
    payload_bytes: int = 32,
    extra_leg_ms: float = 0.0,
):
    legs = 2 if arch == "p2p" else 4
    leg = target_rtt_ms / legs + extra_leg_ms
    config = LinkConfig(
        one_way_delay_ms=leg,
        jitter_ms=JITTER_FRACTION * leg if jitter else 0.0,
    )
    world = SimWorld(seed=seed)
    if arch == "p2p":
        world.add_link("a", "b", config)
        forward, back = ["a->b"], ["b->a"]
    else:
        world.add_link("a", "relay", config)
        world.add_link("relay", "b", config)
        forward = ["a->relay", "relay->b"]
        back = ["b->relay", "relay->a"]
    period = 50.0
    return run_rtt_probe(world, forward, back, period_ms=period,
                         duration_ms=period * reps, payload_bytes=payload_bytes)


def run_bench(
    rows: list[BenchRowConfig], reps: int = 20, jitter: bool = False, seed: int = 0
) -> BenchReport:
    report = BenchReport(scenario="bench", jitter=jitter, seed=seed, reps=reps)
    for row in rows:
        means = {}
        for arch in ARCHES:
            stats = _measure_path(row.targets[arch], arch, reps, jitter, seed)
            mean = stats.mean_ms()
            means[arch] = mean
            report.cells.append(CellResult(
                row=row.name, arch=arch, topology=_topology_of(arch),
                mean_rtt_ms=mean, p95_rtt_ms=stats.percentile_ms(0.95),
                samples=len(stats.samples),
            ))
        report.ordering_ok[row.name] = (
            means["p2p"] < means["local-relay"] < means["remote-relay"]
        )
    p2p_mean = _mean([c.mean_rtt_ms for c in report.cells if c.arch == "p2p"])
    remote_mean = _mean([c.mean_rtt_ms for c in report.cells if c.arch == "remote-relay"])
    report.aggregates = {
        "p2p_mean_ms": p2p_mean,
        "remote_mean_ms": remote_mean,
        "reduction_pct": 100.0 * (1.0 - p2p_mean / remote_mean),
    }
    return report


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


# --- payload experiment --------------------------------------------------------

@dataclass
class PayloadCell:
    size_bytes: int
    arch: str
    rejected: bool
    mean_rtt_ms: float | None
    samples: int


@dataclass
class PayloadReport:
    seed: int
    base_row: str
    cells: list[PayloadCell] = field(default_factory=list)
    note: str = ""

    def to_csv(self) -> str:
        lines = ["size_bytes,arch,rejected,mean_rtt_ms,samples"]
        for c in self.cells:
            mean = "" if c.mean_rtt_ms is None else repr(c.mean_rtt_ms)
            lines.append(f"{c.size_bytes},{c.arch},{str(c.rejected).lower()},{mean},{c.samples}")
        return "\n".join(lines) + "\n"

    def render_text(self) -> str:
        out = [f"# payload experiment on row {self.base_row!r}; {DISCLAIMER}"]
        for c in self.cells:
            shown = "REJECTED (over 16 KB cap)" if c.rejected else f"{c.mean_rtt_ms:.3f} ms"
            out.append(f"{c.size_bytes:>8} B  {ARCH_LABELS[c.arch]:<16} {shown}")
        if self.note:
            out.append(f"note: {self.note}")
        return "\n".join(out) + "\n"


def run_payload_bench(
    sizes: list[int],
    rows: list[BenchRowConfig] | None = None,
    reps: int = 10,
    seed: int = 0,
) -> PayloadReport:
    """RTT per payload size per architecture, over the first config row.

    Sizes above the cap produce flagged rows instead of measurements. The
    size-proportional delay term is a modeling choice; observed trends
    are reported, never asserted.
    """
    rows = rows or load_link_rows(bundled_links_path())
    base = rows[0]
    report = PayloadReport(seed=seed, base_row=base.name)
    for size in sizes:
        for arch in ARCHES:
            extra = size * PER_BYTE_MS
            try:
                stats = _measure_path(
                    base.targets[arch], arch, reps, jitter=False, seed=seed,
                    payload_bytes=size, extra_leg_ms=extra,
                )
            except PayloadTooLargeError:
                report.cells.append(PayloadCell(size, arch, True, None, 0))
                continue
            report.cells.append(PayloadCell(
                size, arch, False, stats.mean_ms(), len(stats.samples)))
    p2p = [c for c in report.cells if c.arch == "p2p" and not c.rejected]
    if len(p2p) >= 2:
        fastest = min(p2p, key=lambda c: c.mean_rtt_ms)
        report.note = (
            f"under the size-proportional cost model the smallest payload is "
            f"fastest on p2p ({fastest.size_bytes} B); trends here are "
            f"model artifacts and are not asserted"
        )
    return report
