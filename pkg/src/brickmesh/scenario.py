"""Scenario files and their deterministic execution.

A scenario declares replicas, a topology (direct mesh or a star through
a relay), link parameters, and a script of timed actions. Running one
drives the network simulation to completion, then exchanges full states
out of band until every replica digests identically (counting how many
extra rounds that repair took). Reports are plain data and serialize
byte-identically for a fixed seed.

A scenario with a "fuzz" block skips the network simulation and instead
runs randomized updates with an adversarial exchange layer (duplication,
reordering, loss); convergence after quiescent exchange is the check.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from brickmesh.core import TransformSnapshot, Vector3
from brickmesh.mvtransform import Strategy
from brickmesh.opbased import OpReplicaState, op_apply, op_create, Operation, op_resolve
from brickmesh.replica import Replica
from brickmesh.scene import BrickId, GlobalRule
from brickmesh.simnet import (
    ChannelClosedEvt,
    Delivery,
    LinkConfig,
    PayloadTooLargeError,
    SimWorld,
    TimerFired,
    run_rtt_probe,
)

TOPOLOGIES = ("direct", "local-relay", "remote-relay")
RELAY = "relay"
MAX_QUIESCE_ROUNDS = 8

ACTIONS = ("spawn", "move", "grab", "release", "mode", "strategy", "rule-tick",
           "sync", "close", "partition")


class ScenarioError(ValueError):
    """Scenario file rejected; the message names the offending field."""


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    topology: str = "direct"
    crdt: str = "state"
    strategy: str = "lww"
    duration_ms: float = 1000.0
    replicas: tuple[str, ...] = ("A", "B")
    link: LinkConfig = LinkConfig(one_way_delay_ms=2.0)
    leg_overrides: tuple[tuple[str, LinkConfig], ...] = ()  # per-channel configs
    script: tuple[dict, ...] = ()
    rtt_probe: dict | None = None
    fuzz: dict | None = None


@dataclass
class RunReport:
    scenario: str
    seed: int
    digests: dict[str, str] = field(default_factory=dict)
    convergence: bool = False
    extra_sync_rounds: int = 0
    timeline: list[dict] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)
    rtt: dict | None = None
    invariant_violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.convergence and not self.invariant_violations

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "digests": dict(sorted(self.digests.items())),
            "convergence": self.convergence,
            "extra_sync_rounds": self.extra_sync_rounds,
            "counters": dict(sorted(self.counters.items())),
            "rtt": self.rtt,
            "invariant_violations": list(self.invariant_violations),
            "timeline": self.timeline,
        }

    def render_json(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def timeline_csv(self) -> str:
        lines = ["at_ms,replica,brick,x,y,z"]
        for row in self.timeline:
            x, y, z = row["pos"]
            lines.append(f"{row['at_ms']:.3f},{row['replica']},{row['brick']},"
                         f"{x!r},{y!r},{z!r}")
        return "\n".join(lines) + "\n"


# --- parsing -----------------------------------------------------------------

def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
        ) from exc
    return parse_scenario(data, source=str(path))


def bundled_scenario_path(name: str) -> Path:
    candidate = resources.files("brickmesh") / "scenarios" / f"{name}.json"
    if not candidate.is_file():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return Path(str(candidate))


def resolve_scenario(name_or_path: str) -> Path:
    p = Path(name_or_path)
    if p.is_file():
        return p
    try:
        return bundled_scenario_path(name_or_path)
    except ScenarioError:
        raise ScenarioError(
            f"scenario {name_or_path!r} is neither a file nor a bundled name"
        ) from None


def parse_scenario(data: dict, source: str = "<inline>") -> Scenario:
    def fail(fieldname: str, why: str):
        raise ScenarioError(f"{source}: field {fieldname!r}: {why}")

    if not isinstance(data, dict):
        fail("<root>", "scenario must be a JSON object")
    name = data.get("name")
    if not isinstance(name, str) or not name:
        fail("name", "required nonempty string")
    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        fail("seed", "must be an integer")

    topology = data.get("topology", "direct")
    if topology not in TOPOLOGIES:
        fail("topology", f"must be one of {TOPOLOGIES}")
    crdt = data.get("crdt", "state")
    if crdt not in ("state", "op"):
        fail("crdt", "must be 'state' or 'op'")
    strategy = data.get("strategy", "lww")
    if strategy not in Strategy.VARIANTS + ("dynamic",):
        fail("strategy", f"must be one of {Strategy.VARIANTS + ('dynamic',)}")

    fuzz = data.get("fuzz")
    if fuzz is not None:
        if not isinstance(fuzz, dict):
            fail("fuzz", "must be an object")
        replicas_n = fuzz.get("replicas", 4)
        if not isinstance(replicas_n, int) or not 2 <= replicas_n <= 8:
            fail("fuzz.replicas", "must be an integer in [2, 8]")
        return Scenario(name=name, seed=seed, crdt=crdt, strategy=strategy, fuzz=dict(fuzz))

    duration = float(data.get("duration_ms", 1000.0))
    replicas = tuple(data.get("replicas", ["A", "B"]))
    if len(replicas) < 2 or len(set(replicas)) != len(replicas):
        fail("replicas", "need at least two distinct replica ids")
    if RELAY in replicas:
        fail("replicas", f"{RELAY!r} is reserved for the relay node")

    try:
        link = LinkConfig.from_json(data.get("link", {}))
    except (ValueError, TypeError) as exc:
        fail("link", str(exc))

    leg_overrides = []
    for leg, cfg in dict(data.get("legs", {})).items():
        if "->" not in leg:
            fail(f"legs.{leg}", "leg names are channel ids like 'A->B'")
        try:
            leg_overrides.append((leg, LinkConfig.from_json(cfg)))
        except (ValueError, TypeError) as exc:
            fail(f"legs.{leg}", str(exc))

    script = data.get("script", [])
    if not isinstance(script, list):
        fail("script", "must be a list of actions")
    for i, action in enumerate(script):
        where = f"script[{i}]"
        if not isinstance(action, dict):
            fail(where, "must be an object")
        at = action.get("at")
        if not isinstance(at, (int, float)) or at < 0 or at > duration:
            fail(f"{where}.at", f"must be a time within [0, {duration}]")
        kind = action.get("action")
        if kind not in ACTIONS:
            fail(f"{where}.action", f"must be one of {ACTIONS}")
        if kind not in ("sync", "close", "partition"):
            r = action.get("replica")
            if r not in replicas:
                fail(f"{where}.replica", f"references undeclared replica {r!r}")
        if kind == "sync" and "replica" in action and action["replica"] not in replicas:
            fail(f"{where}.replica", "references undeclared replica")
        if crdt == "op" and kind not in ("move", "sync"):
            fail(f"{where}.action", f"{kind!r} is not available in op mode")

    probe = data.get("rtt_probe")
    if probe is not None and not isinstance(probe, dict):
        fail("rtt_probe", "must be an object")

    return Scenario(
        name=name, seed=seed, topology=topology, crdt=crdt, strategy=strategy,
        duration_ms=duration, replicas=replicas, link=link,
        leg_overrides=tuple(leg_overrides), script=tuple(script), rtt_probe=probe,
    )


# --- topology ----------------------------------------------------------------

def build_channels(world: SimWorld, scenario: Scenario) -> dict[tuple[str, str], list[str]]:
    """Create channels and return the channel path for each ordered pair.

    Every leg starts from the scenario-wide link config; a "legs" entry
    keyed by channel id overrides individual directions.
    """
    paths: dict[tuple[str, str], list[str]] = {}
    reps = scenario.replicas
    if scenario.topology == "direct":
        for i, a in enumerate(reps):
            for b in reps[i + 1:]:
                world.add_link(a, b, scenario.link)
                paths[(a, b)] = [f"{a}->{b}"]
                paths[(b, a)] = [f"{b}->{a}"]
    else:
        for r in reps:
            world.add_link(r, RELAY, scenario.link)
        for a in reps:
            for b in reps:
                if a != b:
                    paths[(a, b)] = [f"{a}->{RELAY}", f"{RELAY}->{b}"]
    for leg, config in scenario.leg_overrides:
        if leg not in world.channels:
            raise ScenarioError(f"field 'legs.{leg}': no such channel in this topology")
        world.channels[leg].config = config
        for t in config.closures:  # base-config closures stay scheduled too
            world.schedule_close(leg, t)
    return paths


# --- scripted run ---------------------------------------------------------------

def run_scenario(path: str | Path, seed_override: int | None = None) -> RunReport:
    scenario = load_scenario(path)
    if seed_override is not None:
        scenario = replace(scenario, seed=seed_override)
    if scenario.fuzz is not None:
        return run_fuzz_scenario(scenario)
    if scenario.crdt == "op":
        return _run_scripted_op(scenario)
    return _run_scripted_state(scenario)


def _strategy_of(scenario: Scenario) -> Strategy | None:
    return None if scenario.strategy == "dynamic" else Strategy(scenario.strategy)


def _run_scripted_state(scenario: Scenario) -> RunReport:
    world = SimWorld(seed=scenario.seed)
    paths = build_channels(world, scenario)
    replicas = {r: Replica(r) for r in scenario.replicas}
    for rep in replicas.values():
        rep.set_strategy(_strategy_of(scenario))

    report = RunReport(scenario=scenario.name, seed=scenario.seed)
    counters = {"delivered": 0, "lost": 0, "rejected": 0, "renegotiations": 0}
    last_pos: dict[tuple[str, str], tuple] = {}

    def record(at_ms: float, rep: Replica) -> None:
        for brick in sorted(rep.doc.bricks):
            pos = rep.resolve(brick).position
            key = (rep.id, str(brick))
            rounded = (pos.x, pos.y, pos.z)
            if last_pos.get(key) != rounded:
                last_pos[key] = rounded
                report.timeline.append({
                    "at_ms": round(at_ms, 3), "replica": rep.id,
                    "brick": str(brick), "pos": [pos.x, pos.y, pos.z],
                })

    def broadcast(src: str) -> None:
        payload = json.dumps(replicas[src].state_json(), separators=(",", ":")).encode()
        for dst in scenario.replicas:
            if dst == src:
                continue
            envelope = json.dumps({"to": dst}).encode() + b"\n" + payload
            try:
                world.send(paths[(src, dst)][0], envelope)
            except PayloadTooLargeError:
                counters["rejected"] += 1

    def apply_action(action: dict, at_ms: float) -> None:
        kind = action["action"]
        if kind == "sync":
            sources = [action["replica"]] if "replica" in action else list(scenario.replicas)
            for src in sources:
                broadcast(src)
            return
        if kind == "close":
            for cid in action.get("channels", list(world.channels)):
                world.schedule_close(cid, at_ms)
            return
        if kind == "partition":
            until = float(action["until_ms"])
            for cid in action.get("channels", list(world.channels)):
                ch = world.channels[cid]
                spans = ch.config.partitions + ((at_ms, until),)
                ch.config = replace(ch.config, partitions=tuple(sorted(spans)))
            return
        rep = replicas[action["replica"]]
        if kind in ("move", "grab", "release", "mode"):
            brick = BrickId.parse(action["brick"])
            if brick not in rep.doc.bricks:
                # under loss a replica may not have learned a brick yet;
                # skipping mirrors how live peers drop unknown-brick input
                counters["skipped_actions"] = counters.get("skipped_actions", 0) + 1
                return
        if kind == "spawn":
            pose = TransformSnapshot(position=Vector3(*action.get("pos", (0, 0, 0))))
            rep.spawn(pose)
        elif kind == "move":
            if "to" in action:
                rep.move(brick, to=Vector3(*action["to"]))
            else:
                rep.move(brick, by=Vector3(*action["by"]))
        elif kind == "grab":
            rep.grab(brick)
        elif kind == "release":
            rep.release(brick)
        elif kind == "mode":
            rep.set_mode(brick, bool(action["local"]))
        elif kind == "strategy":
            name = action["name"]
            rep.set_strategy(None if name == "dynamic" else Strategy(name))
        elif kind == "rule-tick":
            rule = GlobalRule(
                "RULE:gravity",
                fall_speed=float(action.get("v", 1.0)),
                gate_on_grab=bool(action.get("gate", True)),
            )
            rep.rule_tick(rule, float(action["dt"]))
        record(at_ms, rep)

    for i, action in enumerate(scenario.script):
        world.schedule_timer(float(action["at"]), f"act:{i}")

    while world.pending():
        for ev in world.step():
            if isinstance(ev, TimerFired) and ev.tag.startswith("act:"):
                apply_action(scenario.script[int(ev.tag.split(":")[1])], ev.at_ms)
            elif isinstance(ev, Delivery):
                counters["delivered"] += 1
                head, _, body = ev.payload.partition(b"\n")
                dst = json.loads(head)["to"]
                if ev.dst == RELAY:
                    world.send(f"{RELAY}->{dst}", ev.payload)
                    continue
                rep = replicas[dst]
                rep.merge_state(json.loads(body))
                for brick in rep.doc.bricks:
                    rep.step_controller(brick)
                record(ev.at_ms, rep)
            elif isinstance(ev, ChannelClosedEvt):
                counters["renegotiations"] += 1

    # quiescence: repair any remaining divergence with lossless exchanges
    rounds = 0
    while len({rep.digest() for rep in replicas.values()}) > 1:
        if rounds >= MAX_QUIESCE_ROUNDS:
            report.invariant_violations.append(
                f"no convergence after {MAX_QUIESCE_ROUNDS} lossless exchange rounds")
            break
        rounds += 1
        states = {r: rep.state_json() for r, rep in replicas.items()}
        for src, state in states.items():
            for dst, rep in replicas.items():
                if dst != src:
                    rep.merge_state(state)

    report.extra_sync_rounds = rounds
    for r, rep in replicas.items():
        report.digests[r] = rep.digest()
    report.convergence = len(set(report.digests.values())) == 1
    for ch in world.channels.values():
        counters["lost"] += ch.stats.lost
        counters["rejected"] += ch.stats.rejected
    report.counters = counters
    if not world.conservation_ok():
        report.invariant_violations.append("channel accounting does not balance")
    _check_state_invariants(replicas, report)

    if scenario.rtt_probe is not None:
        report.rtt = _probe_topology(scenario)
    return report


def _check_state_invariants(replicas: dict[str, Replica], report: RunReport) -> None:
    from brickmesh.core import Ordering, vc_compare

    for r, rep in replicas.items():
        for brick, mv in rep.doc.bricks.items():
            versions = mv.world
            for i, a in enumerate(versions):
                for b in versions[i + 1:]:
                    if vc_compare(a.clock, b.clock) in (Ordering.BEFORE, Ordering.AFTER):
                        report.invariant_violations.append(
                            f"{r}:{brick}: world versions are not an antichain")


def _probe_topology(scenario: Scenario) -> dict:
    probe = scenario.rtt_probe or {}
    period = float(probe.get("period_ms", 50.0))
    duration = float(probe.get("duration_ms", 1000.0))
    payload = int(probe.get("payload_bytes", 32))
    a, b = scenario.replicas[0], scenario.replicas[1]
    world = SimWorld(seed=scenario.seed)
    clean = replace(scenario.link, closures=(), partitions=())
    if scenario.topology == "direct":
        world.add_link(a, b, clean)
        forward, back = [f"{a}->{b}"], [f"{b}->{a}"]
    else:
        world.add_link(a, RELAY, clean)
        world.add_link(RELAY, b, clean)
        forward = [f"{a}->{RELAY}", f"{RELAY}->{b}"]
        back = [f"{b}->{RELAY}", f"{RELAY}->{a}"]
    stats = run_rtt_probe(world, forward, back, period_ms=period,
                          duration_ms=duration, payload_bytes=payload)
    return {
        "path": f"{a}<->{b}",
        "instant_ms": stats.instant_ms,
        "window_mean_ms": stats.window_mean_ms(),
        "samples": len(stats.samples),
    }


# --- scripted run, operation mode ---------------------------------------------

def _run_scripted_op(scenario: Scenario) -> RunReport:
    world = SimWorld(seed=scenario.seed)
    paths = build_channels(world, scenario)
    states = {r: OpReplicaState(replica=r) for r in scenario.replicas}
    report = RunReport(scenario=scenario.name, seed=scenario.seed)
    counters = {"delivered": 0, "lost": 0, "rejected": 0, "renegotiations": 0}

    def broadcast(src: str, op: Operation) -> None:
        payload = json.dumps(op.to_json(), separators=(",", ":")).encode()
        for dst in scenario.replicas:
            if dst != src:
                envelope = json.dumps({"to": dst}).encode() + b"\n" + payload
                world.send(paths[(src, dst)][0], envelope)

    for i, action in enumerate(scenario.script):
        world.schedule_timer(float(action["at"]), f"act:{i}")

    while world.pending():
        for ev in world.step():
            if isinstance(ev, TimerFired) and ev.tag.startswith("act:"):
                action = scenario.script[int(ev.tag.split(":")[1])]
                if action["action"] == "sync":
                    continue  # ops are broadcast at creation in op mode
                r = action["replica"]
                by = Vector3(*action.get("by", (0, 0, 0)))
                states[r], op = op_create(
                    states[r], by, _rot_of(action), Vector3(1, 1, 1))
                broadcast(r, op)
                _record_op(report, ev.at_ms, r, states[r])
            elif isinstance(ev, Delivery):
                counters["delivered"] += 1
                head, _, body = ev.payload.partition(b"\n")
                dst = json.loads(head)["to"]
                if ev.dst == RELAY:
                    world.send(f"{RELAY}->{dst}", ev.payload)
                    continue
                states[dst] = op_apply(states[dst], Operation.from_json(json.loads(body)))
                _record_op(report, ev.at_ms, dst, states[dst])

    for r, state in states.items():
        canon = json.dumps(
            [state.snapshot.to_json(), sorted(state.clock.items())],
            separators=(",", ":"), sort_keys=True)
        report.digests[r] = hashlib.sha256(canon.encode()).hexdigest()
        if state.pending:
            report.invariant_violations.append(f"{r}: undelivered buffered operations")
    report.convergence = len(set(report.digests.values())) == 1
    report.counters = counters
    return report


def _rot_of(action: dict):
    from brickmesh.core import IDENTITY_QUAT, UnitQuaternion

    if "rot" in action:
        return UnitQuaternion.from_json(action["rot"])
    return IDENTITY_QUAT


def _record_op(report: RunReport, at_ms: float, r: str, state: OpReplicaState) -> None:
    pos = op_resolve(state).position
    report.timeline.append({
        "at_ms": round(at_ms, 3), "replica": r, "brick": "shared",
        "pos": [pos.x, pos.y, pos.z],
    })


# --- convergence fuzzing -----------------------------------------------------

def run_fuzz_scenario(scenario: Scenario) -> RunReport:
    cfg = scenario.fuzz or {}
    result = run_fuzz(
        seed=scenario.seed,
        replicas=int(cfg.get("replicas", 4)),
        updates=int(cfg.get("updates", 250)),
        exchange_rate=float(cfg.get("exchange_rate", 0.3)),
        dup_rate=float(cfg.get("dup_rate", 0.15)),
        drop_rate=float(cfg.get("drop_rate", 0.2)),
        max_delay=int(cfg.get("max_delay", 6)),
    )
    report = RunReport(scenario=scenario.name, seed=scenario.seed)
    report.digests = result["digests"]
    report.convergence = result["converged"]
    report.extra_sync_rounds = result["quiesce_rounds"]
    report.counters = result["counters"]
    if not result["converged"]:
        report.invariant_violations.append("fuzz run failed to converge")
        report.timeline = result["trace"]
    return report


REPLICA_NAMES = ("A", "B", "C", "D", "E", "F", "G", "H")


def run_fuzz(
    seed: int,
    replicas: int = 4,
    updates: int = 250,
    exchange_rate: float = 0.3,
    dup_rate: float = 0.15,
    drop_rate: float = 0.2,
    max_delay: int = 6,
) -> dict:
    """Random mixed-mode updates under an adversarial exchange layer.

    States travel as whole documents and may be duplicated, dropped, or
    delivered out of order; the final lossless rounds model reconnection
    and must always converge.
    """
    rng = random.Random(seed)
    names = REPLICA_NAMES[:replicas]
    reps = {r: Replica(r) for r in names}
    rule = GlobalRule("RULE:gravity", fall_speed=1.0, gate_on_grab=True)
    rule_author = names[0]
    inboxes: dict[str, list[tuple[int, dict]]] = {r: [] for r in names}
    counters = {"updates": 0, "exchanges": 0, "dropped": 0, "duplicated": 0}
    trace: list[dict] = []

    def post(src: str, step: int) -> None:
        state = reps[src].state_json()
        for dst in names:
            if dst == src:
                continue
            if rng.random() < drop_rate:
                counters["dropped"] += 1
                continue
            copies = 2 if rng.random() < dup_rate else 1
            counters["duplicated"] += copies - 1
            for _ in range(copies):
                due = step + rng.randint(0, max_delay)
                inboxes[dst].append((due, state))
        counters["exchanges"] += 1

    def deliver_due(step: int) -> None:
        for dst in names:
            due_now = [m for m in inboxes[dst] if m[0] <= step]
            if not due_now:
                continue
            rng.shuffle(due_now)  # reordering adversary
            inboxes[dst] = [m for m in inboxes[dst] if m[0] > step]
            for _, state in due_now:
                reps[dst].merge_state(state)

    for step in range(updates):
        r = rng.choice(names)
        rep = reps[r]
        bricks = sorted(rep.doc.bricks)
        roll = rng.random()
        if not bricks or roll < 0.12:
            rep.spawn(TransformSnapshot(position=Vector3(
                rng.uniform(-5, 5), rng.uniform(0, 5), rng.uniform(-5, 5))))
            trace.append({"step": step, "replica": r, "action": "spawn"})
        elif roll < 0.55:
            brick = rng.choice(bricks)
            rep.move(brick, by=Vector3(rng.uniform(0.5, 2.0) * rng.choice((-1, 1)),
                                       rng.uniform(0.5, 2.0) * rng.choice((-1, 1)), 0.0))
            trace.append({"step": step, "replica": r, "action": "move", "brick": str(brick)})
        elif roll < 0.7:
            brick = rng.choice(bricks)
            holding = rng.random() < 0.5
            rep.grab(brick, holding)
            trace.append({"step": step, "replica": r, "action": "grab", "brick": str(brick)})
        elif roll < 0.82:
            brick = rng.choice(bricks)
            rep.set_mode(brick, local_space=rng.random() < 0.5)
            trace.append({"step": step, "replica": r, "action": "mode", "brick": str(brick)})
        elif r == rule_author:
            reps[rule_author].rule_tick(rule, dt=0.1)
            trace.append({"step": step, "replica": r, "action": "rule-tick"})
        else:
            brick = rng.choice(bricks)
            rep.move(brick, by=Vector3(0.0, 0.0, rng.uniform(0.5, 2.0)))
            trace.append({"step": step, "replica": r, "action": "move", "brick": str(brick)})
        counters["updates"] += 1
        if rng.random() < exchange_rate:
            post(r, step)
        deliver_due(step)

    # drain everything still in flight
    deliver_due(updates + max_delay + 1)

    rounds = 0
    while len({rep.digest() for rep in reps.values()}) > 1 and rounds < MAX_QUIESCE_ROUNDS:
        rounds += 1
        states = {r: rep.state_json() for r, rep in reps.items()}
        for src, state in states.items():
            for dst, rep in reps.items():
                if dst != src:
                    rep.merge_state(state)

    digests = {r: rep.digest() for r, rep in reps.items()}
    return {
        "digests": digests,
        "converged": len(set(digests.values())) == 1,
        "quiesce_rounds": rounds,
        "counters": counters,
        "trace": trace,
    }


# --- emission -----------------------------------------------------------------

def write_report(report: RunReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / f"{report.scenario}-report.json"
    report_path.write_text(report.render_json(), "utf-8")
    csv_path = out / f"{report.scenario}-timeline.csv"
    csv_path.write_text(report.timeline_csv(), "utf-8")
    return [report_path, csv_path]
