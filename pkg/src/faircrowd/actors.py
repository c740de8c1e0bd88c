"""Protocol roles and scenario orchestration.

A scenario runs in four phases: service initialization (parameters and keys),
task releasing (create and accept), data uploading (encrypted reports and the
server's aggregate) and user rewarding (customer decrypt/verify plus the
contract's payout). Adversarial behaviour is a declarative list of deviations
taken from a closed set, so every attack run is enumerable and reportable.

The server role only ever reads accepted reports off the chain; it never sees
plaintexts or any party's secret.
"""
from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import asdict, dataclass, field, replace
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Any

import yaml

from . import chain as ch
from . import groupmath as gm
from . import pvas, sigma
from .contract import TaskState
from .groupmath import Rng
from .ingest import DEFAULT_SCALE, ingest, read_column, resolve

DEFAULT_SCHEDULE = (2, 4, 6, 8)
SERVER_ACTIONS = ("perturb_sigma", "claim_reward")
CUSTOMER_ACTIONS = ("cancel", "early_timer", "early_refund")
USER_ACTIONS = ("skip_upload", "double_report", "sybil_upload", "replay_other", "bad_proof")
ACTIONS = {"user": USER_ACTIONS, "customer": CUSTOMER_ACTIONS, "server": SERVER_ACTIONS}

# rejection reasons each deviation must produce
EXPECTED_REASON = {
    "double_report": {"AlreadyUploaded"},
    "sybil_upload": {"NotAccepted"},
    "replay_other": {"InvalidProof"},
    "bad_proof": {"InvalidProof"},
    "cancel": {"UnknownOperation"},
    "early_timer": {"WrongState"},
    "early_refund": {"WrongState"},
    "claim_reward": {"SharesMismatch", "WrongState"},
}


class ScenarioError(ValueError):
    def __init__(self, message: str, field: str = "", line: int | None = None, source: str = ""):
        where = ":".join(str(x) for x in (source, line) if x not in ("", None))
        prefix = f"{where}: " if where else ""
        super().__init__(f"{prefix}{field + ': ' if field else ''}{message}")
        self.field = field
        self.line = line


# -- scenario ----------------------------------------------------------------------


@dataclass(frozen=True)
class Deviation:
    actor: str
    action: str
    index: int | None = None  # which user, for user deviations
    target: int | None = None  # whose report to copy, for replay_other


@dataclass(frozen=True)
class DataSource:
    source: str = "synthetic"  # synthetic | csv | values
    path: str = ""
    columns: tuple = ()
    scale: int = DEFAULT_SCALE
    max: int | None = None  # synthetic values drawn below this
    values: tuple = ()


@dataclass(frozen=True)
class Scenario:
    name: str = "honest"
    seed: int = 0
    n: int = 4
    l: int = 1
    weights: tuple = ()  # empty means all ones
    data: DataSource = DataSource()
    schedule: tuple = DEFAULT_SCHEDULE
    reward: int = 100
    deposit: int = 10
    customer_funds: int | None = None
    user_funds: int | None = None
    n_min: int = 1
    value_bound: int = 2 ** 16
    aggregate_bound: int = pvas.DEFAULT_AGGREGATE_BOUND
    decrypt_bound: str = "tight"  # tight | fixed
    deviations: tuple = ()
    base_dir: str = ""

    def weight_list(self) -> list[int]:
        return list(self.weights) if self.weights else [1] * self.n

    def funds(self) -> tuple[int, int]:
        c = self.reward if self.customer_funds is None else self.customer_funds
        u = 2 * self.deposit if self.user_funds is None else self.user_funds
        return c, u

    def validate(self) -> "Scenario":
        def bad(f, msg):
            raise ScenarioError(msg, f)
        if self.n < 1:
            bad("n", "need at least one user")
        if self.l < 1:
            bad("l", "need at least one dimension")
        if len(self.weight_list()) != self.n:
            bad("weights", f"{len(self.weight_list())} weights for {self.n} users")
        if any(not isinstance(w, int) or w < 0 for w in self.weight_list()):
            bad("weights", "weights are non-negative integers")
        T = self.schedule
        if len(T) != 4 or not all(isinstance(t, int) for t in T) or not 1 <= T[0] < T[1] < T[2] < T[3]:
            bad("schedule", f"need 1 <= T1 < T2 < T3 < T4, got {list(T)}")
        if self.reward < 0 or self.deposit <= 0:
            bad("reward", "reward must be >= 0 and deposit > 0")
        if self.decrypt_bound not in ("tight", "fixed"):
            bad("decrypt_bound", "must be 'tight' or 'fixed'")
        if self.data.source not in ("synthetic", "csv", "values"):
            bad("data", f"unknown source {self.data.source!r}")
        if self.data.source == "csv" and len(self.data.columns) != self.l:
            bad("data", f"{len(self.data.columns)} csv columns for l={self.l}")
        if self.data.source == "values":
            if len(self.data.values) != self.n or any(len(v) != self.l for v in self.data.values):
                bad("data", f"values must be {self.n} rows of {self.l}")
        for k, dev in enumerate(self.deviations):
            if dev.actor not in ACTIONS or dev.action not in ACTIONS[dev.actor]:
                bad(f"deviations[{k}]", f"unknown deviation {dev.actor}/{dev.action}")
            if dev.actor == "user" and (dev.index is None or not 0 <= dev.index < self.n):
                bad(f"deviations[{k}]", f"user index {dev.index} not in [0, {self.n})")
            if dev.action == "replay_other" and (dev.target is None or not 0 <= dev.target < self.n
                                                 or dev.target == dev.index):
                bad(f"deviations[{k}]", "replay_other needs a target user other than itself")
        return self

    def deviation_for(self, actor: str, action: str, index: int | None = None) -> list[Deviation]:
        return [d for d in self.deviations if d.actor == actor and d.action == action
                and (index is None or d.index == index)]


_SCENARIO_FIELDS = {f for f in Scenario.__dataclass_fields__ if f != "base_dir"}
_DATA_FIELDS = {"source", "path", "column", "columns", "scale", "max", "values"}
_DEV_FIELDS = {"actor", "action", "index", "target"}


def _key_lines(node) -> dict[str, int]:
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def scenario_from_mapping(doc: dict, source: str = "", lines: dict | None = None,
                          base_dir: str = "") -> Scenario:
    lines = lines or {}
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a mapping", source=source)

    def err(f, msg):
        return ScenarioError(msg, f, lines.get(f.split("[")[0].split(".")[0]), source)

    for k in doc:
        if k not in _SCENARIO_FIELDS:
            raise err(str(k), "unknown field")
    kw: dict[str, Any] = {}
    for k in ("name", "decrypt_bound"):
        if k in doc:
            kw[k] = str(doc[k])
    for k in ("seed", "n", "l", "reward", "deposit", "customer_funds", "user_funds", "n_min",
              "value_bound", "aggregate_bound"):
        if k in doc:
            if not isinstance(doc[k], int) or isinstance(doc[k], bool):
                raise err(k, f"expected an integer, got {doc[k]!r}")
            kw[k] = doc[k]
    n = kw.get("n", Scenario.n)
    if "weights" in doc:
        w = doc["weights"]
        kw["weights"] = tuple([w] * n) if isinstance(w, int) else tuple(w)
    if "schedule" in doc:
        kw["schedule"] = tuple(doc["schedule"])
    if "data" in doc:
        d = doc["data"]
        if not isinstance(d, dict):
            raise err("data", "expected a mapping")
        for k in d:
            if k not in _DATA_FIELDS:
                raise err("data", f"unknown data field {k!r}")
        cols = d.get("columns", d.get("column", ()))
        cols = (cols,) if isinstance(cols, str) else tuple(cols)
        kw["data"] = DataSource(str(d.get("source", "synthetic")), str(d.get("path", "")), cols,
                                int(d.get("scale", DEFAULT_SCALE)), d.get("max"),
                                tuple(tuple(v) if isinstance(v, list) else (v,) for v in d.get("values", ())))
    if "deviations" in doc:
        devs = []
        for k, item in enumerate(doc["deviations"] or ()):
            if not isinstance(item, dict) or set(item) - _DEV_FIELDS:
                raise err(f"deviations[{k}]", f"expected keys from {sorted(_DEV_FIELDS)}")
            devs.append(Deviation(str(item.get("actor", "")), str(item.get("action", "")),
                                  item.get("index"), item.get("target")))
        kw["deviations"] = tuple(devs)
    try:
        return Scenario(base_dir=base_dir, **kw).validate()
    except ScenarioError as exc:
        raise err(exc.field, str(exc).split(": ", 1)[-1]) from None


def load_scenario(path: str | Path) -> Scenario:
    p = resolve(path)
    text = p.read_text()
    try:
        node = yaml.compose(text)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError(str(getattr(exc, "problem", exc)), line=mark.line + 1 if mark else None,
                            source=str(p)) from None
    return scenario_from_mapping(doc or {}, str(p), _key_lines(node), str(p.parent))


# -- roles -------------------------------------------------------------------------


@dataclass
class CustomerRole:
    keys: pvas.CustomerKeyPair
    identity: str

    def create_tx(self, N: bytes, task: bytes, reward: int, T) -> ch.Transaction:
        return ch.Transaction(ch.TxKind.CREATE, self.identity,
                              ch.CreatePayload(N, task, self.keys.public, reward, tuple(T)))

    def event_tx(self, op: str, N: bytes) -> ch.Transaction:
        return ch.Transaction(ch.TxKind.EVENT, self.identity, ch.EventPayload(op, N))

    def decrypt_and_verify(self, params, server_public, N, agg, bound=None) -> tuple[list[int], bool]:
        result = pvas.decrypt(params, self.keys, agg, bound)
        return result, pvas.verify(params, self.keys, server_public, N, agg, result)


@dataclass
class UserRole:
    keys: pvas.UserKeyPair
    identity: str
    data: tuple

    def accept_tx(self, N: bytes, deposit: int) -> ch.Transaction:
        return ch.Transaction(ch.TxKind.ACCEPT, self.identity, ch.AcceptPayload(N, self.keys.public, deposit))

    def report(self, params, N: bytes, A, rng: Rng) -> ch.ReportPayload:
        cb, hs, rk = pvas.sig_enc(params, self.keys, A, N, self.data, rng)
        st = sigma.statement_for(params, N, A, self.keys.public, cb, hs, rk)
        proof = sigma.prove(st, sigma.witness_for(self.keys, self.data, cb, hs), rng)
        return ch.ReportPayload(N, self.keys.public, cb.public(), hs.public(), rk, proof)

    def report_tx(self, payload: ch.ReportPayload) -> ch.Transaction:
        return ch.Transaction(ch.TxKind.REPORT, self.identity, payload)


@dataclass
class ServerRole:
    keys: pvas.ServerKeyPair
    identity: str
    seen: list = field(default_factory=list)  # everything the server read, for the privacy audit

    def aggregate(self, params, chain: ch.Chain, N: bytes, weights: dict[str, int]):
        inputs, ws = [], []
        for tx in chain.accepted_reports(N):
            p = tx.payload
            self.seen.append((p.cipher, p.homsig, p.rk))
            inputs.append((p.cipher, p.homsig, p.rk))
            ws.append(weights[tx.sender])
        if not inputs:
            return None, []
        return pvas.aggregate(params, self.keys, inputs, ws), ws


# -- world and report --------------------------------------------------------------


@dataclass
class Check:
    ok: bool
    oracle: str
    detail: str = ""


@dataclass
class RunReport:
    scenario: dict
    timings: dict  # phase -> role -> seconds (users: mean per user)
    ledger_before: dict
    ledger_after: dict
    names: dict  # identity -> role label
    final_state: str
    path: str
    reporters: int
    result: list | None
    expected: list | None
    average: list | None
    verify: bool | None
    rejections: list  # (height, kind, who, reason)
    storage: dict
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks.values())

    def canonical(self) -> dict:
        """Everything except wall-time fields."""
        d = asdict(self)
        d.pop("timings")
        return d

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


@dataclass
class World:
    scenario: Scenario
    params: pvas.PublicParams
    rng: Rng
    chain: ch.Chain
    customer: CustomerRole
    server: ServerRole
    users: list
    N: bytes
    names: dict
    timings: dict = field(default_factory=lambda: defaultdict(dict))
    agg: Any = None
    agg_weights: list = field(default_factory=list)
    result: list | None = None
    verify: bool | None = None
    submitted: list = field(default_factory=list)  # (deviation action or "", judged tx)
    ledger_before: dict = field(default_factory=dict)

    @property
    def weights(self) -> dict[str, int]:
        return {u.identity: w for u, w in zip(self.users, self.scenario.weight_list())}

    def submit(self, tx: ch.Transaction, tag: str = "") -> ch.Transaction:
        judged = self.chain.submit(tx)
        self.submitted.append((tag, judged))
        return judged


def _time_role(world: World, phase: str, role: str, seconds: float, count: int = 1) -> None:
    prev_total, prev_count = world.timings[phase].get(role, (0.0, 0))
    world.timings[phase][role] = (prev_total + seconds, prev_count + count)


def _load_data(sc: Scenario, rng: Rng) -> list[tuple]:
    if sc.data.source == "values":
        rows = [tuple(int(x) for x in row) for row in sc.data.values]
    elif sc.data.source == "csv":
        cols = [ingest(_data_path(sc), c, sc.data.scale, sc.value_bound) for c in sc.data.columns]
        if len(cols[0]) < sc.n:
            raise ScenarioError(f"csv has {len(cols[0])} rows, scenario needs {sc.n}", "data")
        rows = [tuple(col[i] for col in cols) for i in range(sc.n)]
    else:
        top = min(sc.data.max or sc.value_bound, sc.value_bound)
        rows = [tuple(rng.below(top) for _ in range(sc.l)) for _ in range(sc.n)]
    for k, row in enumerate(rows):
        if any(not 0 <= x < sc.value_bound for x in row):
            raise ScenarioError(f"row {k} has a value outside [0, {sc.value_bound})", "data")
    return rows


def _data_path(sc: Scenario):
    return resolve(sc.data.path, Path(sc.base_dir) if sc.base_dir else None)


def csv_mean(sc: Scenario, column: str) -> Decimal:
    """Oracle: arithmetic mean of the first ``n`` raw readings, straight from the file."""
    vals = read_column(_data_path(sc), column)[:sc.n]
    return sum(vals, Decimal(0)) / len(vals)


# -- phases ------------------------------------------------------------------------


def run_service_initialization(sc: Scenario, params: pvas.PublicParams | None = None) -> World:
    sc.validate()
    rng = Rng(sc.seed)
    t0 = time.perf_counter()
    if params is None:
        params = pvas.par_gen(256, sc.l, value_bound=sc.value_bound, aggregate_bound=sc.aggregate_bound)
    key_rng = rng.fork("keys")
    customer_keys = pvas.keygen_customer(params, key_rng)
    server_keys = pvas.keygen_server(params, key_rng)
    user_keys = [pvas.keygen_user(params, key_rng) for _ in range(sc.n)]
    elapsed = time.perf_counter() - t0

    data = _load_data(sc, rng.fork("data"))
    customer = CustomerRole(customer_keys, ch.address(customer_keys.public))
    server = ServerRole(server_keys, ch.address(server_keys.public))
    users = [UserRole(k, ch.address(k.public), d) for k, d in zip(user_keys, data)]
    c_funds, u_funds = sc.funds()
    balances = {customer.identity: c_funds, server.identity: 0}
    balances.update({u.identity: u_funds for u in users})
    names = {customer.identity: "customer", server.identity: "server"}
    names.update({u.identity: f"user-{k}" for k, u in enumerate(users)})
    chain = ch.Chain(params, balances, sc.n_min)
    N = rng.fork("task").bytes(16)
    world = World(sc, params, rng, chain, customer, server, users, N, names)
    world.ledger_before = chain.ledger.snapshot()
    world.timings["initialization"]["system"] = (elapsed, 1)
    return world


def run_task_releasing(world: World) -> None:
    sc, chain = world.scenario, world.chain
    T1, T2, _, _ = sc.schedule
    t0 = time.perf_counter()
    world.submit(world.customer.create_tx(world.N, f"{sc.name}: report l={sc.l} readings".encode(),
                                          sc.reward, sc.schedule))
    _time_role(world, "releasing", "customer", time.perf_counter() - t0)
    if sc.deviation_for("customer", "cancel"):
        world.submit(world.customer.event_tx("cancel", world.N), "cancel")
    chain.advance_to(T1 - 1)
    for u in world.users:
        t0 = time.perf_counter()
        world.submit(u.accept_tx(world.N, sc.deposit))
        _time_role(world, "releasing", "user", time.perf_counter() - t0)
    chain.advance_to(T2)  # claim fires at T2


def run_data_uploading(world: World) -> None:
    sc, chain, params = world.scenario, world.chain, world.params
    A = world.customer.keys.public
    if chain.contract.state_of(world.N) is TaskState.CLAIMED:
        enc_rng = world.rng.fork("encrypt")
        payloads: dict[int, ch.ReportPayload] = {}
        for k, u in enumerate(world.users):
            t0 = time.perf_counter()
            payloads[k] = u.report(params, world.N, A, enc_rng)
            _time_role(world, "uploading", "user", time.perf_counter() - t0)
        for k, u in enumerate(world.users):
            for dev in sc.deviation_for("user", "replay_other", k):
                copied = payloads[dev.target]
                world.submit(u.report_tx(replace(copied, U=u.keys.public)), "replay_other")
            if sc.deviation_for("user", "skip_upload", k):
                continue
            if sc.deviation_for("user", "bad_proof", k):
                pf = payloads[k].proof
                bumped = ((pf.responses[0] + 1) % gm.ORDER,) + pf.responses[1:]
                bad = replace(pf, responses=bumped)
                world.submit(u.report_tx(replace(payloads[k], proof=bad)), "bad_proof")
            world.submit(u.report_tx(payloads[k]))
            if sc.deviation_for("user", "double_report", k):
                world.submit(u.report_tx(u.report(params, world.N, A, enc_rng)), "double_report")
            if sc.deviation_for("user", "sybil_upload", k):
                fresh = pvas.keygen_user(params, world.rng.fork(f"sybil/{k}"))
                sybil = UserRole(fresh, ch.address(fresh.public), u.data)
                world.names[sybil.identity] = f"sybil-of-user-{k}"
                world.submit(sybil.report_tx(sybil.report(params, world.N, A, enc_rng)), "sybil_upload")
        if sc.deviation_for("customer", "early_timer"):
            world.submit(world.customer.event_tx("timer", world.N), "early_timer")
        if sc.deviation_for("customer", "early_refund"):
            world.submit(world.customer.event_tx("refund", world.N), "early_refund")
    chain.advance_to(sc.schedule[2] - 1)

    t0 = time.perf_counter()
    world.agg, world.agg_weights = world.server.aggregate(params, chain, world.N, world.weights)
    _time_role(world, "uploading", "server", time.perf_counter() - t0)
    if world.agg is not None and sc.deviation_for("server", "perturb_sigma"):
        noise = gm.pairing(gm.hash_to_g1(b"perturb"), params.h)
        world.agg = pvas.AggregateBundle(world.agg.c, world.agg.d, gm.mul(world.agg.sigma, noise), world.agg.e)


def run_user_rewarding(world: World) -> None:
    sc, chain = world.scenario, world.chain
    T3, T4 = sc.schedule[2], sc.schedule[3]
    if sc.deviation_for("server", "claim_reward"):
        grab = tuple(sorted({world.server.identity: sc.reward}.items()))
        world.submit(ch.Transaction(ch.TxKind.EVENT, world.server.identity,
                                    ch.EventPayload("reward", world.N, grab)), "claim_reward")
    if world.agg is not None:
        bound = None
        if sc.decrypt_bound == "tight":
            bound = pvas.weighted_bound(world.params, world.agg_weights)
        t0 = time.perf_counter()
        world.result, world.verify = world.customer.decrypt_and_verify(
            world.params, world.server.keys.public, world.N, world.agg, bound)
        _time_role(world, "rewarding", "customer", time.perf_counter() - t0)
    chain.advance_to(T3)  # reward or penalty
    chain.advance_to(T4 + 1)  # timer


# -- full run and checks -------------------------------------------------------------


def _path(world: World) -> str:
    ops = [t.op for t in world.chain.contract.log if t.N == world.N and t.prior is not t.next]
    for op in ("reward", "penalty", "refund"):
        if op in ops:
            return op
    return "none"


def run_scenario(sc: Scenario, params: pvas.PublicParams | None = None) -> tuple[RunReport, World]:
    world = run_service_initialization(sc, params)
    run_task_releasing(world)
    run_data_uploading(world)
    run_user_rewarding(world)
    return build_report(world), world


def build_report(world: World) -> RunReport:
    sc, chain = world.scenario, world.chain
    rec = chain.task(world.N) if world.N in chain.contract.tasks else None
    ledger_after = chain.ledger.snapshot()
    reporters = [tx.sender for tx in chain.accepted_reports(world.N)]
    weights = world.weights
    by_id = {u.identity: u for u in world.users}
    expected = None
    if reporters:
        expected = [sum(weights[r] * by_id[r].data[j] for r in reporters) for j in range(sc.l)]
    average = None
    if world.result is not None and sum(weights[r] for r in reporters):
        total_w = sum(weights[r] for r in reporters)
        average = [str(Fraction(x, total_w)) for x in world.result]
    rejections = [(b.height, tx.kind.name, world.names.get(tx.sender, tx.sender), tx.reason)
                  for b in chain.blocks for tx in b.transactions
                  if tx.status is ch.TxStatus.REJECTED and tx.sender != ch.SYSTEM]
    storage = {}
    if rec is not None:
        s = chain.storage_report(world.N)
        storage = {"accepted": s.accepted, "reported": s.reported, "l": s.l,
                   "on_chain": s.on_chain, "off_chain": s.off_chain}
    timings = {ph: {role: (tot / cnt if role == "user" else tot) for role, (tot, cnt) in roles.items()}
               for ph, roles in world.timings.items()}
    report = RunReport(
        scenario=_scenario_echo(sc), timings=timings, ledger_before=world.ledger_before,
        ledger_after=ledger_after, names=dict(world.names),
        final_state=rec.state.name if rec else "INIT", path=_path(world), reporters=len(reporters),
        result=world.result, expected=expected, average=average, verify=world.verify,
        rejections=rejections, storage=storage)
    report.checks = property_checks(world, report)
    return report


def _scenario_echo(sc: Scenario) -> dict:
    d = asdict(sc)
    d.pop("base_dir")
    return d


def property_checks(world: World, report: RunReport) -> dict[str, Check]:
    sc, chain = world.scenario, world.chain
    checks: dict[str, Check] = {}
    before, after = report.ledger_before, report.ledger_after
    checks["conservation"] = Check(sum(before.values()) == sum(after.values()),
                                   "sum of all balances incl. escrow, before vs after",
                                   f"{sum(before.values())} -> {sum(after.values())}")
    checks["no_negative_balance"] = Check(all(v >= 0 for v in after.values()), "every balance >= 0")
    rec = chain.task(world.N) if world.N in chain.contract.tasks else None
    if rec is None:
        checks["task_created"] = Check(False, "task record exists on chain")
        return checks
    checks["task_closed"] = Check(rec.state in (TaskState.FINISHED, TaskState.CLOSED),
                                  "final state FINISHED or CLOSED", rec.state.name)
    checks["escrow_empty"] = Check(chain.contract.escrow_balance(world.N) == 0,
                                   "escrow balance 0 after close")
    delta = {k: after.get(k, 0) - before.get(k, 0) for k in set(before) | set(after)}
    reporters = set(rec.ru)
    no_shows = set(rec.au) - reporters
    if report.path == "reward":
        paid = sum(delta[u] for u in reporters)
        checks["shares_sum_to_reward"] = Check(paid == rec.reward, "sum of reporter gains == reward",
                                               f"{paid} vs {rec.reward}")
        checks["customer_paid"] = Check(delta[world.customer.identity] == -rec.reward,
                                        "customer balance fell by exactly the reward")
    elif report.path == "penalty":
        forfeited = sum(rec.au[u] for u in no_shows)
        gained = sum(delta[u] for u in reporters)
        expect_gain = forfeited if reporters else 0
        checks["penalty_redistributed"] = Check(gained == expect_gain,
                                                "sum R* to reporters == forfeited deposits",
                                                f"{gained} vs {expect_gain}")
        checks["reward_refunded"] = Check(
            delta[world.customer.identity] == (0 if reporters else forfeited),
            "timer returned the reward to the customer")
        checks["no_shows_forfeit"] = Check(all(delta[u] == -rec.au[u] for u in no_shows),
                                           "each no-show lost exactly its deposit")
    checks["server_gains_nothing"] = Check(delta.get(world.server.identity, 0) == 0,
                                           "server balance unchanged")
    dup = [u for u in rec.au if chain.sig_index.count(world.N, u) > 1]
    checks["one_signature_per_user"] = Check(not dup, "signature index count per (task, user) <= 1")
    outsiders = [k for k, v in delta.items() if v > 0 and k not in rec.au and k != world.customer.identity]
    checks["no_outsider_gain"] = Check(not outsiders, "no identity outside AU gains coins",
                                       ", ".join(world.names.get(k, k) for k in outsiders))
    if report.result is not None:
        checks["decrypt_matches"] = Check(report.result == report.expected,
                                          "weighted plaintext sums over accepted reporters",
                                          f"{report.result} vs {report.expected}")
        tampered = bool(sc.deviation_for("server", "perturb_sigma"))
        checks["verify_verdict"] = Check(report.verify is (not tampered),
                                         "verify accepts honest aggregates, rejects a perturbed one",
                                         f"verify={report.verify}")
    witness = [x for x in world.server.seen if x[0].r is not None or x[1].tau is not None]
    checks["server_sees_no_witness"] = Check(not witness, "server inputs carry no r or tau")
    got = defaultdict(list)
    for tag, tx in world.submitted:
        if tag:
            got[tag].append(tx.reason if not tx.accepted else "ACCEPTED")
    for dev in sc.deviations:
        want = EXPECTED_REASON.get(dev.action)
        if want is None:
            continue
        reasons = got.get(dev.action, [])
        ok = bool(reasons) and all(r in want for r in reasons)
        checks[f"deviation:{dev.actor}/{dev.action}"] = Check(ok, f"rejected with {sorted(want)}",
                                                              ", ".join(reasons))
    if not sc.deviations:
        checks["no_rejections"] = Check(not report.rejections, "honest run has zero rejections")
    return checks


# -- attack suite -----------------------------------------------------------------------


def attack_scenarios(seed: int = 0, n: int = 4) -> dict[str, Scenario]:
    base = dict(seed=seed, n=n, l=2, reward=100, deposit=10, data=DataSource(max=1000))

    def sc(name, *devs):
        return Scenario(name=name, deviations=tuple(devs), **base).validate()

    return {
        "honest": sc("honest"),
        "payment-escaping": sc("payment-escaping", Deviation("customer", "cancel"),
                               Deviation("customer", "early_timer"), Deviation("customer", "early_refund")),
        "payment-reduction": sc("payment-reduction", Deviation("server", "claim_reward")),
        "free-riding": sc("free-riding", Deviation("user", "skip_upload", 1),
                          Deviation("user", "skip_upload", 2),
                          Deviation("user", "replay_other", 2, target=0)),
        "double-reporting": sc("double-reporting", Deviation("user", "double_report", 0)),
        "sybil": sc("sybil", Deviation("user", "sybil_upload", 0)),
        "server-tamper": sc("server-tamper", Deviation("server", "perturb_sigma")),
    }


def attack_outcome(name: str, report: RunReport) -> Check:
    """Attack-specific verdict on top of the generic property checks."""
    c = report.checks
    if name == "honest":
        return Check(report.path == "reward" and report.verify is True and not report.rejections,
                     "reward path, verify accepts, zero rejections")
    if name in ("payment-escaping", "payment-reduction", "double-reporting", "sybil"):
        ok = report.path == "reward" and c["shares_sum_to_reward"].ok and c["customer_paid"].ok
        return Check(ok, "reward still paid in full to the reporters")
    if name == "free-riding":
        ok = report.path == "penalty" and c["penalty_redistributed"].ok and c["reward_refunded"].ok
        return Check(ok, "penalty path: forfeits redistributed, reward refunded at the timer")
    if name == "server-tamper":
        return Check(report.verify is False, "customer verify rejects the perturbed aggregate")
    return Check(False, "unknown attack")


def run_attack_suite(seed: int = 0, n: int = 4) -> dict[str, tuple[bool, RunReport, Check]]:
    out = {}
    params = pvas.par_gen(256, 2, value_bound=2 ** 16)
    for name, sc in attack_scenarios(seed, n).items():
        report, _ = run_scenario(sc, params)
        outcome = attack_outcome(name, report)
        out[name] = (report.passed and outcome.ok, report, outcome)
    return out
