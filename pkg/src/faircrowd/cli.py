"""faircrowd command-line driver."""
from __future__ import annotations

import argparse
import hashlib
import json
import statistics
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import actors, codec, dlog, pvas
from . import chain as ch
from . import groupmath as gm
from .groupmath import Rng
from .ingest import DEFAULT_SCALE, IngestError, ingest
from .sigma import prove, statement_for, witness_for

DEFAULT_SCENARIO = "builtin:pm25.yaml"
BENCH_NS = (10, 20, 40, 80, 160)
# single-core reference figures for 40 reports, shown as context only
REFERENCE_MS = {"user upload": 198, "server aggregation (n=40)": 1641}


def _emit(args, payload: dict, text: str) -> None:
    print(text)
    if getattr(args, "out", None):
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")


# -- keygen ------------------------------------------------------------------------


def cmd_keygen(args) -> int:
    params = pvas.par_gen(256, args.l)
    rng = Rng(args.seed)
    gen = {"customer": pvas.keygen_customer, "server": pvas.keygen_server, "user": pvas.keygen_user}[args.role]
    keys = [gen(params, rng.fork(f"{args.role}/{k}")) for k in range(args.count)]
    records = []
    for kp in keys:
        rec = {"role": args.role, "identity": ch.address(kp.public), "public": codec.encode(kp.public).hex()}
        if args.with_secret:
            rec["secret"] = gm.encode_scalar(kp.secret).hex()
        records.append(rec)
    lines = [f"{r['role']} {r['identity']}" for r in records]
    if args.with_secret and not args.out:
        lines.append("warning: secrets printed only to --out; pass --out to keep them")
    _emit(args, {"l": args.l, "seed": args.seed, "keys": records}, "\n".join(lines))
    return 0


# -- simulate ----------------------------------------------------------------------


def _scenario_from_args(args) -> actors.Scenario:
    sc = actors.load_scenario(args.scenario or DEFAULT_SCENARIO)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.n is not None:
        over["n"] = args.n
        if sc.weights:
            over["weights"] = (sc.weights[0],) * args.n
    if args.l is not None:
        over["l"] = args.l
    return replace(sc, **over).validate() if over else sc


def render_report(r: actors.RunReport) -> str:
    out = [f"scenario {r.scenario['name']}  seed={r.scenario['seed']}  n={r.scenario['n']}  l={r.scenario['l']}"]
    out.append(f"path {r.path}  final state {r.final_state}  reporters {r.reporters}")
    if r.result is not None:
        out.append(f"result {r.result}  average {r.average}  verify {'accept' if r.verify else 'reject'}")
    out.append("timings (s):")
    for phase, roles in r.timings.items():
        out.append(f"  {phase:<15}" + "  ".join(f"{role}={t:.4f}" for role, t in sorted(roles.items())))
    if r.rejections:
        out.append("rejected transactions:")
        out += [f"  block {h} {kind} from {who}: {why}" for h, kind, who, why in r.rejections]
    if r.storage:
        out.append("storage bytes: on-chain {on_chain}  off-chain {off_chain}".format(**r.storage))
    out.append("ledger delta:")
    for acct in sorted(set(r.ledger_before) | set(r.ledger_after)):
        d = r.ledger_after.get(acct, 0) - r.ledger_before.get(acct, 0)
        if d:
            out.append(f"  {r.names.get(acct, acct):<22} {d:+d}")
    out.append("checks:")
    for name, c in r.checks.items():
        out.append(f"  {'PASS' if c.ok else 'FAIL'}  {name:<32} oracle: {c.oracle}"
                   + (f"  [{c.detail}]" if c.detail and not c.ok else ""))
    out.append("RESULT " + ("PASS" if r.passed else "FAIL"))
    return "\n".join(out)


def cmd_simulate(args) -> int:
    try:
        sc = _scenario_from_args(args)
    except (actors.ScenarioError, IngestError, OSError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    report, world = actors.run_scenario(sc)
    if args.log:
        world.chain.write_log(args.log)
    _emit(args, report.to_dict(), render_report(report))
    return 0 if report.passed else 1


# -- attack suite --------------------------------------------------------------------


def cmd_attack_suite(args) -> int:
    results = actors.run_attack_suite(args.seed or 0, args.n or 4)
    lines, payload = [], {}
    for name, (ok, report, outcome) in results.items():
        failed = [k for k, c in report.checks.items() if not c.ok]
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name:<18} path={report.path:<8} "
                     f"verify={report.verify}  rejected={len(report.rejections)}  {outcome.oracle}"
                     + (f"  failing: {failed}" if failed else ""))
        payload[name] = {"passed": ok, "outcome": outcome.oracle, "report": report.to_dict()}
    all_ok = all(ok for ok, _, _ in results.values())
    lines.append("SUITE " + ("PASS" if all_ok else "FAIL"))
    _emit(args, payload, "\n".join(lines))
    return 0 if all_ok else 1


# -- bench -----------------------------------------------------------------------------


@dataclass
class BenchResult:
    ns: list
    l: int
    reps: int
    user_upload_s: float
    server_s: list  # mean aggregation seconds per n
    customer_s: list  # mean decrypt+verify seconds per n
    slope: float = 0.0
    intercept: float = 0.0
    r2: float = 0.0
    customer_ratio: float = 0.0
    customer_kangaroo_s: list = field(default_factory=list)
    samples: dict = field(default_factory=dict)

    @property
    def linear_ok(self) -> bool:
        return self.r2 > 0.95

    @property
    def constant_ok(self) -> bool:
        return self.customer_ratio < 1.5


def linear_fit(xs, ys) -> tuple[float, float, float]:
    slope, intercept = statistics.linear_regression(xs, ys)
    r = statistics.correlation(xs, ys)
    return slope, intercept, r * r


def run_bench(ns=BENCH_NS, l: int = 1, seed: int = 0, reps: int = 20,
              value_bound: int = 2 ** 9, aggregate_bound: int = 2 ** 18, kangaroo: bool = True) -> BenchResult:
    """Time server aggregation and customer decrypt+verify across report counts.

    The customer decrypts against the fixed configured bound with a
    precomputed table, so its cost should not depend on n. Kangaroo decrypt
    is timed alongside for information: its step count grows with the distance
    between the sum and the middle of the interval, so it drifts with n.
    Each repetition draws fresh weights so the recovered sums differ.
    """
    ns = sorted(ns)
    params = pvas.par_gen(256, l, value_bound=value_bound, aggregate_bound=aggregate_bound)
    rng = Rng(seed)
    customer = pvas.keygen_customer(params, rng)
    server = pvas.keygen_server(params, rng)
    N = rng.bytes(16)
    inputs, upload = [], []
    for _ in range(ns[-1]):
        user = pvas.keygen_user(params, rng)
        data = [rng.below(value_bound) for _ in range(l)]
        t0 = time.perf_counter()
        cb, hs, rk = pvas.sig_enc(params, user, customer.public, N, data, rng)
        prove(statement_for(params, N, customer.public, user.public, cb, hs, rk),
              witness_for(user, data, cb, hs), rng)
        upload.append(time.perf_counter() - t0)
        inputs.append((cb.public(), hs.public(), rk))
    max_w = max(1, (aggregate_bound - 1) // ((value_bound - 1) * ns[-1]))
    bound = aggregate_bound - 1
    for hj in params.hs:
        dlog.precompute_table(hj, bound)  # one-off customer setup, outside the timed region
    server_t = {n: [] for n in ns}
    cust_t = {n: [] for n in ns}
    kang_t = {n: [] for n in ns}
    for _ in range(reps):
        for n in ns:
            ws = [1 + rng.below(min(max_w, 3)) for _ in range(n)]
            t0 = time.perf_counter()
            agg = pvas.aggregate(params, server, inputs[:n], ws)
            server_t[n].append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            result = pvas.decrypt(params, customer, agg, bound, method="table")
            ok = pvas.verify(params, customer, server.public, N, agg, result)
            cust_t[n].append(time.perf_counter() - t0)
            if not ok:
                raise AssertionError(f"verify rejected an honest aggregate at n={n}")
            if kangaroo:
                t0 = time.perf_counter()
                pvas.decrypt(params, customer, agg, bound)
                pvas.verify(params, customer, server.public, N, agg, result)
                kang_t[n].append(time.perf_counter() - t0)
    res = BenchResult(ns, l, reps, statistics.fmean(upload),
                      [statistics.fmean(server_t[n]) for n in ns],
                      [statistics.fmean(cust_t[n]) for n in ns],
                      samples={"server": server_t, "customer": cust_t})
    if kangaroo:
        res.customer_kangaroo_s = [statistics.fmean(kang_t[n]) for n in ns]
    res.slope, res.intercept, res.r2 = linear_fit(ns, res.server_s)
    res.customer_ratio = max(res.customer_s) / min(res.customer_s)
    return res


def cmd_bench(args) -> int:
    ns = [int(x) for x in args.ns.split(",")] if args.ns else list(BENCH_NS)
    if ns != sorted(ns) or len(set(ns)) != len(ns) or len(ns) < 2:
        print("bench: --ns must be at least two ascending distinct values", file=sys.stderr)
        return 2
    res = run_bench(ns, args.l or 1, args.seed or 0, args.reps)
    lines = [f"bench l={res.l} reps={res.reps}",
             f"user sig_enc+prove mean: {res.user_upload_s * 1e3:.2f} ms",
             f"{'n':>6} {'server agg (ms)':>16} {'customer dec+verify (ms)':>26}"]
    kang = res.customer_kangaroo_s or [float("nan")] * len(res.ns)
    lines[-1] += f" {'kangaroo dec+verify (ms)':>26}"
    for n, s, c, k in zip(res.ns, res.server_s, res.customer_s, kang):
        lines.append(f"{n:>6} {s * 1e3:>16.2f} {c * 1e3:>26.2f} {k * 1e3:>26.2f}")
    lines.append(f"server fit: {res.slope * 1e3:.3f} ms/report + {res.intercept * 1e3:.2f} ms, "
                 f"R^2 = {res.r2:.4f}  ({'PASS' if res.linear_ok else 'FAIL'} > 0.95)")
    lines.append(f"customer max/min = {res.customer_ratio:.3f}  ({'PASS' if res.constant_ok else 'FAIL'} < 1.5)")
    lines.append("reference (context only, other hardware): "
                 + ", ".join(f"{k} {v} ms" for k, v in REFERENCE_MS.items()))
    payload = {"ns": res.ns, "l": res.l, "reps": res.reps, "user_upload_s": res.user_upload_s,
               "server_s": res.server_s, "customer_s": res.customer_s, "slope": res.slope,
               "intercept": res.intercept, "r2": res.r2, "customer_ratio": res.customer_ratio,
               "customer_kangaroo_s": res.customer_kangaroo_s,
               "reference_ms": REFERENCE_MS}
    _emit(args, payload, "\n".join(lines))
    return 0 if res.linear_ok and res.constant_ok else 1


# -- ingest / replay ------------------------------------------------------------------


def cmd_ingest(args) -> int:
    try:
        values = ingest(args.csv, args.column, args.scale, args.bound)
    except (IngestError, OSError) as exc:
        print(f"ingest error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    lines = [f"{len(values)} readings from {args.csv} column {args.column!r} at scale {args.scale}"]
    lines.append(" ".join(str(v) for v in values))
    _emit(args, {"scale": args.scale, "column": args.column, "values": values}, "\n".join(lines))
    return 0


def state_digest(chain: ch.Chain) -> str:
    return hashlib.sha256(chain.state_bytes()).hexdigest()


def cmd_replay(args) -> int:
    try:
        with open(args.log) as fh:
            chain = ch.replay(fh)
    except (ch.ReplayMismatch, codec.CodecError, gm.GroupError, ValueError, OSError) as exc:
        print(f"replay failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    digest = state_digest(chain)
    lines = [f"replayed {chain.height} blocks, {len(chain.contract.tasks)} task(s)", f"state digest {digest}"]
    for N, rec in chain.contract.tasks.items():
        lines.append(f"task {N.hex()} {rec.state.name} accepted={len(rec.au)} reported={len(rec.ru)}")
    ok = args.expect is None or args.expect == digest
    if args.expect is not None:
        lines.append("digest " + ("matches" if ok else f"DIFFERS from expected {args.expect}"))
    _emit(args, {"height": chain.height, "digest": digest, "ledger": chain.ledger.snapshot()}, "\n".join(lines))
    return 0 if ok else 1


# -- entry point -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="faircrowd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_default=None):
        sp.add_argument("--seed", type=int, default=seed_default)
        sp.add_argument("--out", help="also write machine-readable JSON here")
        return sp

    k = common(sub.add_parser("keygen", help="generate key pairs"), 0)
    k.add_argument("--role", choices=("customer", "user", "server"), default="user")
    k.add_argument("--count", type=int, default=1)
    k.add_argument("--l", type=int, default=1)
    k.add_argument("--with-secret", action="store_true", help="include secret scalars in --out")
    k.set_defaults(func=cmd_keygen)

    s = common(sub.add_parser("simulate", help="run a four-phase scenario"))
    s.add_argument("--scenario", help=f"scenario YAML (default {DEFAULT_SCENARIO})")
    s.add_argument("--n", type=int)
    s.add_argument("--l", type=int)
    s.add_argument("--log", help="write the chain log here")
    s.set_defaults(func=cmd_simulate)

    a = common(sub.add_parser("attack-suite", help="run every attack scenario"), 0)
    a.add_argument("--n", type=int, default=4)
    a.set_defaults(func=cmd_attack_suite)

    b = common(sub.add_parser("bench", help="timing table and scaling fit"), 0)
    b.add_argument("--ns", help="comma-separated report counts (default 10,20,40,80,160)")
    b.add_argument("--n", dest="ns", help=argparse.SUPPRESS)
    b.add_argument("--l", type=int, default=1)
    b.add_argument("--reps", type=int, default=20)
    b.set_defaults(func=cmd_bench)

    i = common(sub.add_parser("ingest", help="scale CSV readings to integers"))
    i.add_argument("csv")
    i.add_argument("--column", default="pm25")
    i.add_argument("--scale", type=int, default=DEFAULT_SCALE)
    i.add_argument("--bound", type=int, default=None, help="exclusive upper bound on scaled values")
    i.set_defaults(func=cmd_ingest)

    r = common(sub.add_parser("replay", help="replay a chain log and print the state digest"))
    r.add_argument("log")
    r.add_argument("--expect", help="exit non-zero unless the digest equals this")
    r.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
