"""Single-node blockchain simulation.

The node validates every submitted transaction on arrival (consistency proofs
for reports, contract preconditions for everything), applies accepted ones to
the contract, and seals both accepted and rejected transactions into the block
being assembled. Block height is the only clock: a transaction is judged at
the height of the block it lands in. Time-driven contract transitions run
right after that block's user transactions and are recorded in it as events
sent by ``"chain"``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Iterator

from . import codec
from . import groupmath as gm
from .contract import Contract, ContractError, Ledger, TaskRecord
from .groupmath import G2
from .pvas import CipherBundle, HomSig, PublicParams, ResignKey, par_gen
from .sigma import ConsistencyProof, PkStatement, verify_pk

SYSTEM = "chain"
EVENT_OPS = ("claim", "reward", "penalty", "refund", "timer")


class TxKind(Enum):
    CREATE = 1
    ACCEPT = 2
    REPORT = 3
    EVENT = 4


class TxStatus(Enum):
    PENDING = 0
    ACCEPTED = 1
    REJECTED = 2


def address(public_key: G2) -> str:
    """Account identity bound to a public key."""
    return hashlib.sha256(gm.encode_element(public_key)).hexdigest()[:40]


@dataclass(frozen=True)
class CreatePayload:
    N: bytes
    task: bytes
    A: G2
    reward: int
    T: tuple


@dataclass(frozen=True)
class AcceptPayload:
    N: bytes
    U: G2
    deposit: int


@dataclass(frozen=True)
class ReportPayload:
    N: bytes
    U: G2
    cipher: CipherBundle
    homsig: HomSig
    rk: ResignKey
    proof: ConsistencyProof


@dataclass(frozen=True)
class EventPayload:
    op: str
    N: bytes
    shares: tuple | None = None  # ((identity, amount), ...)


_PAYLOADS = {TxKind.CREATE: CreatePayload, TxKind.ACCEPT: AcceptPayload,
             TxKind.REPORT: ReportPayload, TxKind.EVENT: EventPayload}


@dataclass(frozen=True)
class Transaction:
    kind: TxKind
    sender: str
    payload: object
    status: TxStatus = TxStatus.PENDING
    reason: str = ""

    @property
    def accepted(self) -> bool:
        return self.status is TxStatus.ACCEPTED

    def unjudged(self) -> "Transaction":
        return replace(self, status=TxStatus.PENDING, reason="")


@dataclass(frozen=True)
class Block:
    height: int
    transactions: tuple


@dataclass(frozen=True)
class Genesis:
    l: int
    value_bound: int
    aggregate_bound: int
    n_min: int
    balances: tuple  # ((account, amount), ...)


@dataclass
class SignatureIndex:
    """Per task, per user: every (sigma, e) accepted on chain."""
    entries: dict = field(default_factory=dict)

    def add(self, N: bytes, user: str, sigma, e) -> None:
        self.entries.setdefault(N, {}).setdefault(user, []).append((sigma, e))

    def get(self, N: bytes, user: str) -> list:
        return list(self.entries.get(N, {}).get(user, []))

    def count(self, N: bytes, user: str) -> int:
        return len(self.entries.get(N, {}).get(user, []))


@dataclass(frozen=True)
class StorageReport:
    N: bytes
    accepted: int
    reported: int
    l: int
    on_chain: int
    off_chain: int


class Chain:
    def __init__(self, params: PublicParams, balances: dict[str, int], n_min: int = 1,
                 verifier: Callable[[PkStatement, ConsistencyProof], bool] = verify_pk):
        self.params = params
        self.genesis = Genesis(params.l, params.value_bound, params.aggregate_bound, n_min,
                               tuple(sorted(balances.items())))
        self.contract = Contract(Ledger(dict(balances)), n_min)
        self.sig_index = SignatureIndex()
        self.blocks: list[Block] = [Block(0, ())]
        self.pending: list[Transaction] = []
        self._verify = verifier

    @property
    def height(self) -> int:
        return self.blocks[-1].height

    @property
    def now(self) -> int:
        """Height of the block being assembled; submissions are judged at this time."""
        return self.height + 1

    @property
    def ledger(self) -> Ledger:
        return self.contract.ledger

    def task(self, N: bytes) -> TaskRecord:
        return self.contract._task(N)

    # -- submission -------------------------------------------------------------

    def submit(self, tx: Transaction) -> Transaction:
        if tx.sender == SYSTEM:
            judged = replace(tx, status=TxStatus.REJECTED, reason="ReservedSender")
        else:
            try:
                self._apply(tx, self.now)
                judged = replace(tx, status=TxStatus.ACCEPTED, reason="")
            except ContractError as exc:
                judged = replace(tx, status=TxStatus.REJECTED, reason=exc.code)
        self.pending.append(judged)
        return judged

    def _apply(self, tx: Transaction, now: int) -> None:
        p = tx.payload
        if not isinstance(p, _PAYLOADS[tx.kind]):
            raise _Rejected("MalformedPayload")
        c = self.contract
        if tx.kind is TxKind.CREATE:
            if tx.sender != address(p.A):
                raise _Rejected("KeyMismatch")
            c.create(tx.sender, p.N, p.task, p.A, p.reward, p.T, now)
        elif tx.kind is TxKind.ACCEPT:
            if tx.sender != address(p.U):
                raise _Rejected("KeyMismatch")
            c.accept(tx.sender, p.N, p.deposit, p.U, now)
        elif tx.kind is TxKind.REPORT:
            rec = c._task(p.N)
            if tx.sender != address(p.U):
                raise _Rejected("KeyMismatch")
            if p.cipher.l != self.params.l:
                raise _Rejected("DimensionMismatch")
            st = report_statement(self.params, rec.A, p)
            ok = self._verify(st, p.proof)
            c.upload(tx.sender, p.N, p.homsig.sigma, p.homsig.e, p.rk.rk, ok, now, public_key=p.U)
            self.sig_index.add(p.N, tx.sender, p.homsig.sigma, p.homsig.e)
        else:
            if p.op not in EVENT_OPS:
                raise _Rejected("UnknownOperation")
            if p.op == "claim":
                c.claim(p.N, now)
            elif p.op == "reward":
                c.reward(p.N, now, dict(p.shares) if p.shares is not None else None, actor=tx.sender)
            elif p.op == "penalty":
                c.penalty(p.N, now, actor=tx.sender)
            elif p.op == "refund":
                c.refund_unfulfilled(p.N, now, actor=tx.sender)
            else:
                c.timer(p.N, now, actor=tx.sender)

    # -- clock ------------------------------------------------------------------

    def advance_block(self) -> Block:
        height = self.height + 1
        txs = list(self.pending)
        self.pending = []
        for op, N, err in self.contract.tick(height):
            status = TxStatus.REJECTED if err else TxStatus.ACCEPTED
            txs.append(Transaction(TxKind.EVENT, SYSTEM, EventPayload(op, N), status, err or ""))
        block = Block(height, tuple(txs))
        self.blocks.append(block)
        return block

    def advance_to(self, height: int) -> None:
        while self.height < height:
            self.advance_block()

    # -- queries ----------------------------------------------------------------

    def accepted_reports(self, N: bytes) -> list[Transaction]:
        txs = [tx for b in self.blocks for tx in b.transactions] + self.pending
        return [tx for tx in txs if tx.kind is TxKind.REPORT and tx.accepted and tx.payload.N == N]

    def storage_report(self, N: bytes) -> StorageReport:
        rec = self.contract._task(N)
        on_chain = len(codec.encode(rec))
        off_chain = sum(offchain_bytes(tx.payload) for tx in self.accepted_reports(N))
        return StorageReport(N, len(rec.au), len(rec.ru), self.params.l, on_chain, off_chain)

    def state_bytes(self) -> bytes:
        """Canonical encoding of contract state, ledger and signature index."""
        return codec.encode(self.contract) + codec.encode(self.sig_index)

    # -- log export / replay ----------------------------------------------------

    def export_log(self) -> list[str]:
        lines = ["genesis " + codec.encode(self.genesis).hex()]
        for b in self.blocks[1:]:
            lines.append(f"block {b.height}")
            lines.extend("tx " + codec.encode(tx).hex() for tx in b.transactions)
        return lines

    def write_log(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("\n".join(self.export_log()) + "\n")


class _Rejected(ContractError):
    """Node-level rejection that is not a contract precondition."""

    def __init__(self, code: str):
        super().__init__(code)
        self._code = code

    @property
    def code(self) -> str:
        return self._code


class ReplayMismatch(Exception):
    pass


def report_statement(params: PublicParams, A: G2, p: ReportPayload) -> PkStatement:
    return PkStatement(params, p.N, A, p.U, tuple(p.cipher.c), tuple(p.cipher.d), p.homsig.W,
                       p.homsig.e, p.homsig.sigma, p.rk.rk)


def offchain_bytes(p: ReportPayload) -> int:
    """What the server keeps per report: ciphertext, re-sign key, W and the proof."""
    return (len(codec.encode(p.cipher)) + len(codec.encode(p.rk.rk))
            + len(codec.encode(p.homsig.W)) + len(codec.encode(p.proof)))


def parse_log(lines: Iterable[str]) -> tuple[Genesis, list[tuple[int, list[Transaction]]]]:
    it: Iterator[str] = (ln.strip() for ln in lines)
    genesis = None
    blocks: list[tuple[int, list[Transaction]]] = []
    for lineno, line in enumerate(it, 1):
        if not line:
            continue
        tag, _, rest = line.partition(" ")
        if tag == "genesis":
            genesis = codec.decode(bytes.fromhex(rest), Genesis)
        elif tag == "block":
            blocks.append((int(rest), []))
        elif tag == "tx":
            if not blocks:
                raise ReplayMismatch(f"line {lineno}: transaction before first block marker")
            blocks[-1][1].append(codec.decode(bytes.fromhex(rest), Transaction))
        else:
            raise ReplayMismatch(f"line {lineno}: unknown record {tag!r}")
    if genesis is None:
        raise ReplayMismatch("log has no genesis record")
    return genesis, blocks


def replay(lines: Iterable[str], params: PublicParams | None = None) -> Chain:
    """Rebuild a chain from its log, re-running every validation.

    Raises :class:`ReplayMismatch` if any verdict or time-driven event differs
    from what the log recorded.
    """
    genesis, blocks = parse_log(lines)
    if params is None:
        params = par_gen(256, genesis.l, value_bound=genesis.value_bound,
                         aggregate_bound=genesis.aggregate_bound)
    chain = Chain(params, dict(genesis.balances), genesis.n_min)
    for height, txs in blocks:
        if height != chain.height + 1:
            raise ReplayMismatch(f"block {height} does not follow {chain.height}")
        for tx in txs:
            if tx.sender == SYSTEM:
                continue
            judged = chain.submit(tx.unjudged())
            if (judged.status, judged.reason) != (tx.status, tx.reason):
                raise ReplayMismatch(f"block {height}: verdict {judged.status.name}/{judged.reason} "
                                     f"!= logged {tx.status.name}/{tx.reason}")
        block = chain.advance_block()
        if [codec.encode(t) for t in block.transactions] != [codec.encode(t) for t in txs]:
            raise ReplayMismatch(f"block {height} differs after replay")
    return chain


# -- encodings ---------------------------------------------------------------------


def _enc_payload(w: codec.Writer, kind: TxKind, p) -> None:
    if kind is TxKind.CREATE:
        w.blob(p.N).blob(p.task).elem(p.A).u64(p.reward)
        for t in p.T:
            w.u64(t)
    elif kind is TxKind.ACCEPT:
        w.blob(p.N).elem(p.U).u64(p.deposit)
    elif kind is TxKind.REPORT:
        w.blob(p.N).elem(p.U)
        codec.write_value(w, p.cipher)
        codec.write_value(w, p.homsig)
        w.elem(p.rk.rk)
        codec.write_value(w, p.proof)
    else:
        w.text(p.op).blob(p.N)
        if p.shares is None:
            w.u8(0)
        else:
            w.u8(1).u32(len(p.shares))
            for who, amount in p.shares:
                w.text(who).u64(amount)


def _dec_payload(r: codec.Reader, kind: TxKind):
    if kind is TxKind.CREATE:
        return CreatePayload(r.blob(), r.blob(), r.elem(G2), r.u64(), tuple(r.u64() for _ in range(4)))
    if kind is TxKind.ACCEPT:
        return AcceptPayload(r.blob(), r.elem(G2), r.u64())
    if kind is TxKind.REPORT:
        return ReportPayload(r.blob(), r.elem(G2), codec.read_value(r, CipherBundle),
                             codec.read_value(r, HomSig), ResignKey(r.elem(G2)),
                             codec.read_value(r, ConsistencyProof))
    op, N = r.text(), r.blob()
    flag = r.u8()
    if flag not in (0, 1):
        raise codec.MalformedEncoding("bad shares flag")
    shares = None if flag == 0 else tuple((r.text(), r.u64()) for _ in range(r.u32()))
    return EventPayload(op, N, shares)


def _enc_tx(w: codec.Writer, tx: Transaction) -> None:
    w.u8(tx.kind.value).text(tx.sender).u8(tx.status.value).text(tx.reason)
    _enc_payload(w, tx.kind, tx.payload)


def _dec_tx(r: codec.Reader) -> Transaction:
    try:
        kind = TxKind(r.u8())
        sender = r.text()
        status = TxStatus(r.u8())
    except ValueError as exc:
        raise codec.MalformedEncoding(str(exc)) from exc
    reason = r.text()
    return Transaction(kind, sender, _dec_payload(r, kind), status, reason)


def _enc_block(w: codec.Writer, b: Block) -> None:
    w.u64(b.height).u32(len(b.transactions))
    for tx in b.transactions:
        _enc_tx(w, tx)


def _enc_genesis(w: codec.Writer, g: Genesis) -> None:
    w.u16(g.l).u64(g.value_bound).u64(g.aggregate_bound).u32(g.n_min).u32(len(g.balances))
    for k, v in g.balances:
        w.text(k).u64(v)


def _dec_genesis(r: codec.Reader) -> Genesis:
    l, vb, ab, n_min = r.u16(), r.u64(), r.u64(), r.u32()
    return Genesis(l, vb, ab, n_min, tuple((r.text(), r.u64()) for _ in range(r.u32())))


def _enc_sigindex(w: codec.Writer, idx: SignatureIndex) -> None:
    w.u32(len(idx.entries))
    for N in sorted(idx.entries):
        users = idx.entries[N]
        w.blob(N).u32(len(users))
        for u in sorted(users):
            w.text(u).u32(len(users[u]))
            for sigma, e in users[u]:
                w.elem(sigma).elem(e)


def _dec_sigindex(r: codec.Reader) -> SignatureIndex:
    idx = SignatureIndex()
    for _ in range(r.u32()):
        N = r.blob()
        for _ in range(r.u32()):
            u = r.text()
            for _ in range(r.u32()):
                idx.add(N, u, r.elem(gm.G1), r.elem(G2))
    return idx


codec.register(Transaction, 0x20, _enc_tx, _dec_tx)
codec.register(Block, 0x21, _enc_block,
               lambda r: Block(r.u64(), tuple(_dec_tx(r) for _ in range(r.u32()))))
codec.register(Genesis, 0x22, _enc_genesis, _dec_genesis)
codec.register(SignatureIndex, 0x23, _enc_sigindex, _dec_sigindex)
