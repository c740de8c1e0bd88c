"""Escrow contract for crowdsensing tasks.

Each task moves through::

    INIT -> CREATED -> CLAIMED -> FULFILLED -> FINISHED
                    |          \\-> UNFULFILLED -> ABORTED -> CLOSED
                    \\------------/

Customers escrow the reward at creation, users escrow a deposit on accept and
get it back when their report lands. At the end either every accepted user
reported and the reward is split among them, or the no-shows' deposits are
split among the reporters and the reward goes back to the customer after the
last timeout. Coins are integers; every transfer is between ledger accounts,
so the total supply never changes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from . import codec
from .groupmath import G1, G2


class TaskState(Enum):
    INIT = 0
    CREATED = 1
    CLAIMED = 2
    FULFILLED = 3
    FINISHED = 4
    UNFULFILLED = 5
    ABORTED = 6
    CLOSED = 7


class UserState(Enum):
    ACCEPTED = 1
    UPLOADED = 2


ALLOWED_TRANSITIONS = frozenset({
    (TaskState.INIT, TaskState.CREATED),
    (TaskState.CREATED, TaskState.CLAIMED),
    (TaskState.CLAIMED, TaskState.FULFILLED),
    (TaskState.FULFILLED, TaskState.FINISHED),
    (TaskState.CLAIMED, TaskState.UNFULFILLED),
    (TaskState.CREATED, TaskState.UNFULFILLED),
    (TaskState.UNFULFILLED, TaskState.ABORTED),
    (TaskState.ABORTED, TaskState.CLOSED),
})


class ContractError(Exception):
    @property
    def code(self) -> str:
        return type(self).__name__


class WrongState(ContractError):
    pass


class TooLate(ContractError):
    pass


class TooEarly(ContractError):
    pass


class OutOfWindow(ContractError):
    pass


class InsufficientFunds(ContractError):
    pass


class NonpositiveDeposit(ContractError):
    pass


class AlreadyAccepted(ContractError):
    pass


class Unfulfillable(ContractError):
    pass


class NotAccepted(ContractError):
    pass


class InvalidProof(ContractError):
    pass


class AlreadyUploaded(ContractError):
    pass


class SharesMismatch(ContractError):
    pass


class UnknownTask(ContractError):
    pass


class InvalidSchedule(ContractError):
    pass


class InvalidAmount(ContractError):
    pass


def escrow_account(N: bytes) -> str:
    return "escrow:" + N.hex()


class Ledger:
    """Balances keyed by account name. Amounts are non-negative integers."""

    def __init__(self, balances: dict[str, int] | None = None):
        self.balances: dict[str, int] = {}
        for k, v in (balances or {}).items():
            if not isinstance(v, int) or v < 0:
                raise InvalidAmount(f"opening balance for {k} must be a non-negative integer")
            self.balances[k] = v

    def __getitem__(self, account: str) -> int:
        return self.balances.get(account, 0)

    def total(self) -> int:
        return sum(self.balances.values())

    def transfer(self, src: str, dst: str, amount: int) -> None:
        if not isinstance(amount, int) or amount < 0:
            raise InvalidAmount(f"bad amount {amount!r}")
        if self[src] < amount:
            raise InsufficientFunds(f"{src} holds {self[src]}, needs {amount}")
        self.balances[src] = self[src] - amount
        self.balances[dst] = self[dst] + amount

    def snapshot(self) -> dict[str, int]:
        return dict(sorted(self.balances.items()))


@dataclass(frozen=True)
class RupEntry:
    user: str
    N: bytes
    sigma: G1
    e: G2
    rk: G2


@dataclass
class TaskRecord:
    customer: str
    N: bytes
    A: G2
    task: bytes
    reward: int
    T: tuple  # (T1, T2, T3, T4) block heights
    state: TaskState = TaskState.INIT
    accept: int = 0
    au: dict = field(default_factory=dict)  # identity -> deposit, accept order
    keys: dict = field(default_factory=dict)  # identity -> public key used at accept
    user_state: dict = field(default_factory=dict)
    ru: list = field(default_factory=list)
    rup: list = field(default_factory=list)
    forfeit_to_customer: int = 0

    @property
    def escrow(self) -> str:
        return escrow_account(self.N)


@dataclass(frozen=True)
class Transition:
    op: str
    actor: str
    N: bytes
    now: int
    prior: TaskState
    next: TaskState
    transfers: tuple = ()  # (src, dst, amount)


def equal_split(total: int, recipients) -> dict[str, int]:
    """``total // n`` each; the remainder goes one coin apiece to the smallest identities."""
    ids = sorted(recipients)
    if not ids:
        return {}
    q, rem = divmod(total, len(ids))
    return {u: q + (1 if k < rem else 0) for k, u in enumerate(ids)}


class Contract:
    def __init__(self, ledger: Ledger, n_min: int = 1):
        if n_min < 1:
            raise ValueError("n_min must be at least 1")
        self.ledger = ledger
        self.n_min = n_min
        self.tasks: dict[bytes, TaskRecord] = {}
        self.log: list[Transition] = []

    # -- helpers ---------------------------------------------------------------

    def _task(self, N: bytes) -> TaskRecord:
        try:
            return self.tasks[N]
        except KeyError:
            raise UnknownTask(f"no task {N.hex()}") from None

    def state_of(self, N: bytes) -> TaskState:
        rec = self.tasks.get(N)
        return rec.state if rec else TaskState.INIT

    def _move(self, rec: TaskRecord, op: str, actor: str, now: int, new: TaskState, transfers=()) -> None:
        prior = rec.state
        if (prior, new) not in ALLOWED_TRANSITIONS:
            raise AssertionError(f"illegal edge {prior.name} -> {new.name}")
        for src, dst, amount in transfers:
            self.ledger.transfer(src, dst, amount)
        rec.state = new
        self.log.append(Transition(op, actor, rec.N, now, prior, new, tuple(transfers)))

    def _pay(self, rec: TaskRecord, op: str, actor: str, now: int, transfers) -> None:
        # a transfer without a state change (deposit refunds on upload)
        for src, dst, amount in transfers:
            self.ledger.transfer(src, dst, amount)
        self.log.append(Transition(op, actor, rec.N, now, rec.state, rec.state, tuple(transfers)))

    @staticmethod
    def _window(now: int, lo: int, hi: int) -> None:
        if not lo <= now <= hi:
            raise OutOfWindow(f"time {now} outside [{lo}, {hi}]")

    # -- operations ------------------------------------------------------------

    def create(self, customer: str, N: bytes, task: bytes, A: G2, reward: int, T, now: int) -> None:
        if self.state_of(N) is not TaskState.INIT:
            raise WrongState(f"task {N.hex()} already exists")
        T = tuple(T)
        if len(T) != 4 or not T[0] < T[1] < T[2] < T[3]:
            raise InvalidSchedule(f"timeouts must satisfy T1 < T2 < T3 < T4, got {T}")
        if not isinstance(reward, int) or reward < 0:
            raise InvalidAmount(f"bad reward {reward!r}")
        if now > T[0]:
            raise TooLate(f"time {now} is past T1={T[0]}")
        if self.ledger[customer] < reward:
            raise InsufficientFunds(f"{customer} holds {self.ledger[customer]}, reward is {reward}")
        rec = TaskRecord(customer, bytes(N), A, bytes(task), reward, T)
        self.tasks[rec.N] = rec
        self._move(rec, "create", customer, now, TaskState.CREATED, [(customer, rec.escrow, reward)])
        rec.accept = 0

    def accept(self, user: str, N: bytes, deposit: int, public_key: G2, now: int) -> None:
        rec = self._task(N)
        if rec.state is not TaskState.CREATED:
            raise WrongState(f"accept needs CREATED, task is {rec.state.name}")
        self._window(now, rec.T[0], rec.T[1])
        if not isinstance(deposit, int) or deposit <= 0:
            raise NonpositiveDeposit(f"deposit {deposit!r} must be positive")
        if user in rec.au:
            raise AlreadyAccepted(f"{user} already accepted")
        if self.ledger[user] < deposit:
            raise InsufficientFunds(f"{user} holds {self.ledger[user]}, deposit is {deposit}")
        self._pay(rec, "accept", user, now, [(user, rec.escrow, deposit)])
        rec.accept += 1
        rec.user_state[user] = UserState.ACCEPTED
        rec.au[user] = deposit
        rec.keys[user] = public_key

    def claim(self, N: bytes, now: int) -> None:
        rec = self._task(N)
        if rec.state is not TaskState.CREATED:
            raise WrongState(f"claim needs CREATED, task is {rec.state.name}")
        if now != rec.T[1]:
            raise OutOfWindow(f"claim happens exactly at T2={rec.T[1]}, not {now}")
        if any(s is not UserState.ACCEPTED for s in rec.user_state.values()):
            raise WrongState("a listed user is not in ACCEPTED")
        if len(rec.au) < self.n_min:
            raise Unfulfillable(f"{len(rec.au)} accepted users, need {self.n_min}")
        self._move(rec, "claim", "chain", now, TaskState.CLAIMED)

    def upload(self, user: str, N: bytes, sigma: G1, e: G2, rk: G2, proof_valid: bool, now: int,
               public_key: G2 | None = None) -> None:
        rec = self._task(N)
        if rec.state is not TaskState.CLAIMED:
            raise WrongState(f"upload needs CLAIMED, task is {rec.state.name}")
        self._window(now, rec.T[1], rec.T[2])
        if user not in rec.au:
            raise NotAccepted(f"{user} never accepted task {N.hex()}")
        if public_key is not None and rec.keys[user] != public_key:
            raise NotAccepted(f"{user} reported with a key other than the accepted one")
        if not proof_valid:
            raise InvalidProof("consistency proof rejected")
        if user in rec.ru:
            raise AlreadyUploaded(f"{user} already reported")
        self._pay(rec, "upload", user, now, [(rec.escrow, user, rec.au[user])])
        rec.user_state[user] = UserState.UPLOADED
        rec.ru.append(user)
        rec.rup.append(RupEntry(user, rec.N, sigma, e, rk))

    def reward(self, N: bytes, now: int, shares: dict[str, int] | None = None, actor: str = "chain") -> None:
        rec = self._task(N)
        if rec.state is not TaskState.CLAIMED:
            raise WrongState(f"reward needs CLAIMED, task is {rec.state.name}")
        self._window(now, rec.T[2], rec.T[3])
        if set(rec.au) != set(rec.ru):
            raise WrongState("not every accepted user reported")
        policy = equal_split(rec.reward, rec.ru)
        if shares is not None and dict(shares) != policy:
            raise SharesMismatch("shares differ from the contract's split")
        if sum(policy.values()) != rec.reward:
            raise SharesMismatch("shares do not sum to the reward")
        self._move(rec, "reward", actor, now, TaskState.FULFILLED,
                   [(rec.escrow, u, amt) for u, amt in policy.items()])
        self._move(rec, "reward", actor, now, TaskState.FINISHED)

    def penalty(self, N: bytes, now: int, actor: str = "chain") -> None:
        rec = self._task(N)
        if rec.state is not TaskState.CLAIMED:
            raise WrongState(f"penalty needs CLAIMED, task is {rec.state.name}")
        self._window(now, rec.T[2], rec.T[3])
        reporters = set(rec.ru)
        if not reporters < set(rec.au):
            raise WrongState("penalty needs at least one accepted user without a report")
        forfeited = sum(dep for u, dep in rec.au.items() if u not in reporters)
        split = equal_split(forfeited, reporters)
        if sum(split.values()) != (forfeited if reporters else 0):
            raise SharesMismatch("redistribution does not match forfeited deposits")
        if not reporters:
            rec.forfeit_to_customer = forfeited
        self._move(rec, "penalty", actor, now, TaskState.UNFULFILLED,
                   [(rec.escrow, u, amt) for u, amt in split.items()])
        self._move(rec, "penalty", actor, now, TaskState.ABORTED)

    def refund_unfulfilled(self, N: bytes, now: int, actor: str = "chain") -> None:
        """Claim failed at T2: hand every deposit back and wait for the timer."""
        rec = self._task(N)
        if rec.state is not TaskState.CREATED:
            raise WrongState(f"refund needs CREATED, task is {rec.state.name}")
        self._window(now, rec.T[2], rec.T[3])
        self._move(rec, "refund", actor, now, TaskState.UNFULFILLED,
                   [(rec.escrow, u, dep) for u, dep in rec.au.items()])
        self._move(rec, "refund", actor, now, TaskState.ABORTED)

    def timer(self, N: bytes, now: int, actor: str = "chain") -> None:
        rec = self._task(N)
        if rec.state is not TaskState.ABORTED:
            raise WrongState(f"timer needs ABORTED, task is {rec.state.name}")
        if now <= rec.T[3]:
            raise TooEarly(f"timer fires after T4={rec.T[3]}, now {now}")
        self._move(rec, "timer", actor, now, TaskState.CLOSED,
                   [(rec.escrow, rec.customer, rec.reward + rec.forfeit_to_customer)])

    def tick(self, now: int) -> list[tuple[str, bytes, str | None]]:
        """Fire the time-driven transitions due at ``now``.

        Returns ``(op, N, error_code)`` per attempted transition.
        """
        fired = []
        for N, rec in self.tasks.items():
            T1, T2, T3, T4 = rec.T
            attempts = []
            if rec.state is TaskState.CREATED and now == T2:
                attempts.append(("claim", self.claim))
            if rec.state is TaskState.CLAIMED and T3 <= now <= T4:
                attempts.append(("reward", self.reward) if set(rec.au) == set(rec.ru) else ("penalty", self.penalty))
            if rec.state is TaskState.CREATED and T3 <= now <= T4:
                attempts.append(("refund", self.refund_unfulfilled))
            if rec.state is TaskState.ABORTED and now > T4:
                attempts.append(("timer", self.timer))
            for op, fn in attempts:
                try:
                    fn(N, now)
                    fired.append((op, N, None))
                except ContractError as exc:
                    fired.append((op, N, exc.code))
        return fired

    def escrow_balance(self, N: bytes) -> int:
        return self.ledger[escrow_account(N)]


# -- canonical encodings ---------------------------------------------------------


def _enc_ledger(w: codec.Writer, ledger: Ledger) -> None:
    items = sorted(ledger.balances.items())
    w.u32(len(items))
    for k, v in items:
        w.text(k).u64(v)


def _dec_ledger(r: codec.Reader) -> Ledger:
    return Ledger({r.text(): r.u64() for _ in range(r.u32())})


def _enc_task(w: codec.Writer, rec: TaskRecord) -> None:
    w.text(rec.customer).blob(rec.N).elem(rec.A).blob(rec.task).u64(rec.reward)
    for t in rec.T:
        w.u64(t)
    w.u8(rec.state.value).u32(rec.accept).u64(rec.forfeit_to_customer)
    w.u32(len(rec.au))
    for u, dep in rec.au.items():
        w.text(u).u64(dep).elem(rec.keys[u]).u8(rec.user_state[u].value)
    w.u32(len(rec.rup))
    for entry in rec.rup:
        w.text(entry.user).blob(entry.N).elem(entry.sigma).elem(entry.e).elem(entry.rk)


def _dec_task(r: codec.Reader) -> TaskRecord:
    rec = TaskRecord(r.text(), r.blob(), r.elem(G2), r.blob(), r.u64(), tuple(r.u64() for _ in range(4)))
    rec.state = TaskState(r.u8())
    rec.accept = r.u32()
    rec.forfeit_to_customer = r.u64()
    for _ in range(r.u32()):
        u = r.text()
        rec.au[u] = r.u64()
        rec.keys[u] = r.elem(G2)
        rec.user_state[u] = UserState(r.u8())
    for _ in range(r.u32()):
        entry = RupEntry(r.text(), r.blob(), r.elem(G1), r.elem(G2), r.elem(G2))
        rec.rup.append(entry)
        rec.ru.append(entry.user)
    return rec


def _enc_contract(w: codec.Writer, c: Contract) -> None:
    w.u32(c.n_min)
    _enc_ledger(w, c.ledger)
    w.u32(len(c.tasks))
    for rec in c.tasks.values():
        _enc_task(w, rec)


def _dec_contract(r: codec.Reader) -> Contract:
    n_min = r.u32()
    c = Contract(_dec_ledger(r), n_min)
    for _ in range(r.u32()):
        rec = _dec_task(r)
        c.tasks[rec.N] = rec
    return c


codec.register(Ledger, 0x30, _enc_ledger, _dec_ledger)
codec.register(TaskRecord, 0x31, _enc_task, _dec_task)
codec.register(Contract, 0x32, _enc_contract, _dec_contract)
