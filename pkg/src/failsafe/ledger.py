"""Event-sourced EVM-like ledger with a gas-price-ordered mempool.

Single chain instance: accounts with nonces, native currency, fungible and
NFT token contracts with approvals, a public mempool plus a private relay
with an exceptions list, and block building with revert semantics. All
mutation flows through the owner (the simulation scheduler); subscribers
observe ordered event streams.

Gas is a pure priority number; nothing is charged. Transactions with
future nonces wait in the pool, reverted transactions consume their nonce,
and stale ones are dropped at selection time.
"""

from __future__ import annotations

import logging
from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Union

from .crypto import (
    Address,
    KeyPair,
    RecoverableSignature,
    RecoveryError,
    keccak256,
    recover_signer,
    sign,
)
from .encoding import encode_value

logger = logging.getLogger(__name__)

NATIVE = "native"
UNLIMITED = None  # allowance value meaning "never decremented"

EXECUTED = "Executed"


# ---------------------------------------------------------------------------
# Errors

class BadSignature(Exception):
    """Transaction signature does not recover to the stated sender."""


class StaleNonce(Exception):
    """Transaction nonce is below the sender's account nonce."""


class FutureHeight(Exception):
    """Query references a block height that has not been built."""


class RevertError(Exception):
    """Base class for failures that revert a transaction.

    The revert reason recorded on chain is the subclass name, so names
    here are part of the observable format.
    """

    @property
    def reason(self) -> str:
        return type(self).__name__


class InsufficientBalance(RevertError):
    pass


class InsufficientAllowance(RevertError):
    pass


class NotOwner(RevertError):
    pass


class UnknownToken(RevertError):
    pass


class WrongTokenKind(RevertError):
    pass


class UnknownContract(RevertError):
    pass


class UnknownMethod(RevertError):
    pass


class PrivateRelayStatus(str, Enum):
    ACCEPTED = "Accepted"
    FILTERED_BY_EXCEPTIONS_LIST = "FilteredByExceptionsList"


# ---------------------------------------------------------------------------
# Events

@dataclass(frozen=True)
class LedgerEvent:
    """One append-only history record; replaying all of them rebuilds state."""

    height: int
    kind: str
    data: tuple[tuple[str, object], ...]

    def get(self, key: str, default=None):
        for k, v in self.data:
            if k == key:
                return v
        return default

    def format_line(self) -> str:
        parts = [f"height={self.height}", f"kind={self.kind}"]
        for key, value in self.data:
            parts.append(f"{key}={_format_value(value)}")
        return " ".join(parts)


def _format_value(value) -> str:
    if value is UNLIMITED:
        return "unlimited"
    if isinstance(value, Address):
        return str(value)
    if isinstance(value, (bytes, bytearray)):
        return bytes(value).hex()
    return str(value)


def _event(height: int, kind: str, fields: dict) -> LedgerEvent:
    return LedgerEvent(height, kind, tuple(fields.items()))


# ---------------------------------------------------------------------------
# Transactions

@dataclass(frozen=True)
class NativeTransfer:
    to: Address
    amount: int

    def canonical(self) -> tuple:
        return (1, bytes(self.to), self.amount)


@dataclass(frozen=True)
class TokenTransfer:
    token: str
    to: Address
    amount: int

    def canonical(self) -> tuple:
        return (2, self.token, bytes(self.to), self.amount)


@dataclass(frozen=True)
class TokenTransferFrom:
    token: str
    owner: Address
    to: Address
    amount: int

    def canonical(self) -> tuple:
        return (3, self.token, bytes(self.owner), bytes(self.to), self.amount)


@dataclass(frozen=True)
class Approve:
    token: str
    spender: Address
    amount: int | None  # UNLIMITED for never-decremented approvals

    def canonical(self) -> tuple:
        return (4, self.token, bytes(self.spender), self.amount)


@dataclass(frozen=True)
class NftTransfer:
    token: str
    to: Address
    token_id: int

    def canonical(self) -> tuple:
        return (5, self.token, bytes(self.to), self.token_id)


@dataclass(frozen=True)
class ContractCall:
    contract: Address
    method: str
    args: tuple

    def canonical(self) -> tuple:
        return (6, bytes(self.contract), self.method, self.args)


Payload = Union[
    NativeTransfer, TokenTransfer, TokenTransferFrom, Approve, NftTransfer, ContractCall
]


def compute_tx_digest(sender: Address, nonce: int, gas_price: int, payload: Payload) -> bytes:
    body = encode_value((bytes(sender), nonce, gas_price, payload.canonical()))
    return keccak256(b"FS-TX" + body)


@dataclass(frozen=True)
class Transaction:
    sender: Address
    nonce: int
    gas_price: int
    payload: Payload
    signature: RecoverableSignature

    @cached_property
    def digest(self) -> bytes:
        return compute_tx_digest(self.sender, self.nonce, self.gas_price, self.payload)

    @cached_property
    def tx_id(self) -> bytes:
        return keccak256(b"FS-TXID" + self.digest + self.signature.to_bytes())

    @property
    def tx_id_hex(self) -> str:
        return "0x" + self.tx_id.hex()


def sign_transaction(key: KeyPair, nonce: int, gas_price: int, payload: Payload) -> Transaction:
    sender = key.address
    digest = compute_tx_digest(sender, nonce, gas_price, payload)
    return Transaction(sender, nonce, gas_price, payload, sign(key, digest))


# ---------------------------------------------------------------------------
# Chain data

@dataclass(frozen=True)
class Block:
    height: int
    parent_digest: bytes
    txs: tuple[tuple[Transaction, str], ...]  # (transaction, outcome string)

    @cached_property
    def digest(self) -> bytes:
        body = encode_value(
            (self.height, self.parent_digest, tuple((tx.tx_id, out) for tx, out in self.txs))
        )
        return keccak256(b"FS-BLOCK" + body)


@dataclass
class TokenState:
    token_id: str
    kind: str  # "fungible" | "nft"
    balances: dict
    allowances: dict  # (owner, spender) -> int | UNLIMITED
    nft_owners: dict  # token_id int -> Address
    operators: dict  # (owner, operator) -> bool

    @classmethod
    def create(cls, token_id: str, kind: str) -> "TokenState":
        if kind not in ("fungible", "nft"):
            raise ValueError(f"token kind must be fungible or nft, got {kind!r}")
        return cls(token_id, kind, {}, {}, {}, {})


@dataclass
class _PoolEntry:
    tx: Transaction
    seq: int
    private: bool


class ExecutionContext:
    """Privileged-but-scoped ledger access handed to a contract during a call.

    Asset moves are scoped to the contract's own address (its balance, or
    allowances/operator rights granted TO it), so a buggy contract cannot
    spend third-party funds.
    """

    def __init__(self, ledger: "Ledger", contract_address: Address, tx: Transaction, height: int):
        self.ledger = ledger
        self.contract_address = contract_address
        self.tx = tx
        self.height = height

    @property
    def sender(self) -> Address:
        return self.tx.sender

    def emit(self, kind: str, fields: dict) -> None:
        self.ledger._buffer_event(_event(self.height, kind, fields))

    def record_undo(self, undo: Callable[[], None]) -> None:
        """Register rollback for contract-local state touched in this call."""
        self.ledger._record_undo(undo)

    def transfer_out(self, token: str, to: Address, amount: int) -> None:
        """Spend the contract's own fungible or native balance."""
        self.ledger._fungible_move(token, self.contract_address, to, amount, self.height)

    def pull_with_allowance(self, token: str, owner: Address, amount: int) -> None:
        """transferFrom owner to the contract under a prior approval."""
        self.ledger._fungible_move_from(
            token, owner, self.contract_address, self.contract_address, amount, self.height
        )

    def pull_nft(self, token: str, owner: Address, token_id: int) -> None:
        """Move an NFT from owner to the contract under operator approval."""
        self.ledger._nft_move_by_operator(
            token, owner, self.contract_address, self.contract_address, token_id, self.height
        )

    def transfer_out_nft(self, token: str, to: Address, token_id: int) -> None:
        """Release an NFT the contract itself owns."""
        self.ledger._nft_move(token, self.contract_address, to, token_id, self.height)

    def call_contract(self, address: Address, method: str, args: tuple) -> object:
        """Nested contract-to-contract call within the same transaction."""
        target = self.ledger.contracts.get(address)
        if target is None:
            raise UnknownContract(f"no contract at {address}")
        nested = ExecutionContext(self.ledger, address, self.tx, self.height)
        return target.call(method, args, nested)


class Ledger:
    def __init__(self, chain_id: int = 1):
        self.chain_id = chain_id
        self.height = 0
        self.events: list[LedgerEvent] = []
        genesis = Block(0, b"\x00" * 32, ())
        self.blocks: list[Block] = [genesis]
        self.native_balances: dict[Address, int] = {}
        self.tokens: dict[str, TokenState] = {}
        self.nonces: dict[Address, int] = {}
        self.exceptions_list: list[Address] = []
        self.contracts: dict[Address, object] = {}
        self.block_observers: list[Callable[[Block, list[LedgerEvent]], None]] = []
        self._pool: list[_PoolEntry] = []
        self._private_pool: list[_PoolEntry] = []
        self._seq = 0
        self._pending_queue: list[Transaction] = []
        # (token, address) -> parallel (heights, balances) checkpoint lists
        self._checkpoints: dict[tuple[str, Address], tuple[list[int], list[int]]] = {}
        # (token, address) -> parallel (heights, cumulative outflow) lists
        self._outflow: dict[tuple[str, Address], tuple[list[int], list[int]]] = {}
        self._journal: list[Callable[[], None]] | None = None
        self._event_buffer: list[LedgerEvent] = []
        self._touched: dict[tuple[str, Address], None] = {}

    # -- setup ---------------------------------------------------------------

    def create_token(self, token_id: str, kind: str = "fungible") -> None:
        if token_id == NATIVE:
            raise ValueError(f"token id {NATIVE!r} is reserved for the native currency")
        if token_id in self.tokens:
            raise ValueError(f"token {token_id!r} already exists")
        self.tokens[token_id] = TokenState.create(token_id, kind)

    def genesis_allocate(self, to: Address, token: str, amount: int) -> None:
        if self.height != 0 or self.blocks[0].txs:
            raise ValueError("genesis allocations only before the first built block")
        if token == NATIVE:
            self.native_balances[to] = self.native_balances.get(to, 0) + amount
        else:
            state = self._fungible_state(token)
            state.balances[to] = state.balances.get(to, 0) + amount
        self._append_checkpoint(token, to, 0, self.balance_of(to, token))
        self.events.append(_event(0, "Genesis", {"to": to, "token": token, "amount": amount}))

    def genesis_allocate_nft(self, to: Address, token: str, token_id: int) -> None:
        if self.height != 0 or self.blocks[0].txs:
            raise ValueError("genesis allocations only before the first built block")
        state = self._nft_state(token)
        if token_id in state.nft_owners:
            raise ValueError(f"nft {token}#{token_id} already allocated")
        state.nft_owners[token_id] = to
        self.events.append(
            _event(0, "Genesis", {"to": to, "token": token, "token_id": token_id})
        )

    def register_contract(self, address: Address, contract: object) -> None:
        if address in self.contracts:
            raise ValueError(f"contract already registered at {address}")
        self.contracts[address] = contract

    # -- reads ---------------------------------------------------------------

    def balance_of(self, addr: Address, token: str = NATIVE) -> int:
        if token == NATIVE:
            return self.native_balances.get(addr, 0)
        return self._fungible_state(token).balances.get(addr, 0)

    def allowance_of(self, token: str, owner: Address, spender: Address):
        return self._fungible_state(token).allowances.get((owner, spender), 0)

    def nft_owner_of(self, token: str, token_id: int) -> Address | None:
        return self._nft_state(token).nft_owners.get(token_id)

    def is_operator(self, token: str, owner: Address, operator: Address) -> bool:
        return self._nft_state(token).operators.get((owner, operator), False)

    def total_supply(self, token: str) -> int:
        if token == NATIVE:
            return sum(self.native_balances.values())
        return sum(self._fungible_state(token).balances.values())

    def next_nonce(self, addr: Address) -> int:
        """Account nonce plus queued transactions, for chained submissions."""
        pending = sum(
            1
            for entry in self._pool + self._private_pool
            if entry.tx.sender == addr
        )
        return self.nonces.get(addr, 0) + pending

    def pending_for(self, addr: Address) -> list[Transaction]:
        return [entry.tx for entry in self._pool if entry.tx.sender == addr]

    def balance_at(self, addr: Address, token: str, height: int) -> int:
        """Balance as of the end of the given block height."""
        if height > self.height:
            raise FutureHeight(f"height {height} > current {self.height}")
        point = self._checkpoints.get((token, addr))
        if point is None:
            return 0
        heights, balances = point
        idx = bisect_right(heights, height)
        return balances[idx - 1] if idx else 0

    def withdrawals_since(self, addr: Address, token: str, height: int) -> int:
        """Total Executed outgoing transfer amounts in blocks after height."""
        if height > self.height:
            raise FutureHeight(f"height {height} > current {self.height}")
        point = self._outflow.get((token, addr))
        if point is None:
            return 0
        heights, cums = point
        total = cums[-1] if cums else 0
        idx = bisect_right(heights, height)
        at = cums[idx - 1] if idx else 0
        return total - at

    # -- exceptions list -----------------------------------------------------

    def exceptions_digest(self, addr: Address) -> bytes:
        return keccak256(b"FS-EXC" + encode_value((self.chain_id, bytes(addr))))

    def add_exception(self, addr: Address, signature: RecoverableSignature) -> None:
        """Owner-signed opt-in: only the address holder can list themselves."""
        try:
            signer = recover_signer(self.exceptions_digest(addr), signature)
        except RecoveryError as exc:
            raise BadSignature(str(exc)) from exc
        if signer != addr:
            raise BadSignature("exceptions-list registration must be signed by the address owner")
        if addr not in self.exceptions_list:
            self.exceptions_list.append(addr)
            self.events.append(_event(self.height, "ExceptionAdded", {"address": addr}))

    # -- submission ----------------------------------------------------------

    def _validate(self, tx: Transaction) -> None:
        try:
            signer = recover_signer(tx.digest, tx.signature)
        except RecoveryError as exc:
            raise BadSignature(str(exc)) from exc
        if signer != tx.sender:
            raise BadSignature(f"signature recovers to {signer}, not {tx.sender}")
        if tx.nonce < self.nonces.get(tx.sender, 0):
            raise StaleNonce(f"nonce {tx.nonce} < account nonce {self.nonces.get(tx.sender, 0)}")

    def submit_transaction(self, tx: Transaction) -> bytes:
        self._validate(tx)
        self._pool.append(_PoolEntry(tx, self._seq, private=False))
        self._seq += 1
        self._pending_queue.append(tx)
        return tx.tx_id

    def submit_private_transaction(self, tx: Transaction) -> PrivateRelayStatus:
        """Relay directly to the block builder; no pending event is emitted."""
        self._validate(tx)
        if tx.sender in self.exceptions_list:
            logger.info("private tx from %s dropped: exceptions list", tx.sender)
            return PrivateRelayStatus.FILTERED_BY_EXCEPTIONS_LIST
        self._private_pool.append(_PoolEntry(tx, self._seq, private=True))
        self._seq += 1
        return PrivateRelayStatus.ACCEPTED

    def take_pending(self) -> list[Transaction]:
        """Drain the pending-transaction event stream (mempool subscribers)."""
        drained = self._pending_queue
        self._pending_queue = []
        return drained

    # -- block building ------------------------------------------------------

    def build_block(self) -> Block:
        executing = self.height + 1
        events_start = len(self.events)
        candidates = self._pool + self._private_pool
        self._pool = []
        self._private_pool = []
        executed: list[tuple[Transaction, str]] = []

        while True:
            best = None
            remaining: list[_PoolEntry] = []
            for entry in candidates:
                account_nonce = self.nonces.get(entry.tx.sender, 0)
                if entry.tx.nonce < account_nonce:
                    continue  # stale: superseded within this block or earlier
                remaining.append(entry)
                if entry.tx.nonce == account_nonce:
                    if best is None or (entry.tx.gas_price, -entry.seq) > (
                        best.tx.gas_price,
                        -best.seq,
                    ):
                        best = entry
            candidates = remaining
            if best is None:
                break
            candidates.remove(best)
            outcome = self._execute(best.tx, executing)
            executed.append((best.tx, outcome))

        # future-nonce transactions wait for later blocks
        for entry in candidates:
            (self._private_pool if entry.private else self._pool).append(entry)

        block = Block(executing, self.blocks[-1].digest, tuple(executed))
        self.blocks.append(block)
        self.height = executing

        for token, addr in self._touched:
            self._append_checkpoint(token, addr, executing, self.balance_of(addr, token))
        self._touched.clear()

        new_events = self.events[events_start:]
        for observer in self.block_observers:
            observer(block, new_events)
        return block

    def _execute(self, tx: Transaction, height: int) -> str:
        self.nonces[tx.sender] = tx.nonce + 1
        self._journal = []
        self._event_buffer = []
        try:
            self._apply_payload(tx, height)
        except RevertError as err:
            for undo in reversed(self._journal):
                undo()
            self._event_buffer = []
            outcome = f"Reverted:{err.reason}"
            kind, fields = _payload_event_fields(tx)
            fields["outcome"] = outcome
            self.events.append(_event(height, kind, fields))
        else:
            outcome = EXECUTED
            self.events.extend(self._event_buffer)
            self._accumulate_outflow(self._event_buffer, height)
            self._event_buffer = []
        finally:
            self._journal = None
        return outcome

    def _apply_payload(self, tx: Transaction, height: int) -> None:
        p = tx.payload
        if isinstance(p, NativeTransfer):
            self._fungible_move(NATIVE, tx.sender, p.to, p.amount, height)
        elif isinstance(p, TokenTransfer):
            self._fungible_move(p.token, tx.sender, p.to, p.amount, height)
        elif isinstance(p, TokenTransferFrom):
            self._fungible_move_from(p.token, p.owner, p.to, tx.sender, p.amount, height)
        elif isinstance(p, Approve):
            self._apply_approve(tx.sender, p, height)
        elif isinstance(p, NftTransfer):
            self._nft_move(p.token, tx.sender, p.to, p.token_id, height)
        elif isinstance(p, ContractCall):
            contract = self.contracts.get(p.contract)
            if contract is None:
                raise UnknownContract(f"no contract at {p.contract}")
            ctx = ExecutionContext(self, p.contract, tx, height)
            contract.call(p.method, p.args, ctx)
            self._buffer_event(
                _event(
                    height,
                    "Call",
                    {"from": tx.sender, "contract": p.contract, "method": p.method,
                     "outcome": EXECUTED},
                )
            )
        else:  # pragma: no cover - payload union is closed
            raise TypeError(f"unknown payload {type(p).__name__}")

    # -- state mutation (journaled during execution) ---------------------------

    def _record_undo(self, undo: Callable[[], None]) -> None:
        if self._journal is not None:
            self._journal.append(undo)

    def _buffer_event(self, ev: LedgerEvent) -> None:
        if self._journal is not None:
            self._event_buffer.append(ev)
        else:
            self.events.append(ev)

    def _fungible_state(self, token: str) -> TokenState:
        if token == NATIVE:
            raise UnknownToken("native currency is not a token contract")
        state = self.tokens.get(token)
        if state is None:
            raise UnknownToken(f"unknown token {token!r}")
        if state.kind != "fungible":
            raise WrongTokenKind(f"token {token!r} is not fungible")
        return state

    def _nft_state(self, token: str) -> TokenState:
        state = self.tokens.get(token)
        if state is None:
            raise UnknownToken(f"unknown token {token!r}")
        if state.kind != "nft":
            raise WrongTokenKind(f"token {token!r} is not an NFT contract")
        return state

    def _balances_for(self, token: str) -> dict:
        if token == NATIVE:
            return self.native_balances
        return self._fungible_state(token).balances

    def _set_balance(self, token: str, addr: Address, value: int, height: int) -> None:
        balances = self._balances_for(token)
        old = balances.get(addr, 0)
        if self._journal is not None:
            self._journal.append(lambda: balances.__setitem__(addr, old))
            balances[addr] = value
            self._touched[(token, addr)] = None
        else:
            balances[addr] = value
            self._append_checkpoint(token, addr, height, value)

    def _fungible_move(self, token: str, frm: Address, to: Address, amount: int,
                       height: int, kind: str = "Transfer", extra: dict | None = None) -> None:
        if amount < 0:
            raise ValueError("negative amounts are not representable")
        balances = self._balances_for(token)
        if balances.get(frm, 0) < amount:
            raise InsufficientBalance(
                f"{frm} holds {balances.get(frm, 0)} {token}, needs {amount}"
            )
        self._set_balance(token, frm, balances.get(frm, 0) - amount, height)
        self._set_balance(token, to, balances.get(to, 0) + amount, height)
        fields = {"from": frm, "to": to, "token": token, "amount": amount}
        if extra:
            fields.update(extra)
        fields["outcome"] = EXECUTED
        self._buffer_event(_event(height, kind, fields))

    def _fungible_move_from(self, token: str, owner: Address, to: Address,
                            spender: Address, amount: int, height: int) -> None:
        state = self._fungible_state(token)
        allowance = state.allowances.get((owner, spender), 0)
        if allowance is not UNLIMITED and allowance < amount:
            raise InsufficientAllowance(
                f"{spender} allowed {allowance} of {owner}'s {token}, needs {amount}"
            )
        if allowance is not UNLIMITED:
            self._set_allowance(state, owner, spender, allowance - amount)
        self._fungible_move(token, owner, to, amount, height, extra={"spender": spender})

    def _set_allowance(self, state: TokenState, owner: Address, spender: Address,
                       value) -> None:
        key = (owner, spender)
        old = state.allowances.get(key, 0)
        if self._journal is not None:
            self._journal.append(lambda: state.allowances.__setitem__(key, old))
        state.allowances[key] = value

    def _apply_approve(self, owner: Address, p: Approve, height: int) -> None:
        state = self.tokens.get(p.token)
        if state is None:
            raise UnknownToken(f"unknown token {p.token!r}")
        if state.kind == "fungible":
            self._set_allowance(state, owner, p.spender, p.amount)
        else:
            # NFT approval grants collection-wide operator rights
            key = (owner, p.spender)
            old = state.operators.get(key, False)
            self._record_undo(lambda: state.operators.__setitem__(key, old))
            state.operators[key] = True
        self._buffer_event(
            _event(
                height,
                "Approval",
                {"from": owner, "to": p.spender, "token": p.token,
                 "amount": p.amount if state.kind == "fungible" else UNLIMITED,
                 "outcome": EXECUTED},
            )
        )

    def _nft_move(self, token: str, frm: Address, to: Address, token_id: int,
                  height: int) -> None:
        state = self._nft_state(token)
        if state.nft_owners.get(token_id) != frm:
            raise NotOwner(f"{frm} does not own {token}#{token_id}")
        old = state.nft_owners.get(token_id)
        self._record_undo(lambda: state.nft_owners.__setitem__(token_id, old))
        state.nft_owners[token_id] = to
        self._buffer_event(
            _event(
                height,
                "NftTransfer",
                {"from": frm, "to": to, "token": token, "token_id": token_id,
                 "outcome": EXECUTED},
            )
        )

    def _nft_move_by_operator(self, token: str, owner: Address, to: Address,
                              operator: Address, token_id: int, height: int) -> None:
        state = self._nft_state(token)
        if not state.operators.get((owner, operator), False):
            raise InsufficientAllowance(
                f"{operator} is not an approved operator for {owner} on {token}"
            )
        self._nft_move(token, owner, to, token_id, height)

    # -- bridge hooks (scheduler-level, outside block execution) ---------------

    def apply_bridge_lock(self, source: Address, escrow: Address, token: str,
                          amount: int) -> None:
        """Debit the source into escrow as part of an atomic bridge step.

        Runs between blocks as part of the tick that produces the next
        block, so events and checkpoints land at height + 1. Recording at
        the already-built height would silently rewrite historical
        balances, including the inflection-time balance.
        """
        if self._journal is not None:
            raise RuntimeError("bridge lock cannot run inside transaction execution")
        balances = self._balances_for(token)
        if balances.get(source, 0) < amount:
            raise InsufficientBalance(
                f"{source} holds {balances.get(source, 0)} {token}, needs {amount}"
            )
        self._fungible_move(token, source, escrow, amount, self.height + 1, kind="BridgeLock")

    def append_info_event(self, kind: str, fields: dict, height: int | None = None) -> None:
        """Record a non-balance event (bridge outcomes, exception listings)."""
        self.events.append(_event(self.height if height is None else height, kind, fields))

    # -- replay support --------------------------------------------------------

    def _append_checkpoint(self, token: str, addr: Address, height: int, value: int) -> None:
        heights, balances = self._checkpoints.setdefault((token, addr), ([], []))
        heights.append(height)
        balances.append(value)

    def _accumulate_outflow(self, events: list[LedgerEvent], height: int) -> None:
        for ev in events:
            if ev.kind != "Transfer" or ev.get("outcome") != EXECUTED:
                continue
            token = ev.get("token")
            frm = ev.get("from")
            amount = ev.get("amount")
            heights, cums = self._outflow.setdefault((token, frm), ([], []))
            if heights and heights[-1] == height:
                cums[-1] += amount
            else:
                heights.append(height)
                cums.append((cums[-1] if cums else 0) + amount)


def _payload_event_fields(tx: Transaction) -> tuple[str, dict]:
    """Event kind and fields describing a payload, for revert records."""
    p = tx.payload
    if isinstance(p, NativeTransfer):
        return "Transfer", {"from": tx.sender, "to": p.to, "token": NATIVE, "amount": p.amount}
    if isinstance(p, TokenTransfer):
        return "Transfer", {"from": tx.sender, "to": p.to, "token": p.token, "amount": p.amount}
    if isinstance(p, TokenTransferFrom):
        return "Transfer", {
            "from": p.owner, "to": p.to, "token": p.token, "amount": p.amount,
            "spender": tx.sender,
        }
    if isinstance(p, Approve):
        return "Approval", {"from": tx.sender, "to": p.spender, "token": p.token,
                            "amount": p.amount}
    if isinstance(p, NftTransfer):
        return "NftTransfer", {"from": tx.sender, "to": p.to, "token": p.token,
                               "token_id": p.token_id}
    if isinstance(p, ContractCall):
        return "Call", {"from": tx.sender, "contract": p.contract, "method": p.method}
    raise TypeError(f"unknown payload {type(p).__name__}")
