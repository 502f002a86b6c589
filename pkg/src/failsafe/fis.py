"""FailSafe Interceptor Service: defensive front-running.

Watches the public mempool stream for transactions that touch enrolled
wallets. When the counterparty scores as risky or the wallet's spending
window would exceed its policy cap, FIS submits an intercept transaction
through the user's FailSafe contract at a strictly higher gas price, so
the block builder orders it first and the threatening transaction
reverts against an emptied wallet.

Private relay traffic never reaches the mempool stream, so FIS is blind
to it by construction; the exceptions list (ledger side) is the defense
for that path.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .contract import FailSafeContract, KeyCustodian, OperationKind, build_execute_tx
from .crypto import Address
from .fbr import RiskService
from .ledger import (
    Approve,
    Block,
    ContractCall,
    EXECUTED,
    Ledger,
    LedgerEvent,
    NATIVE,
    NativeTransfer,
    NftTransfer,
    TokenTransfer,
    TokenTransferFrom,
    Transaction,
)

IGNORE = "ignore"
INTERCEPT = "intercept"
ALERT = "alert"  # threat without an interceptable asset (e.g. native drain)


def intercept_gas_price(attacker_gas_price: int) -> int:
    """Strictly out-bid: 10 percent premium with a +1 floor."""
    g = attacker_gas_price
    return max((g * 11 + 9) // 10, g + 1)


@dataclass(frozen=True)
class InterceptDecision:
    action: str
    owner: str | None = None
    wallet: Address | None = None
    assets: tuple = ()  # (asset kind, token, amount-or-None | token id)
    trigger: str | None = None
    target_gas_price: int | None = None
    attacker_tx: Transaction | None = None


_IGNORE = InterceptDecision(IGNORE)


class WindowAccumulator:
    """Per-wallet ring of (height, outflow) slices over recent blocks."""

    def __init__(self):
        self._rings: dict[Address, deque] = {}

    def add(self, wallet: Address, height: int, amount: int) -> None:
        self._rings.setdefault(wallet, deque()).append((height, amount))

    def total(self, wallet: Address, current_height: int, window_length: int) -> int:
        ring = self._rings.get(wallet)
        if not ring:
            return 0
        floor = current_height - window_length + 1
        while ring and ring[0][0] < floor:
            ring.popleft()
        return sum(amount for _, amount in ring)


class InterceptorService:
    def __init__(
        self,
        ledger: Ledger,
        risk: RiskService,
        custodian: KeyCustodian,
        contracts: list[FailSafeContract],
        threat_flags: set,
    ):
        self.ledger = ledger
        self.risk = risk
        self.custodian = custodian
        self.contracts = contracts
        self.threat_flags = threat_flags
        self.window = WindowAccumulator()
        self.alerts: list[str] = []
        self.alerts_by_user: dict[str, list[str]] = {}
        self.intercept_count = 0
        self.decisions: list[InterceptDecision] = []
        # (decision, intercept tx, chain height when the threat was seen)
        self.intercept_records: list[tuple[InterceptDecision, Transaction, int]] = []

    # -- enrollment lookup -------------------------------------------------------

    def _lookup(self, addr: Address):
        for contract in self.contracts:
            record = contract.enrollments.get(addr)
            if record is not None:
                return contract, record
        return None

    # -- decision ------------------------------------------------------------------

    def on_pending_tx(self, tx: Transaction) -> InterceptDecision:
        p = tx.payload
        if isinstance(p, ContractCall):
            return _IGNORE

        found = None  # (contract, record, counterparty, assets, outflow)
        if isinstance(p, (NativeTransfer, TokenTransfer)):
            token = NATIVE if isinstance(p, NativeTransfer) else p.token
            hit = self._lookup(tx.sender)
            if hit is not None:
                contract, record = hit
                if p.to == contract.address:
                    return _IGNORE  # custody move, not a counterparty
                assets = () if token == NATIVE else (("fungible", token, None),)
                found = (contract, record, p.to, assets, p.amount)
            else:
                hit = self._lookup(p.to)
                if hit is not None:
                    contract, record = hit
                    found = (contract, record, tx.sender, (), None)
        elif isinstance(p, TokenTransferFrom):
            hit = self._lookup(p.owner)
            if hit is not None:
                contract, record = hit
                found = (
                    contract, record, tx.sender, (("fungible", p.token, None),), p.amount,
                )
            else:
                hit = self._lookup(p.to)
                if hit is not None:
                    contract, record = hit
                    found = (contract, record, tx.sender, (), None)
        elif isinstance(p, Approve):
            hit = self._lookup(tx.sender)
            if hit is not None:
                contract, record = hit
                if p.spender == contract.address or p.amount == 0:
                    return _IGNORE
                found = (contract, record, p.spender, self._approved_assets(tx.sender, p), None)
        elif isinstance(p, NftTransfer):
            hit = self._lookup(tx.sender)
            if hit is not None:
                contract, record = hit
                if p.to == contract.address:
                    return _IGNORE
                found = (contract, record, p.to, (("nft", p.token, p.token_id),), None)
            else:
                hit = self._lookup(p.to)
                if hit is not None:
                    contract, record = hit
                    found = (contract, record, tx.sender, (), None)
        if found is None:
            return _IGNORE
        contract, record, counterparty, assets, outflow = found

        trigger = None
        verdict = self.risk.risk_score(counterparty)
        if verdict.score >= self.risk.config.intercept_score_threshold:
            trigger = f"RiskScore:{verdict.score}"
        elif outflow is not None:
            projected = outflow + self.window.total(
                record.wallet, self.ledger.height, record.policy.window_length
            )
            if projected > record.policy.max_value_per_window:
                trigger = "PolicyLimit"
        if trigger is None:
            return _IGNORE
        return InterceptDecision(
            action=INTERCEPT if assets else ALERT,
            owner=contract.owner,
            wallet=record.wallet,
            assets=assets,
            trigger=trigger,
            target_gas_price=intercept_gas_price(tx.gas_price),
            attacker_tx=tx,
        )

    def _approved_assets(self, wallet: Address, p: Approve) -> tuple:
        state = self.ledger.tokens.get(p.token)
        if state is None:
            return ()
        if state.kind == "fungible":
            return (("fungible", p.token, None),)
        owned = [tid for tid, owner in state.nft_owners.items() if owner == wallet]
        return tuple(("nft", p.token, tid) for tid in owned)

    # -- acting ----------------------------------------------------------------------

    def build_intercept_tx(self, decision: InterceptDecision) -> Transaction:
        contract, _ = self._lookup(decision.wallet)
        op_args = (bytes(decision.wallet), decision.assets)
        nonce = contract.next_auth_nonce()
        sigs = contract.authorize(
            OperationKind.INTERCEPT, op_args, nonce, [self.custodian.key_for("intercept")]
        )
        return build_execute_tx(
            self.ledger,
            contract,
            self.custodian.key_for("relayer"),
            OperationKind.INTERCEPT,
            op_args,
            sigs,
            nonce,
            gas_price=decision.target_gas_price,
        )

    def notify_user(self, owner: str, line: str) -> None:
        self.alerts.append(line)
        self.alerts_by_user.setdefault(owner, []).append(line)

    def on_tick(self, pending: list[Transaction]) -> None:
        for tx in pending:
            decision = self.on_pending_tx(tx)
            if decision.action == IGNORE:
                continue
            self.decisions.append(decision)
            intercept_id = "none"
            if decision.action == INTERCEPT:
                itx = self.build_intercept_tx(decision)
                self.ledger.submit_transaction(itx)
                # the interceptor's own submission re-enters the pending
                # stream; drain it so this tick does not re-examine it
                self.ledger.take_pending()
                self.intercept_count += 1
                self.intercept_records.append((decision, itx, self.ledger.height))
                intercept_id = itx.tx_id_hex
            self.threat_flags.add(decision.owner)
            self.notify_user(
                decision.owner,
                f"user={decision.owner} trigger={decision.trigger} "
                f"attackerTx={decision.attacker_tx.tx_id_hex} interceptTx={intercept_id}",
            )

    # -- window accounting (committed events) ------------------------------------------

    def on_block_events(self, block: Block, events: list[LedgerEvent]) -> None:
        for ev in events:
            if ev.kind != "Transfer" or ev.get("outcome") != EXECUTED:
                continue
            sender = ev.get("from")
            hit = self._lookup(sender)
            if hit is None:
                continue
            contract, _ = hit
            if ev.get("to") == contract.address:
                continue  # custody moves do not consume the spending window
            self.window.add(sender, ev.height, ev.get("amount"))
