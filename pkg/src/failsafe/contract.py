"""Per-user multi-signature FailSafe vault contract.

A factory deploys one contract instance per user. Wallets enroll by
granting the contract token approvals and registering qMig migration
intents. Asset-moving operations (intercept, rebalance, withdraw) and
configuration changes execute only under a threshold of distinct signer
authorizations over a replay-protected digest.

Destinations are structurally restricted: intercepts pull into the
contract itself, withdrawals and rebalances move only between the
contract and an enrolled wallet.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable

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
from .ledger import (
    Approve,
    ContractCall,
    ExecutionContext,
    Ledger,
    RevertError,
    Transaction,
    UNLIMITED,
    UnknownMethod,
    sign_transaction,
)
from .qmig import TransferIntentSource, build_intent_digest


class InvalidThresholds(RevertError):
    pass


class InvalidPolicy(RevertError):
    pass


class AlreadyEnrolled(RevertError):
    pass


class NotEnrolled(RevertError):
    pass


class InsufficientSignatures(RevertError):
    pass


class UnknownSigner(RevertError):
    pass


class ReplayedAuthorization(RevertError):
    pass


class UnknownOperation(RevertError):
    pass


class CustodianUnavailable(Exception):
    """The key custodian holds no key for the requested role."""


class OperationKind(str, Enum):
    INTERCEPT = "intercept"
    REBALANCE = "rebalance"
    WITHDRAW = "withdraw"
    UPDATE_CONFIG = "updateConfig"


@dataclass(frozen=True)
class PolicyConfig:
    """User-level custody policy: target hot fraction and spend-rate cap."""

    hot_fraction_target: Fraction
    hot_fraction_tolerance: Fraction
    max_value_per_window: int
    window_length: int

    def __post_init__(self):
        if not 0 <= self.hot_fraction_target <= 1:
            raise ValueError(f"hot fraction target {self.hot_fraction_target} outside [0, 1]")
        if self.hot_fraction_tolerance < 0:
            raise ValueError("hot fraction tolerance must be non-negative")
        if self.max_value_per_window < 0:
            raise ValueError("window value cap must be non-negative")
        if self.window_length < 1:
            raise ValueError("window length must be at least one block")

    def to_tuple(self) -> tuple:
        return (
            self.hot_fraction_target.numerator,
            self.hot_fraction_target.denominator,
            self.hot_fraction_tolerance.numerator,
            self.hot_fraction_tolerance.denominator,
            self.max_value_per_window,
            self.window_length,
        )

    @classmethod
    def from_tuple(cls, data: tuple) -> "PolicyConfig":
        tn, td, on, od, cap, window = data
        return cls(Fraction(tn, td), Fraction(on, od), cap, window)


@dataclass
class MultisigConfig:
    signers: tuple[Address, ...]
    thresholds: dict[OperationKind, int]

    def validate(self) -> None:
        if not self.signers:
            raise InvalidThresholds("signer set must not be empty")
        if len(set(self.signers)) != len(self.signers):
            raise InvalidThresholds("signer addresses must be distinct")
        for op in OperationKind:
            n = self.thresholds.get(op)
            if n is None:
                raise InvalidThresholds(f"no threshold configured for {op.value}")
            if not 1 <= n <= len(self.signers):
                raise InvalidThresholds(
                    f"threshold {n} for {op.value} outside 1..{len(self.signers)}"
                )

    @classmethod
    def default(cls, signers: Iterable[Address]) -> "MultisigConfig":
        # interception and rebalancing stay single-signature so automated
        # services can act alone; withdrawals need independent approval
        config = cls(
            tuple(signers),
            {
                OperationKind.INTERCEPT: 1,
                OperationKind.REBALANCE: 1,
                OperationKind.WITHDRAW: 2,
                OperationKind.UPDATE_CONFIG: 2,
            },
        )
        config.validate()
        return config


@dataclass
class EnrolledWallet:
    wallet: Address
    policy: PolicyConfig
    tokens: tuple[str, ...]
    dest_chain_id: int
    dest_address: Address
    enrolled_at: int


@dataclass(frozen=True)
class FailSafeAccount:
    """Snapshot view of one enrolled wallet binding."""

    contract_address: Address
    owner: str
    hot_wallet: Address
    cold_policy: PolicyConfig
    enrolled_at: int


class KeyCustodian:
    """In-memory stand-in for enclave key custody: role -> signing key."""

    def __init__(self):
        self._keys: dict[str, KeyPair] = {}

    def add_role(self, role: str, key: KeyPair) -> None:
        if role in self._keys:
            raise ValueError(f"role {role!r} already provisioned")
        self._keys[role] = key

    def has_role(self, role: str) -> bool:
        return role in self._keys

    def key_for(self, role: str) -> KeyPair:
        key = self._keys.get(role)
        if key is None:
            raise CustodianUnavailable(f"no custodian key for role {role!r}")
        return key

    def address_of(self, role: str) -> Address:
        return self.key_for(role).address

    def sign_as(self, role: str, digest: bytes) -> RecoverableSignature:
        return sign(self.key_for(role), digest)


class FailSafeContract:
    def __init__(
        self,
        ledger: Ledger,
        key: KeyPair,
        owner: str,
        config: MultisigConfig,
        qmig_address: Address,
    ):
        config.validate()
        self.ledger = ledger
        self.key = key
        self.address = key.address
        self.owner = owner
        self.config = config
        self.qmig_address = qmig_address
        self.enrollments: dict[Address, EnrolledWallet] = {}
        # contract -> wallet migration intents built at enrollment, kept so
        # the custodian can later prove the inflow route to qMig
        self.outbound_intents: dict[Address, tuple[TransferIntentSource, RecoverableSignature]] = {}
        self._consumed: set[bytes] = set()
        self._auth_sequence = 0

    # -- authorization ------------------------------------------------------------

    def authorization_digest(self, op: OperationKind, op_args: tuple, nonce: int) -> bytes:
        body = encode_value(
            (self.ledger.chain_id, bytes(self.address), op.value, op_args, nonce)
        )
        return keccak256(b"FS-AUTH" + body)

    def next_auth_nonce(self) -> int:
        """Client-side convention: monotone nonces; the consumed-digest set
        is the actual replay protection."""
        nonce = self._auth_sequence
        self._auth_sequence += 1
        return nonce

    def authorize(
        self, op: OperationKind, op_args: tuple, nonce: int, keys: Iterable[KeyPair]
    ) -> tuple[bytes, ...]:
        digest = self.authorization_digest(op, op_args, nonce)
        return tuple(sign(key, digest).to_bytes() for key in keys)

    # -- contract-call entry point --------------------------------------------------

    def call(self, method: str, args: tuple, ctx: ExecutionContext):
        if method == "enroll":
            return self._enroll(args, ctx)
        if method == "execute":
            op_name, op_args, nonce, sig_blobs = args
            return self._execute(str(op_name), tuple(op_args), int(nonce), sig_blobs, ctx)
        raise UnknownMethod(f"FailSafe contract has no method {method!r}")

    def _enroll(self, args: tuple, ctx: ExecutionContext) -> None:
        policy_tuple, tokens, dest_chain_id, dest_address, intent_a_digest = args
        wallet = ctx.sender
        if wallet in self.enrollments:
            raise AlreadyEnrolled(f"wallet {wallet} already enrolled with {self.owner}")
        try:
            policy = PolicyConfig.from_tuple(tuple(policy_tuple))
        except (ValueError, TypeError) as exc:
            raise InvalidPolicy(str(exc)) from exc
        record = EnrolledWallet(
            wallet=wallet,
            policy=policy,
            tokens=tuple(str(t) for t in tokens),
            dest_chain_id=int(dest_chain_id),
            dest_address=Address(dest_address),
            enrolled_at=ctx.height,
        )
        self.enrollments[wallet] = record
        ctx.record_undo(lambda: self.enrollments.pop(wallet, None))

        # (a) the wallet's own migration intent, digest built client-side;
        # the enrolling wallet signed this very transaction, so its key is
        # exposed on chain and the registry warning applies
        ctx.call_contract(
            self.qmig_address, "registerTransferIntent", (bytes(intent_a_digest), True)
        )
        # (b) contract -> wallet intent so post-inflection custody releases
        # count toward the wallet's permitted amount
        source_b = TransferIntentSource(
            self.ledger.chain_id, self.address, self.ledger.chain_id, wallet
        )
        sig_b, digest_b = build_intent_digest(source_b, self.key)
        self.outbound_intents[wallet] = (source_b, sig_b)
        ctx.record_undo(lambda: self.outbound_intents.pop(wallet, None))
        ctx.call_contract(self.qmig_address, "registerTransferIntent", (digest_b, False))

        ctx.emit("Enrolled", {"user": self.owner, "wallet": wallet})

    def _execute(
        self, op_name: str, op_args: tuple, nonce: int, sig_blobs, ctx: ExecutionContext
    ) -> None:
        try:
            op = OperationKind(op_name)
        except ValueError as exc:
            raise UnknownOperation(f"no operation named {op_name!r}") from exc
        digest = self.authorization_digest(op, op_args, nonce)
        if digest in self._consumed:
            raise ReplayedAuthorization(f"authorization for {op.value} nonce {nonce} already used")

        signer_set = set(self.config.signers)
        valid: dict[Address, None] = {}
        unknown_present = False
        for blob in sig_blobs:
            try:
                recovered = recover_signer(digest, RecoverableSignature.from_bytes(bytes(blob)))
            except (RecoveryError, ValueError):
                unknown_present = True
                continue
            if recovered in signer_set:
                valid[recovered] = None
            else:
                unknown_present = True
        threshold = self.config.thresholds[op]
        if len(valid) < threshold:
            if unknown_present:
                raise UnknownSigner(
                    f"{len(valid)} of {threshold} required signers; "
                    "submission includes signatures from outside the signer set"
                )
            raise InsufficientSignatures(f"{len(valid)} of {threshold} required signers")

        self._consumed.add(digest)
        ctx.record_undo(lambda: self._consumed.discard(digest))

        if op is OperationKind.INTERCEPT:
            self._op_intercept(op_args, ctx)
        elif op is OperationKind.REBALANCE:
            self._op_rebalance(op_args, ctx)
        elif op is OperationKind.WITHDRAW:
            self._op_withdraw(op_args, ctx)
        else:
            self._op_update_config(op_args, ctx)
        ctx.emit("MultisigExecuted", {"op": op.value, "sigs": len(valid)})

    # -- operations -----------------------------------------------------------------

    def _enrolled(self, wallet_bytes: bytes) -> EnrolledWallet:
        wallet = Address(wallet_bytes)
        record = self.enrollments.get(wallet)
        if record is None:
            raise NotEnrolled(f"wallet {wallet} is not enrolled with {self.owner}")
        return record

    def _op_intercept(self, op_args: tuple, ctx: ExecutionContext) -> None:
        wallet_bytes, assets = op_args
        record = self._enrolled(wallet_bytes)
        for asset_kind, token, value in assets:
            if asset_kind == "fungible":
                amount = (
                    self.ledger.balance_of(record.wallet, token) if value is None else int(value)
                )
                if amount > 0:
                    ctx.pull_with_allowance(str(token), record.wallet, amount)
            elif asset_kind == "nft":
                ctx.pull_nft(str(token), record.wallet, int(value))
            else:
                raise UnknownOperation(f"intercept cannot secure asset kind {asset_kind!r}")

    def _op_rebalance(self, op_args: tuple, ctx: ExecutionContext) -> None:
        wallet_bytes, token, delta = op_args
        record = self._enrolled(wallet_bytes)
        token = str(token)
        delta = int(delta)
        if delta > 0:
            ctx.pull_with_allowance(token, record.wallet, delta)
        elif delta < 0:
            ctx.transfer_out(token, record.wallet, -delta)
        ctx.emit("Rebalance", {"user": self.owner, "token": token, "delta": delta})

    def _op_withdraw(self, op_args: tuple, ctx: ExecutionContext) -> None:
        asset_kind, wallet_bytes, token, value = op_args
        record = self._enrolled(wallet_bytes)
        if asset_kind == "fungible":
            ctx.transfer_out(str(token), record.wallet, int(value))
        elif asset_kind == "nft":
            ctx.transfer_out_nft(str(token), record.wallet, int(value))
        else:
            raise UnknownOperation(f"withdraw cannot release asset kind {asset_kind!r}")

    def _op_update_config(self, op_args: tuple, ctx: ExecutionContext) -> None:
        (threshold_pairs,) = op_args
        new_thresholds = {
            OperationKind(str(name)): int(count) for name, count in threshold_pairs
        }
        candidate = MultisigConfig(self.config.signers, new_thresholds)
        candidate.validate()
        old = self.config
        self.config = candidate
        ctx.record_undo(lambda: setattr(self, "config", old))

    # -- views ----------------------------------------------------------------------

    def account_view(self, wallet: Address) -> FailSafeAccount:
        record = self.enrollments[wallet]
        return FailSafeAccount(
            contract_address=self.address,
            owner=self.owner,
            hot_wallet=wallet,
            cold_policy=record.policy,
            enrolled_at=record.enrolled_at,
        )


def deploy_failsafe(
    ledger: Ledger,
    owner: str,
    signers: Iterable[Address],
    thresholds: dict[OperationKind, int],
    qmig_address: Address,
    custodian: KeyCustodian,
    rng,
) -> FailSafeContract:
    """Factory: provision a contract key, register the instance on the ledger."""
    config = MultisigConfig(tuple(signers), dict(thresholds))
    config.validate()
    key = KeyPair.generate(rng)
    custodian.add_role(f"contract:{owner}", key)
    contract = FailSafeContract(ledger, key, owner, config, qmig_address)
    ledger.register_contract(contract.address, contract)
    return contract


@dataclass(frozen=True)
class EnrollmentReceipt:
    """Client-side record of an enrollment submission.

    Holds the wallet's migration intent materials; the signature must be
    kept off chain to preserve the incognito property.
    """

    contract_address: Address
    wallet: Address
    intent_source: TransferIntentSource
    intent_sig: RecoverableSignature
    intent_digest: bytes
    tx_ids: tuple[bytes, ...]


def enroll_wallet(
    ledger: Ledger,
    contract: FailSafeContract,
    hot_key: KeyPair,
    policy: PolicyConfig,
    protected_tokens: Iterable[str],
    dest_chain_id: int,
    dest_address: Address,
    gas_price: int = 1,
) -> EnrollmentReceipt:
    """Submit the enrollment transaction bundle for one hot wallet.

    Grants the contract an approval per protected token, then calls enroll,
    which registers both migration intents in the same transaction.
    """
    tokens = tuple(protected_tokens)
    nonce = ledger.next_nonce(hot_key.address)
    tx_ids = []
    for token in tokens:
        tx = sign_transaction(
            hot_key, nonce, gas_price, Approve(token, contract.address, UNLIMITED)
        )
        tx_ids.append(ledger.submit_transaction(tx))
        nonce += 1

    source_a = TransferIntentSource(
        ledger.chain_id, hot_key.address, dest_chain_id, dest_address
    )
    sig_a, digest_a = build_intent_digest(source_a, hot_key)
    enroll_tx = sign_transaction(
        hot_key,
        nonce,
        gas_price,
        ContractCall(
            contract.address,
            "enroll",
            (policy.to_tuple(), tokens, dest_chain_id, bytes(dest_address), digest_a),
        ),
    )
    tx_ids.append(ledger.submit_transaction(enroll_tx))
    return EnrollmentReceipt(
        contract_address=contract.address,
        wallet=hot_key.address,
        intent_source=source_a,
        intent_sig=sig_a,
        intent_digest=digest_a,
        tx_ids=tuple(tx_ids),
    )


def build_execute_tx(
    ledger: Ledger,
    contract: FailSafeContract,
    relayer_key: KeyPair,
    op: OperationKind,
    op_args: tuple,
    sig_blobs: tuple[bytes, ...],
    nonce: int,
    gas_price: int = 1,
) -> Transaction:
    """Wrap a signed multisig operation in a relayer-submitted transaction."""
    payload = ContractCall(
        contract.address, "execute", (op.value, op_args, nonce, sig_blobs)
    )
    return sign_transaction(
        relayer_key, ledger.next_nonce(relayer_key.address), gas_price, payload
    )
