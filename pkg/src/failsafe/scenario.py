"""Deterministic scenario runner.

A scenario file declares actors, tokens, genesis allocations, FailSafe
deployments, scripted steps, and end-state assertions. The runner builds
the world from a seed, drives the scheduler one block per tick, and
produces a report with asset-preservation metrics.

One tick: execute this block's scripted steps, deliver pending
transactions to FIS, let the balancer act, deliver committed events to
FBR, then build the block. The fixed service order is part of the
determinism contract: same file plus same seed yields a byte-identical
event log.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import yaml

from .balancer import BalancerService
from .bridge import ESCROW_ADDRESS, Bridge, BridgeTransfer, QuantumSafeLedger, pq_address
from .contract import (
    FailSafeContract,
    KeyCustodian,
    OperationKind,
    PolicyConfig,
    build_execute_tx,
    deploy_failsafe,
    enroll_wallet,
)
from .crypto import Address, KeyPair, PqKeyPair, QuantumOracle, pq_sign, sign
from .fbr import FbrConfig, RiskService
from .fis import InterceptorService
from .ledger import (
    Approve,
    ContractCall,
    Ledger,
    NATIVE,
    NativeTransfer,
    NftTransfer,
    PrivateRelayStatus,
    TokenTransfer,
    TokenTransferFrom,
    Transaction,
    UNLIMITED,
    sign_transaction,
)
from .qmig import (
    InflectionUnset,
    QmigContract,
    TransferIntentSource,
    VerifyError,
    build_intent_digest,
    inflection_digest,
    register_intent,
)

DEFAULT_CUSTODIAN_ROLES = ("intercept", "rebalance", "relayer", "guardian")
SERVICE_NAMES = ("fis", "fbr", "balancer")


class ParseError(Exception):
    """Scenario file fails schema validation."""


class UnknownActor(Exception):
    """A step or assertion references an undeclared name."""


@dataclass(frozen=True)
class Step:
    at: int
    action: str
    params: dict
    label: str | None


@dataclass
class Scenario:
    name: str
    description: str
    seed: int
    chain_id: int
    dest_chain_id: int
    run_blocks: int
    services: dict[str, bool]
    fbr_config: FbrConfig
    tokens: list[dict]
    actors: dict[str, dict]
    custodian_roles: tuple[str, ...]
    qmig_admin: str | None
    blacklist: list[dict]
    genesis: list[dict]
    failsafe: list[dict]
    at_risk: dict | None
    steps: list[Step]
    assertions: list[dict]

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ParseError(f"{path}: scenario document must be a mapping")
        return cls.from_dict(data, default_name=Path(path).stem)

    @classmethod
    def from_dict(cls, data: dict, default_name: str = "scenario") -> "Scenario":
        def need(condition: bool, message: str):
            if not condition:
                raise ParseError(message)

        steps = []
        last_at = 1
        for i, raw in enumerate(data.get("steps", [])):
            need(isinstance(raw, dict), f"step {i} must be a mapping")
            need("at" in raw and "action" in raw, f"step {i} needs 'at' and 'action'")
            at = int(raw["at"])
            need(at >= 1, f"step {i}: 'at' must be >= 1")
            need(at >= last_at, f"step {i}: steps must be sorted by 'at'")
            last_at = at
            params = {k: v for k, v in raw.items() if k not in ("at", "action", "label")}
            steps.append(Step(at, str(raw["action"]), params, raw.get("label")))

        actors = data.get("actors", {})
        need(isinstance(actors, dict) and actors, "scenario needs a non-empty 'actors' mapping")
        services = {name: True for name in SERVICE_NAMES}
        for name, enabled in (data.get("services") or {}).items():
            need(name in SERVICE_NAMES, f"unknown service {name!r}")
            services[name] = bool(enabled)

        fbr_over = data.get("fbr_config") or {}
        need(
            set(fbr_over) <= set(FbrConfig.__dataclass_fields__),
            f"unknown fbr_config keys: {sorted(set(fbr_over) - set(FbrConfig.__dataclass_fields__))}",
        )
        run_blocks = data.get("run_blocks")
        if run_blocks is None:
            run_blocks = (steps[-1].at if steps else 1) + 2

        return cls(
            name=str(data.get("name", default_name)),
            description=str(data.get("description", "")).strip(),
            seed=int(data.get("seed", 0)),
            chain_id=int(data.get("chain_id", 1)),
            dest_chain_id=int(data.get("dest_chain_id", 9001)),
            run_blocks=int(run_blocks),
            services=services,
            fbr_config=FbrConfig(**fbr_over),
            tokens=list(data.get("tokens", [])),
            actors={str(k): (v or {}) for k, v in actors.items()},
            custodian_roles=tuple(data.get("custodian_roles", DEFAULT_CUSTODIAN_ROLES)),
            qmig_admin=data.get("qmig_admin"),
            blacklist=list(data.get("blacklist", [])),
            genesis=list(data.get("genesis", [])),
            failsafe=list(data.get("failsafe", [])),
            at_risk=data.get("at_risk"),
            steps=steps,
            assertions=list(data.get("assertions", [])),
        )


@dataclass
class RunReport:
    scenario: str
    seed: int
    blocks_built: int
    assertion_results: list[tuple[bool, str]]
    assets_at_risk: int
    assets_saved: int
    assets_lost: int
    intercept_count: int
    intercept_latency_blocks: int | None
    log_lines: list[str] = field(default_factory=list)

    @property
    def assertions_passed(self) -> int:
        return sum(1 for ok, _ in self.assertion_results if ok)

    @property
    def assertions_failed(self) -> int:
        return sum(1 for ok, _ in self.assertion_results if not ok)

    @property
    def exit_code(self) -> int:
        return 0 if self.assertions_failed == 0 else 1

    def format_summary(self) -> str:
        lines = [
            f"scenario={self.scenario} seed={self.seed} blocks={self.blocks_built}",
        ]
        for ok, message in self.assertion_results:
            lines.append(f"assert {'ok' if ok else 'FAIL'}: {message}")
        lines.append(
            f"assertions passed={self.assertions_passed} failed={self.assertions_failed}"
        )
        latency = "n/a" if self.intercept_latency_blocks is None else self.intercept_latency_blocks
        lines.append(
            f"assets at_risk={self.assets_at_risk} saved={self.assets_saved} "
            f"lost={self.assets_lost} intercepts={self.intercept_count} "
            f"intercept_latency_blocks={latency}"
        )
        return "\n".join(lines)


def _policy_fraction(value) -> Fraction:
    return Fraction(str(value))


def _parse_policy(raw: dict) -> PolicyConfig:
    try:
        return PolicyConfig(
            hot_fraction_target=_policy_fraction(raw["hot_fraction_target"]),
            hot_fraction_tolerance=_policy_fraction(raw["hot_fraction_tolerance"]),
            max_value_per_window=int(raw["max_value_per_window"]),
            window_length=int(raw["window_length"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"bad policy {raw!r}: {exc}") from exc


class ScenarioRunner:
    def __init__(self, scenario: Scenario, seed: int | None = None,
                 disabled: tuple[str, ...] = ()):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.services = dict(scenario.services)
        for name in disabled:
            if name not in SERVICE_NAMES:
                raise ParseError(f"cannot disable unknown service {name!r}")
            self.services[name] = False
        self.rng = random.Random(self.seed)

        self.ledger = Ledger(chain_id=scenario.chain_id)
        self.dest_ledger = QuantumSafeLedger(chain_id=scenario.dest_chain_id)
        self.oracle = QuantumOracle()
        self.custodian = KeyCustodian()
        self.risk = RiskService(scenario.fbr_config)
        self.threat_flags: set[str] = set()
        self.actor_keys: dict[str, KeyPair] = {}
        self.actor_pq_keys: dict[str, PqKeyPair] = {}
        self.dest_keys: dict[str, PqKeyPair] = {}
        self.vaults: dict[str, FailSafeContract] = {}
        self.intents: dict[str, tuple[TransferIntentSource, object]] = {}
        self.tx_outcomes: dict[bytes, str] = {}
        self.tx_heights: dict[bytes, int] = {}
        self.labels: dict[str, Transaction] = {}
        self.private_status: dict[str, str] = {}
        self.verify_outcomes: dict[str, str] = {}
        self.bridge_outcomes: dict[str, str] = {}
        self.step_failures: list[str] = []
        self._event_cursor = 0

        self._build_world()

    # -- construction ---------------------------------------------------------

    def _build_world(self) -> None:
        sc = self.scenario
        for name, attrs in sc.actors.items():
            key = KeyPair.generate(self.rng)
            self.actor_keys[name] = key
            self.oracle.register_actor(key)
            if attrs.get("pq"):
                self.actor_pq_keys[name] = PqKeyPair.generate(self.rng)
        for role in sc.custodian_roles:
            key = KeyPair.generate(self.rng)
            self.custodian.add_role(role, key)
            self.oracle.register_actor(key)

        for token in sc.tokens:
            self.ledger.create_token(str(token["id"]), str(token.get("kind", "fungible")))

        qmig_key = KeyPair.generate(self.rng)
        admin_pq = None
        if sc.qmig_admin is not None:
            admin_pq = self.actor_pq_keys.get(sc.qmig_admin)
            if admin_pq is None:
                raise UnknownActor(f"qmig_admin {sc.qmig_admin!r} is not a pq actor")
        else:
            # an unused throwaway key: the inflection simply cannot be set
            admin_pq = PqKeyPair.generate(self.rng)
        self.qmig = QmigContract(self.ledger, qmig_key.address, admin_pq.public)
        self.ledger.register_contract(self.qmig.address, self.qmig)
        self.bridge = Bridge(self.ledger, self.dest_ledger, self.qmig)

        for deployment in sc.failsafe:
            owner = str(deployment["owner"])
            signers = [self.resolve_address(s) for s in deployment["signers"]]
            thresholds = {
                OperationKind(str(op)): int(n)
                for op, n in (deployment.get("thresholds") or {}).items()
            }
            for op in OperationKind:
                thresholds.setdefault(
                    op, 1 if op in (OperationKind.INTERCEPT, OperationKind.REBALANCE) else 2
                )
            vault = deploy_failsafe(
                self.ledger, owner, signers, thresholds, self.qmig.address,
                self.custodian, self.rng,
            )
            self.oracle.register_actor(vault.key)
            self.vaults[owner] = vault
            for enrollment in deployment.get("enrollments", []):
                wallet_name = str(enrollment["wallet"])
                hot_key = self.actor_keys.get(wallet_name)
                if hot_key is None:
                    raise UnknownActor(f"enrollment wallet {wallet_name!r} is not an actor")
                receipt = enroll_wallet(
                    self.ledger,
                    vault,
                    hot_key,
                    _parse_policy(enrollment["policy"]),
                    [str(t) for t in enrollment["tokens"]],
                    int(enrollment.get("dest_chain", sc.dest_chain_id)),
                    self.resolve_address(enrollment["dest"]),
                )
                self.intents[f"{wallet_name}:enroll"] = (
                    receipt.intent_source, receipt.intent_sig,
                )

        # genesis after contract deployment so allocations can target
        # contract addresses (pre-funded cold storage)
        for alloc in sc.genesis:
            to = self.resolve_address(alloc["to"])
            token = str(alloc["token"])
            if "token_id" in alloc:
                self.ledger.genesis_allocate_nft(to, token, int(alloc["token_id"]))
            else:
                self.ledger.genesis_allocate(to, token, int(alloc["amount"]))

        if self.services["fbr"]:
            for entry in sc.blacklist:
                self.risk.add_entry(
                    self.resolve_address(entry["address"]),
                    str(entry["category"]),
                    str(entry.get("source", "scenario")),
                )

        contracts = list(self.vaults.values())
        self.fis = (
            InterceptorService(
                self.ledger, self.risk, self.custodian, contracts, self.threat_flags
            )
            if self.services["fis"]
            else None
        )
        self.balancer = (
            BalancerService(self.ledger, self.custodian, contracts, self.threat_flags)
            if self.services["balancer"]
            else None
        )

    # -- name resolution ---------------------------------------------------------

    def resolve_address(self, alias) -> Address:
        alias = str(alias)
        if alias in self.actor_keys:
            return self.actor_keys[alias].address
        if alias.startswith("role:"):
            return self.custodian.address_of(alias[len("role:"):])
        if alias.endswith(".contract"):
            owner = alias[: -len(".contract")]
            vault = self.vaults.get(owner)
            if vault is None:
                raise UnknownActor(f"no FailSafe contract deployed for {owner!r}")
            return vault.address
        if alias.endswith("@dest"):
            return pq_address(self._dest_key(alias[: -len("@dest")]).public)
        if alias == "escrow":
            return ESCROW_ADDRESS
        if alias.startswith("0x") and len(alias) == 42:
            return Address.from_hex(alias)
        raise UnknownActor(f"cannot resolve address {alias!r}")

    def _dest_key(self, name: str) -> PqKeyPair:
        key = self.dest_keys.get(name)
        if key is None:
            key = PqKeyPair.generate(self.rng)
            self.dest_keys[name] = key
        return key

    def resolve_key(self, alias) -> KeyPair:
        alias = str(alias)
        if alias in self.actor_keys:
            return self.actor_keys[alias]
        if alias.startswith("role:"):
            return self.custodian.key_for(alias[len("role:"):])
        raise UnknownActor(f"cannot resolve signing key {alias!r}")

    def _vault_for_wallet(self, wallet: Address) -> FailSafeContract:
        for vault in self.vaults.values():
            if wallet in vault.enrollments:
                return vault
        raise UnknownActor(f"wallet {wallet} is not enrolled in any FailSafe contract")

    def resolve_intent(self, name: str) -> tuple[TransferIntentSource, object]:
        stored = self.intents.get(name)
        if stored is not None:
            return stored
        if name.endswith(":custody"):
            wallet_name = name[: -len(":custody")]
            wallet = self.resolve_address(wallet_name)
            vault = self._vault_for_wallet(wallet)
            pair = vault.outbound_intents.get(wallet)
            if pair is not None:
                return pair
        raise UnknownActor(f"no stored intent named {name!r}")

    # -- step execution --------------------------------------------------------------

    def _submit(self, step: Step, tx: Transaction) -> None:
        if step.params.get("private"):
            status = self.ledger.submit_private_transaction(tx)
            if step.label:
                self.private_status[step.label] = (
                    "FilteredByExceptionsList"
                    if status is PrivateRelayStatus.FILTERED_BY_EXCEPTIONS_LIST
                    else "Accepted"
                )
        else:
            self.ledger.submit_transaction(tx)
        if step.label:
            self.labels[step.label] = tx

    def execute_step(self, step: Step) -> None:
        p = step.params
        action = step.action
        if action == "transfer":
            signer = self.resolve_key(p["signer"])
            token = str(p.get("token", NATIVE))
            to = self.resolve_address(p["to"])
            amount = int(p["amount"])
            payload = (
                NativeTransfer(to, amount)
                if token == NATIVE
                else TokenTransfer(token, to, amount)
            )
            tx = sign_transaction(
                signer, self.ledger.next_nonce(signer.address), int(p.get("gas_price", 1)),
                payload,
            )
            self._submit(step, tx)
        elif action == "transfer_from":
            signer = self.resolve_key(p["signer"])
            payload = TokenTransferFrom(
                str(p["token"]),
                self.resolve_address(p["owner"]),
                self.resolve_address(p["to"]),
                int(p["amount"]),
            )
            tx = sign_transaction(
                signer, self.ledger.next_nonce(signer.address), int(p.get("gas_price", 1)),
                payload,
            )
            self._submit(step, tx)
        elif action == "approve":
            signer = self.resolve_key(p["signer"])
            amount = p.get("amount", "unlimited")
            payload = Approve(
                str(p["token"]),
                self.resolve_address(p["spender"]),
                UNLIMITED if amount == "unlimited" else int(amount),
            )
            tx = sign_transaction(
                signer, self.ledger.next_nonce(signer.address), int(p.get("gas_price", 1)),
                payload,
            )
            self._submit(step, tx)
        elif action == "nft_transfer":
            signer = self.resolve_key(p["signer"])
            payload = NftTransfer(
                str(p["token"]), self.resolve_address(p["to"]), int(p["token_id"])
            )
            tx = sign_transaction(
                signer, self.ledger.next_nonce(signer.address), int(p.get("gas_price", 1)),
                payload,
            )
            self._submit(step, tx)
        elif action == "quantum_steal":
            victim = self.resolve_address(p["victim"])
            key = self.oracle.derive_private(victim)
            if key is None:
                self.step_failures.append(
                    f"quantum_steal at block {step.at}: key for {p['victim']} not derivable"
                )
                return
            token = str(p.get("token", NATIVE))
            to = self.resolve_address(p["to"])
            amount = int(p["amount"])
            payload = (
                NativeTransfer(to, amount)
                if token == NATIVE
                else TokenTransfer(token, to, amount)
            )
            tx = sign_transaction(
                key, self.ledger.next_nonce(victim), int(p.get("gas_price", 1)), payload
            )
            self._submit(step, tx)
        elif action == "add_exception":
            wallet_key = self.resolve_key(p["wallet"])
            digest = self.ledger.exceptions_digest(wallet_key.address)
            self.ledger.add_exception(wallet_key.address, sign(wallet_key, digest))
        elif action == "set_inflection":
            admin_pq = self.actor_pq_keys.get(self.scenario.qmig_admin or "")
            if admin_pq is None:
                raise UnknownActor("set_inflection requires a 'qmig_admin' pq actor")
            height = int(p["height"])
            pq_sig = pq_sign(admin_pq, inflection_digest(height))
            signer = self.resolve_key(p["signer"])
            tx = sign_transaction(
                signer,
                self.ledger.next_nonce(signer.address),
                int(p.get("gas_price", 1)),
                ContractCall(
                    self.qmig.address, "setInflectionPoint", (height, pq_sig.to_bytes())
                ),
            )
            self._submit(step, tx)
        elif action == "register_intent":
            source_key = self.resolve_key(p["source"])
            source = TransferIntentSource(
                self.ledger.chain_id,
                source_key.address,
                int(p.get("dest_chain", self.scenario.dest_chain_id)),
                self.resolve_address(p["dest"]),
            )
            sig, digest = build_intent_digest(source, source_key)
            submitter = self.resolve_key(p.get("submitter", p["source"]))
            tx = register_intent(
                self.ledger, self.qmig.address, submitter, digest,
                source_address=source_key.address,
                gas_price=int(p.get("gas_price", 1)),
            )
            if step.label:
                self.labels[step.label] = tx
            if "store" in p:
                self.intents[str(p["store"])] = (source, sig)
        elif action == "make_intent":
            # sign and store an intent without ever registering it on chain
            source_key = self.resolve_key(p["source"])
            source = TransferIntentSource(
                self.ledger.chain_id,
                source_key.address,
                int(p.get("dest_chain", self.scenario.dest_chain_id)),
                self.resolve_address(p["dest"]),
            )
            sig, _ = build_intent_digest(source, source_key)
            self.intents[str(p["store"])] = (source, sig)
        elif action == "verify_intent":
            source, sig = self.resolve_intent(str(p["intent"]))
            try:
                self.qmig.verify_transfer_intent(source, sig)
                outcome = "true"
            except (VerifyError, InflectionUnset) as exc:
                outcome = type(exc).__name__
            if step.label:
                self.verify_outcomes[step.label] = outcome
        elif action == "bridge":
            source, sig = self.resolve_intent(str(p["intent"]))
            request = BridgeTransfer(
                source, str(p["token"]), int(p["amount"]), sig, self.ledger.height
            )
            try:
                self.bridge.bridge_transfer(request)
                outcome = "ok"
            except Exception as exc:
                outcome = f"error:{type(exc).__name__}"
            if step.label:
                self.bridge_outcomes[step.label] = outcome
        elif action == "withdraw":
            vault = self.vaults[str(p["owner"])]
            wallet = self.resolve_address(p["wallet"])
            asset_kind = str(p.get("asset_kind", "fungible"))
            value = int(p["amount"]) if asset_kind == "fungible" else int(p["token_id"])
            op_args = (asset_kind, bytes(wallet), str(p["token"]), value)
            nonce = vault.next_auth_nonce()
            keys = [self.resolve_key(s) for s in p["signers"]]
            sigs = vault.authorize(OperationKind.WITHDRAW, op_args, nonce, keys)
            tx = build_execute_tx(
                self.ledger, vault, self.custodian.key_for("relayer"),
                OperationKind.WITHDRAW, op_args, sigs, nonce,
                gas_price=int(p.get("gas_price", 1)),
            )
            self._submit(step, tx)
        elif action == "clear_threat":
            self.threat_flags.discard(str(p["owner"]))
        else:
            raise ParseError(f"unknown step action {action!r}")

    # -- scheduler ---------------------------------------------------------------------

    def _take_new_events(self):
        new = self.ledger.events[self._event_cursor:]
        self._event_cursor = len(self.ledger.events)
        return new

    def run(self) -> RunReport:
        sc = self.scenario
        at_risk_amount = 0
        attacker_addresses: list[Address] = []
        attacker_start = 0
        if sc.at_risk is not None:
            # snapshot at genesis, before any step or block runs
            at_risk_amount = int(sc.at_risk["amount"])
            attacker_addresses = [self.resolve_address(sc.at_risk["attacker"])]
            attacker_start = sum(
                self.ledger.balance_of(a, str(sc.at_risk["token"]))
                for a in attacker_addresses
            )

        step_index = 0
        last_block = None
        for target_height in range(1, sc.run_blocks + 1):
            while step_index < len(sc.steps) and sc.steps[step_index].at == target_height:
                self.execute_step(sc.steps[step_index])
                step_index += 1
            new_events = self._take_new_events()
            pending = self.ledger.take_pending()
            if self.fis is not None:
                if last_block is not None or new_events:
                    self.fis.on_block_events(last_block, new_events)
                self.fis.on_tick(pending)
            if self.balancer is not None:
                self.balancer.on_tick()
            if self.services["fbr"]:
                # catch the clock up first: bridge events carry the height of
                # the block this tick is about to build
                self.risk.advance_to(self.ledger.height)
                for ev in new_events:
                    self.risk.record_observation(ev)
            block = self.ledger.build_block()
            last_block = block
            for tx, outcome in block.txs:
                self.tx_outcomes[tx.tx_id] = outcome
                self.tx_heights[tx.tx_id] = block.height
                self.oracle.note_public_signer(tx.sender)
            self.oracle.advance_to(block.height)
            if self.qmig.inflection is not None and self.oracle.inflection_height is None:
                self.oracle.set_inflection(self.qmig.inflection)

        if step_index < len(sc.steps):
            raise ParseError(
                f"step at block {sc.steps[step_index].at} beyond run_blocks={sc.run_blocks}"
            )

        return self._report(at_risk_amount, attacker_addresses, attacker_start)

    # -- reporting -----------------------------------------------------------------------

    def _attacker_holdings(self, addresses: list[Address], token: str) -> int:
        total = sum(self.ledger.balance_of(a, token) for a in addresses)
        attacker = str(self.scenario.at_risk["attacker"])
        dest_key = self.dest_keys.get(attacker)
        if dest_key is not None:
            total += self.dest_ledger.balance_of(pq_address(dest_key.public), token)
        return total

    def _report(self, at_risk_amount, attacker_addresses, attacker_start) -> RunReport:
        lost = 0
        if self.scenario.at_risk is not None:
            token = str(self.scenario.at_risk["token"])
            gained = self._attacker_holdings(attacker_addresses, token) - attacker_start
            lost = min(max(gained, 0), at_risk_amount)
        saved = at_risk_amount - lost

        intercept_count = self.fis.intercept_count if self.fis is not None else 0
        latency = None
        if self.fis is not None and self.fis.intercept_records:
            _, itx, seen = self.fis.intercept_records[0]
            included = self.tx_heights.get(itx.tx_id)
            if included is not None:
                latency = included - seen

        results = [(False, failure) for failure in self.step_failures]
        for raw in self.scenario.assertions:
            results.append(self._evaluate_assertion(raw))

        return RunReport(
            scenario=self.scenario.name,
            seed=self.seed,
            blocks_built=self.ledger.height,
            assertion_results=results,
            assets_at_risk=at_risk_amount,
            assets_saved=saved,
            assets_lost=lost,
            intercept_count=intercept_count,
            intercept_latency_blocks=latency,
            log_lines=self.render_log(),
        )

    def _evaluate_assertion(self, raw: dict) -> tuple[bool, str]:
        try:
            check = str(raw["check"])
            if check == "balance":
                where = str(raw.get("ledger", "source"))
                addr = self.resolve_address(raw["address"])
                token = str(raw["token"])
                actual = (
                    self.dest_ledger.balance_of(addr, token)
                    if where == "dest"
                    else self.ledger.balance_of(addr, token)
                )
                return self._compare(raw, actual, f"balance[{where}] {raw['address']}:{token}")
            if check == "outcome":
                tx = self.labels.get(str(raw["label"]))
                actual = "not-included" if tx is None else self.tx_outcomes.get(
                    tx.tx_id, "not-included"
                )
                return self._equals(raw, actual, f"outcome[{raw['label']}]")
            if check == "private_status":
                actual = self.private_status.get(str(raw["label"]), "missing")
                return self._equals(raw, actual, f"private_status[{raw['label']}]")
            if check == "intercepts":
                count = self.fis.intercept_count if self.fis is not None else 0
                return self._compare(raw, count, "intercepts")
            if check == "rebalances":
                count = len(self.balancer.actions) if self.balancer is not None else 0
                return self._compare(raw, count, "rebalances")
            if check == "verify":
                actual = self.verify_outcomes.get(str(raw["label"]), "missing")
                return self._equals(raw, actual, f"verify[{raw['label']}]")
            if check == "bridge":
                actual = self.bridge_outcomes.get(str(raw["label"]), "missing")
                return self._equals(raw, actual, f"bridge[{raw['label']}]")
            if check == "permitted":
                actual = self.qmig.permitted_amount(
                    self.resolve_address(raw["wallet"]), str(raw["token"])
                )
                return self._compare(raw, actual, f"permitted[{raw['wallet']}:{raw['token']}]")
            if check == "registry_size":
                return self._compare(raw, len(self.qmig.registry), "registry_size")
            if check == "alerts":
                user = str(raw["user"])
                count = (
                    len(self.fis.alerts_by_user.get(user, [])) if self.fis is not None else 0
                )
                return self._compare(raw, count, f"alerts[{user}]")
            return False, f"unknown assertion check {check!r}"
        except Exception as exc:
            return False, f"assertion {raw!r} errored: {type(exc).__name__}: {exc}"

    @staticmethod
    def _equals(raw: dict, actual, label: str) -> tuple[bool, str]:
        expected = str(raw["equals"])
        ok = str(actual) == expected
        return ok, f"{label} = {actual}" + ("" if ok else f" (expected {expected})")

    @staticmethod
    def _compare(raw: dict, actual: int, label: str) -> tuple[bool, str]:
        if "equals" in raw:
            expected = int(raw["equals"])
            ok = actual == expected
            return ok, f"{label} = {actual}" + ("" if ok else f" (expected {expected})")
        if "at_least" in raw:
            bound = int(raw["at_least"])
            ok = actual >= bound
            return ok, f"{label} = {actual}" + ("" if ok else f" (expected >= {bound})")
        if "at_most" in raw:
            bound = int(raw["at_most"])
            ok = actual <= bound
            return ok, f"{label} = {actual}" + ("" if ok else f" (expected <= {bound})")
        return False, f"{label}: assertion needs equals/at_least/at_most"

    # -- log rendering ----------------------------------------------------------------------

    def render_log(self) -> list[str]:
        lines = [ev.format_line() for ev in self.ledger.events]
        lines.extend(f"chain=dest {ev.format_line()}" for ev in self.dest_ledger.events)
        if self.fis is not None:
            lines.extend(f"alert {line}" for line in self.fis.alerts)
        return lines


def run_scenario(path, seed: int | None = None, disabled: tuple[str, ...] = (),
                 out_path=None) -> RunReport:
    scenario = Scenario.load(path)
    runner = ScenarioRunner(scenario, seed=seed, disabled=disabled)
    report = runner.run()
    if out_path is not None:
        Path(out_path).write_text("\n".join(report.log_lines) + "\n", encoding="utf-8")
    return report
