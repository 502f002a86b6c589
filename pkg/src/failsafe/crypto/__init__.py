"""Cryptographic primitives: Keccak-256, recoverable ECDSA, Lamport OTS."""

from .keccak import keccak256
from .lamport import (
    KeyExhausted,
    PqKeychain,
    PqKeyPair,
    PqPublicKey,
    PqSignature,
    pq_sign,
    pq_verify,
)
from .quantum import QuantumOracle
from .secp256k1 import (
    Address,
    KeyPair,
    RecoverableSignature,
    RecoveryError,
    derive_address,
    recover_signer,
    sign,
    signer_matches,
)

__all__ = [
    "Address",
    "KeyExhausted",
    "KeyPair",
    "PqKeychain",
    "PqKeyPair",
    "PqPublicKey",
    "PqSignature",
    "QuantumOracle",
    "RecoverableSignature",
    "RecoveryError",
    "derive_address",
    "keccak256",
    "pq_sign",
    "pq_verify",
    "recover_signer",
    "sign",
    "signer_matches",
]
