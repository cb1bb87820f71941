"""Classical post-processing: reconciliation, hashing, authentication."""

from .auth import AuthKeyPool, wc_tag, wc_verify
from .cascade import (
    CascadeConfig,
    CascadeResult,
    LocalParityOracle,
    ParityOracle,
    ParityQuery,
    QuerySpaces,
    cascade_reconcile,
    reconcile_pair,
)
from .entropy import binary_entropy, compute_secret_length, eve_info_bound
from .toeplitz import ToeplitzSeed, toeplitz_hash, toeplitz_hash_naive

__all__ = [
    "AuthKeyPool",
    "wc_tag",
    "wc_verify",
    "CascadeConfig",
    "CascadeResult",
    "LocalParityOracle",
    "ParityOracle",
    "ParityQuery",
    "QuerySpaces",
    "cascade_reconcile",
    "reconcile_pair",
    "binary_entropy",
    "compute_secret_length",
    "eve_info_bound",
    "ToeplitzSeed",
    "toeplitz_hash",
    "toeplitz_hash_naive",
]
