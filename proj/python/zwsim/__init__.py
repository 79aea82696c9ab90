from ._zwsim import (
    InvariantViolation,
    ScenarioError,
    budget,
    checksum,
    ctr_drbg,
    derive_keys,
    discover,
    simulate,
    simulate_text,
)

__all__ = [
    "InvariantViolation",
    "ScenarioError",
    "budget",
    "checksum",
    "ctr_drbg",
    "derive_keys",
    "discover",
    "simulate",
    "simulate_text",
]
