"""Attribute-based secure-zone advisories for firearms.

Submodules: :mod:`policy` (access trees), :mod:`groups` and :mod:`abe`
(CP-ABE), :mod:`primitives` (suite 0x01), :mod:`protocol` (CA / SZA /
firearm pipeline), :mod:`simulator` and :mod:`cli`.
"""

from .policy import parse_policy, satisfies, serialize_policy
from .protocol import (
    AdvisoryOutcome,
    Outcome,
    assess,
    ca_setup,
    compose_zone_message,
    create_sza,
    firearm_register,
    parse_zone_message,
    sza_register,
)

__version__ = "0.1.0"

__all__ = [
    "AdvisoryOutcome",
    "Outcome",
    "assess",
    "ca_setup",
    "compose_zone_message",
    "create_sza",
    "firearm_register",
    "parse_policy",
    "parse_zone_message",
    "satisfies",
    "serialize_policy",
    "sza_register",
]
