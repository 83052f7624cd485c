"""Example systems: forced Duffing oscillator, coupled pendula, forced rigid
body and the buckled-beam mode truncation.

Each system registers under a string id for the command-line front end.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Tuple

from . import beam, duffing, pendula, rigidbody

__all__ = ["SystemInfo", "SYSTEMS", "get_system", "beam", "duffing", "pendula", "rigidbody"]


@dataclass(frozen=True)
class SystemInfo:
    """Registry entry describing one example system."""

    id: str
    dimension: int
    families: Tuple[str, ...]
    parameters: Tuple[str, ...]
    description: str

    def to_dict(self) -> dict:
        d = asdict(self)
        d["families"] = list(self.families)
        d["parameters"] = list(self.parameters)
        return d


SYSTEMS = (
    SystemInfo("duffing", 3, duffing.FAMILIES, ("a", "beta", "delta", "omega"),
               "periodically forced Duffing oscillator (autonomized)"),
    SystemInfo("pendula", 6, ("q++", "q+-", "q-+", "q--"), ("omega0", "I"),
               "two pendula coupled through a harmonic oscillator, action-angle form"),
    SystemInfo("rigidbody", 4, ("p1+", "p1-", "p2+", "p2-", "p3+", "p3-"),
               ("I1", "I2", "I3", "beta0", "beta1", "beta2", "beta3", "preset"),
               "periodically forced rigid body (autonomized)"),
    SystemInfo("beam", 6, ("gamma1", "gamma2"), ("omega1", "omega2", "beta1", "beta2", "c"),
               "three-mode buckled beam near the saddle-centre"),
)


def get_system(system_id: str) -> SystemInfo:
    for s in SYSTEMS:
        if s.id == system_id:
            return s
    raise KeyError(system_id)
