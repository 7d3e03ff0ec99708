"""Genuine tripartite entanglement: W-projector witness and shareability test."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import State, StateError, as_density, party_name
from .states import w_n_state
from .steering import SteeringMatrix, classify_configuration

_W = w_n_state(3).amplitudes


@dataclass(frozen=True)
class WitnessReport:
    value: float

    @property
    def genuine(self) -> bool:
        return self.value < 0.0


def witness_value(rho: State) -> WitnessReport:
    """Tr(rho W) for W = (2/3) I - |W><W|; negative certifies genuine entanglement."""
    rho = as_density(rho)
    if rho.qubit_count != 3:
        raise StateError(f"the W witness needs a three-qubit state, got {rho.qubit_count}")
    overlap = np.real(np.vdot(_W, rho.entries @ _W))
    return WitnessReport(float(2.0 / 3.0 - overlap))


@dataclass(frozen=True)
class ShareabilityVerdict:
    genuine_by_shareability: bool
    witnessing_party: int | None

    @property
    def sr(self) -> str:
        return "Y" if self.genuine_by_shareability else "N"


def genuine_by_shareability(
    m: SteeringMatrix, sigma_k: float = 1.0, epsilon: float = 0.0
) -> ShareabilityVerdict:
    """Certify genuine tripartite entanglement when one party is steered by both others.

    The test is sufficient, not necessary: a monogamous pattern says nothing.
    For estimated values an arrow needs ``P + sigma_k * stderr < 2``; exact
    values carry zero stderr so ``sigma_k`` has no effect on them.
    """
    if m.party_count != 3:
        raise StateError(f"shareability verdict needs three parties, got {m.party_count}")
    config = classify_configuration(m, epsilon=epsilon, sigma_k=sigma_k)
    for k, deg in enumerate(config.in_degree):
        if deg >= 2:
            return ShareabilityVerdict(True, k)
    return ShareabilityVerdict(False, None)


def entanglement_report(
    rho: State | None, m: SteeringMatrix, sigma_k: float = 1.0, epsilon: float = 0.0
) -> dict:
    """Witness and shareability columns in report form."""
    verdict = genuine_by_shareability(m, sigma_k, epsilon)
    witness = witness_value(rho) if rho is not None else None
    return {
        "witness": None if witness is None else witness.value,
        "genuine_witness": None if witness is None else witness.genuine,
        "sr_verdict": verdict.sr,
        "witnessing_party": (
            None if verdict.witnessing_party is None else party_name(verdict.witnessing_party)
        ),
    }
