"""State families and the wave-plate preparation model.

The optical register is (polarization, path, OAM) = parties (A, B, C), with
the encoding H, U, +l -> 0 and V, D, -l -> 1.  A half-wave plate at angle
theta maps |H> -> cos 2θ|H> + sin 2θ|V> and |V> -> sin 2θ|H> - cos 2θ|V>.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import (
    DensityMatrix,
    Ket,
    State,
    StateError,
    as_density,
    state_from_dict,
)

COEFF_TOL = 1e-10


@dataclass(frozen=True)
class PrepParams:
    """Wave-plate angles in degrees, reduced modulo 180.

    ``degenerate`` is set by :func:`coefficients_to_hwp` when the second
    angle is not determined by the coefficients (β = γ = 0).
    """

    theta1: float
    theta2: float
    degenerate: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta1", float(self.theta1) % 180.0)
        object.__setattr__(self, "theta2", float(self.theta2) % 180.0)


@dataclass(frozen=True)
class CoefficientTriple:
    """Real amplitudes on |001>, |010>, |100>."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self) -> None:
        vals = (float(self.alpha), float(self.beta), float(self.gamma))
        norm2 = sum(v * v for v in vals)
        if abs(norm2 - 1.0) > COEFF_TOL:
            raise StateError(f"coefficients not normalized: sum of squares {norm2!r}")
        if any(abs(v) > 1.0 + COEFF_TOL for v in vals):
            raise StateError("coefficients must lie in [-1, 1]")
        object.__setattr__(self, "alpha", vals[0])
        object.__setattr__(self, "beta", vals[1])
        object.__setattr__(self, "gamma", vals[2])

    @classmethod
    def from_alpha_beta(cls, alpha: float, beta: float) -> "CoefficientTriple":
        """Complete (α, β) with γ = sqrt(1 - α² - β²) >= 0."""
        rest = 1.0 - alpha * alpha - beta * beta
        if rest < -COEFF_TOL:
            raise StateError(f"alpha^2 + beta^2 = {1 - rest!r} exceeds 1")
        return cls(alpha, beta, math.sqrt(max(rest, 0.0)))

    def astuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


def _triple(c) -> CoefficientTriple:
    return c if isinstance(c, CoefficientTriple) else CoefficientTriple(*c)


def w_like_state(c: CoefficientTriple | tuple[float, float, float]) -> Ket:
    """α|001> + β|010> + γ|100>."""
    c = _triple(c)
    amps = np.zeros(8, dtype=complex)
    amps[1], amps[2], amps[4] = c.alpha, c.beta, c.gamma
    return Ket(amps / np.linalg.norm(amps))


def w_n_state(n: int) -> Ket:
    """Equal superposition of the ``n`` single-excitation basis states."""
    if not 2 <= n <= 4:
        raise StateError(f"W_N is supported for 2 <= N <= 4, got {n}")
    amps = np.zeros(2**n, dtype=complex)
    for k in range(n):
        amps[1 << k] = 1.0
    return Ket(amps / math.sqrt(n))


def ghz_like_state(mu: float, nu: float) -> Ket:
    """μ|V,D,+l> + ν|H,U,-l>, i.e. μ|110> + ν|001>."""
    if abs(mu * mu + nu * nu - 1.0) > COEFF_TOL:
        raise StateError(f"mu^2 + nu^2 = {mu * mu + nu * nu!r}, expected 1")
    amps = np.zeros(8, dtype=complex)
    amps[6], amps[1] = mu, nu
    return Ket(amps / np.linalg.norm(amps))


def hwp_to_coefficients(p: PrepParams) -> CoefficientTriple:
    t1 = math.radians(2.0 * p.theta1)
    t2 = math.radians(2.0 * p.theta2)
    alpha = math.sin(t1)
    beta = math.cos(t1) * math.cos(t2)
    gamma = math.cos(t1) * math.sin(t2)
    n = math.sqrt(alpha * alpha + beta * beta + gamma * gamma)
    return CoefficientTriple(alpha / n, beta / n, gamma / n)


def coefficients_to_hwp(c: CoefficientTriple | tuple[float, float, float]) -> PrepParams:
    """Inverse of :func:`hwp_to_coefficients` for nonnegative triples.

    Both angles come back in [0°, 45°].  When β = γ = 0 the second angle is
    arbitrary; it is set to 0 and the result is flagged ``degenerate``.
    """
    c = _triple(c)
    if min(c.astuple()) < -COEFF_TOL:
        raise StateError("inversion requires nonnegative coefficients")
    alpha = min(max(c.alpha, 0.0), 1.0)
    theta1 = 0.5 * math.degrees(math.asin(alpha))
    if math.hypot(c.beta, c.gamma) < 1e-12:
        return PrepParams(theta1, 0.0, degenerate=True)
    theta2 = 0.5 * math.degrees(math.atan2(max(c.gamma, 0.0), max(c.beta, 0.0)))
    return PrepParams(theta1, theta2)


# --- element-by-element preparation model -----------------------------------


def hwp_matrix(theta_deg: float) -> np.ndarray:
    c = math.cos(math.radians(2.0 * theta_deg))
    s = math.sin(math.radians(2.0 * theta_deg))
    return np.array([[c, s], [s, -c]], dtype=complex)


def _controlled(u: np.ndarray, control: int, value: int, target: int, n: int) -> np.ndarray:
    """Apply ``u`` to ``target`` when qubit ``control`` equals ``value``."""
    proj = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    on = [np.eye(2)] * n
    off = [np.eye(2)] * n
    on[control] = proj[value]
    on[target] = u
    off[control] = proj[1 - value]
    out_on, out_off = on[0], off[0]
    for a, b in zip(on[1:], off[1:]):
        out_on = np.kron(out_on, a)
        out_off = np.kron(out_off, b)
    return out_on + out_off


def _append_complement(n: int, source: int) -> np.ndarray:
    """Isometry that appends a qubit carrying NOT of qubit ``source``."""
    d = 2**n
    iso = np.zeros((2 * d, d))
    for k in range(d):
        bit = (k >> (n - 1 - source)) & 1
        iso[2 * k + (1 - bit), k] = 1.0
    return iso


def pipeline_state(p: PrepParams, displacer: bool = True) -> Ket:
    """Run |H> through HWP1, BD1, the 45° plate + SLM1, HWP2 and BD2.

    With ``displacer=False`` the second beam displacer is left out, which
    is the GHZ-like configuration (HWP2 at 45° then yields μ|110> + ν|001>).
    """
    psi = np.array([1.0, 0.0], dtype=complex)
    psi = hwp_matrix(p.theta1) @ psi
    # BD1: H goes to the down path (1), V to the up path (0)
    psi = _append_complement(1, 0) @ psi
    # 45° plate on the up path turns V into H before the SLM
    psi = _controlled(hwp_matrix(45.0), control=1, value=0, target=0, n=2) @ psi
    # SLM1: up path gets -l (1), down path +l (0)
    psi = _append_complement(2, 1) @ psi
    psi = _controlled(hwp_matrix(p.theta2), control=1, value=1, target=0, n=3) @ psi
    if displacer:
        # BD2 moves V from the down path to the up path
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        psi = _controlled(x, control=0, value=1, target=1, n=3) @ psi
    return Ket(psi)


def depolarize(rho: State, p: float) -> DensityMatrix:
    """(1 - p) rho + p I / 2^n."""
    if not 0.0 <= p <= 1.0:
        raise StateError(f"depolarizing strength must be in [0, 1], got {p!r}")
    rho = as_density(rho)
    d = rho.entries.shape[0]
    return DensityMatrix((1.0 - p) * rho.entries + p * np.eye(d) / d)


# --- CLI state specifiers ----------------------------------------------------


class StateSpecError(ValueError):
    def __init__(self, message: str, token: str):
        super().__init__(message)
        self.token = token


SPEC_NORM_TOL = 1e-4


def _floats(body: str, count: int, spec: str) -> list[float]:
    parts = body.split(",")
    if len(parts) != count:
        raise StateSpecError(f"expected {count} comma-separated numbers in {spec!r}", body)
    out = []
    for part in parts:
        try:
            v = float(part)
        except ValueError:
            raise StateSpecError(f"not a number: {part!r}", part) from None
        if not math.isfinite(v):
            raise StateSpecError(f"not a finite number: {part!r}", part)
        out.append(v)
    return out


def _renormalized(values: list[float], token: str) -> list[float]:
    # specifiers are typed with a handful of digits
    n = math.sqrt(sum(v * v for v in values))
    if abs(n - 1.0) > SPEC_NORM_TOL:
        raise StateSpecError(f"coefficients {token!r} are not normalized (norm {n:.6g})", token)
    return [v / n for v in values]


def parse_state(spec: str) -> State:
    """Build a state from ``w:a,b,g``, ``wn:N``, ``ghz:mu,nu``,
    ``prep:theta1,theta2`` or ``file:<path>``."""
    kind, sep, body = spec.partition(":")
    if not sep:
        raise StateSpecError(f"state specifier {spec!r} lacks a 'kind:' prefix", spec)
    kind = kind.strip().lower()
    try:
        if kind == "w":
            vals = _renormalized(_floats(body, 3, spec), body)
            if min(vals) < 0:
                raise StateSpecError("W-like coefficients must be nonnegative", body)
            return w_like_state(CoefficientTriple(*vals))
        if kind == "wn":
            try:
                n = int(body)
            except ValueError:
                raise StateSpecError(f"not an integer: {body!r}", body) from None
            return w_n_state(n)
        if kind == "ghz":
            mu, nu = _renormalized(_floats(body, 2, spec), body)
            return ghz_like_state(mu, nu)
        if kind == "prep":
            t1, t2 = _floats(body, 2, spec)
            return pipeline_state(PrepParams(t1, t2))
        if kind == "file":
            try:
                data = json.loads(Path(body).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise StateSpecError(f"cannot read state file {body!r}: {exc}", body) from None
            return state_from_dict(data)
    except StateSpecError:
        raise
    except (StateError, KeyError, TypeError) as exc:
        raise StateSpecError(f"invalid state {spec!r}: {exc}", body) from None
    raise StateSpecError(f"unknown state kind {kind!r}", kind)
