"""Uncertainty-relation steering parameters and steering-graph classification.

For an ordered pair (X, Y) and settings i the parameter is

    P_XY = sum_i var(alpha_i X_i + Y_i),   alpha_i = -cov(X_i, Y_i) / var(X_i)

which at the optimal alpha_i expands to sum_i [var(Y_i) - cov_i^2 / var(X_i)].
P_XY below the minimum total variance (2 for three Pauli settings) certifies
that X steers Y.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import permutations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .linalg import (
    PAULI,
    PartyLabel,
    State,
    StateError,
    _partial_trace_array,
    as_density,
    party_index,
    party_name,
)

DEGENERATE_VAR = 1e-12
PAULI_SETTINGS = ("x", "y", "z")

UNSTEERABLE = "unsteerable"
MONOGAMOUS = "monogamous"
SHAREABLE = "shareable"
FULLY_MUTUAL = "fully_mutual"
INVALID = "invalid"


@dataclass(frozen=True, eq=False)
class PairMoments:
    """First and second moments for each setting, steerer first.

    Every field is an array with one entry per setting.
    """

    mean_steerer: np.ndarray
    mean_steered: np.ndarray
    cross: np.ndarray
    var_steerer: np.ndarray
    var_steered: np.ndarray
    covariance: np.ndarray
    settings: tuple[str, ...] = PAULI_SETTINGS

    def setting(self, axis: str) -> dict[str, float]:
        i = self.settings.index(axis)
        return {
            "mean_steerer": float(self.mean_steerer[i]),
            "mean_steered": float(self.mean_steered[i]),
            "cross": float(self.cross[i]),
            "var_steerer": float(self.var_steerer[i]),
            "var_steered": float(self.var_steered[i]),
            "covariance": float(self.covariance[i]),
        }


def moments_from_means(mean_a, mean_b, cross, settings=PAULI_SETTINGS) -> PairMoments:
    """Moments of ±1-valued observables from their means and correlator."""
    a = np.asarray(mean_a, dtype=float)
    b = np.asarray(mean_b, dtype=float)
    ab = np.asarray(cross, dtype=float)
    return PairMoments(
        mean_steerer=a,
        mean_steered=b,
        cross=ab,
        var_steerer=1.0 - a * a,
        var_steered=1.0 - b * b,
        covariance=ab - a * b,
        settings=tuple(settings),
    )


def residual_variance_sum(var_a, var_b, cov):
    """sum_i [var_b - cov^2 / var_a], with alpha_i = 0 where var_a vanishes.

    Works on arrays whose last axis runs over settings.
    """
    var_a = np.asarray(var_a, dtype=float)
    var_b = np.asarray(var_b, dtype=float)
    cov = np.asarray(cov, dtype=float)
    ok = var_a >= DEGENERATE_VAR
    explained = np.where(ok, cov * cov / np.where(ok, var_a, 1.0), 0.0)
    return np.sum(var_b - explained, axis=-1)


def _pair_moments_array(r: np.ndarray, settings) -> PairMoments:
    t = r.reshape(2, 2, 2, 2)
    ra = np.einsum("ajbj->ab", t)
    rb = np.einsum("iaib->ab", t)
    ma, mb, mab, va, vb = [], [], [], [], []
    for s in settings:
        if isinstance(s, str):
            oa = ob = PAULI[s]
        else:
            oa, ob = (np.asarray(o, dtype=complex) for o in s)
        ea = np.real(np.sum(ra * oa.T))
        eb = np.real(np.sum(rb * ob.T))
        eab = np.real(np.sum(r * np.kron(oa, ob).T))
        ea2 = np.real(np.sum(ra * (oa @ oa).T))
        eb2 = np.real(np.sum(rb * (ob @ ob).T))
        ma.append(ea)
        mb.append(eb)
        mab.append(eab)
        va.append(ea2 - ea * ea)
        vb.append(eb2 - eb * eb)
    ma, mb, mab = np.array(ma), np.array(mb), np.array(mab)
    names = tuple(s if isinstance(s, str) else f"s{k}" for k, s in enumerate(settings))
    return PairMoments(ma, mb, mab, np.array(va), np.array(vb), mab - ma * mb, names)


def pair_moments(rho_pair: State, settings: Sequence = PAULI_SETTINGS) -> PairMoments:
    """Moments of a two-qubit state; party 0 is the steerer.

    ``settings`` defaults to the three Paulis on both sides.  A setting may
    also be a pair ``(steerer_op, steered_op)`` of 2x2 Hermitian matrices.
    """
    rho_pair = as_density(rho_pair)
    if rho_pair.qubit_count != 2:
        raise StateError(f"pair_moments needs a two-qubit state, got {rho_pair.qubit_count}")
    return _pair_moments_array(rho_pair.entries, settings)


def steering_value_from_moments(m: PairMoments) -> float:
    return float(residual_variance_sum(m.var_steerer, m.var_steered, m.covariance))


def min_variance_bound(setting_count: int) -> float:
    """Minimum over single-qubit states of the summed Pauli variances."""
    if setting_count == 3:
        return 2.0
    if setting_count == 2:
        return 1.0
    raise ValueError(f"unsupported number of settings: {setting_count}")


@dataclass(frozen=True)
class SteeringValue:
    steerer: int
    steered: int
    value: float
    threshold: float = 2.0
    stderr: float = 0.0

    def __post_init__(self) -> None:
        if self.steerer == self.steered:
            raise StateError("steerer and steered party must differ")

    @property
    def label(self) -> str:
        return f"P_{party_name(self.steerer)}{party_name(self.steered)}"

    def violated(self, epsilon: float = 0.0, sigma_k: float = 0.0) -> bool:
        """True when ``value + sigma_k * stderr < threshold - epsilon``.

        NaN values (unknown entries) never count as a violation.
        """
        return bool(self.value + sigma_k * self.stderr < self.threshold - epsilon)

    def to_dict(self, epsilon: float = 0.0, sigma_k: float = 0.0) -> dict:
        return {
            "steerer": party_name(self.steerer),
            "steered": party_name(self.steered),
            "value": self.value,
            "stderr": self.stderr,
            "threshold": self.threshold,
            "violated": self.violated(epsilon, sigma_k),
        }


def steering_parameter(
    rho: State, steerer: PartyLabel, steered: PartyLabel, settings: Sequence = PAULI_SETTINGS
) -> SteeringValue:
    rho = as_density(rho)
    n = rho.qubit_count
    if n < 2:
        raise StateError("steering needs at least two qubits")
    i, j = party_index(steerer, n), party_index(steered, n)
    if i == j:
        raise StateError("steerer and steered party must differ")
    r = _partial_trace_array(rho.entries, n, [i, j])
    value = steering_value_from_moments(_pair_moments_array(r, settings))
    return SteeringValue(i, j, value, min_variance_bound(len(settings)))


@dataclass(frozen=True)
class SteeringMatrix:
    """All ordered-pair steering values, sorted by (steerer, steered)."""

    party_count: int
    values: tuple[SteeringValue, ...]
    settings: tuple[str, ...] = PAULI_SETTINGS

    def __post_init__(self) -> None:
        pairs = [(v.steerer, v.steered) for v in self.values]
        expected = list(permutations(range(self.party_count), 2))
        if sorted(pairs) != expected:
            raise StateError("steering matrix must cover every ordered pair exactly once")
        if len({v.threshold for v in self.values}) > 1:
            raise StateError("steering matrix thresholds must agree")
        object.__setattr__(
            self, "values", tuple(sorted(self.values, key=lambda v: (v.steerer, v.steered)))
        )

    @property
    def threshold(self) -> float:
        return self.values[0].threshold

    def get(self, steerer: PartyLabel, steered: PartyLabel) -> SteeringValue:
        i = party_index(steerer, self.party_count)
        j = party_index(steered, self.party_count)
        for v in self.values:
            if (v.steerer, v.steered) == (i, j):
                return v
        raise KeyError((steerer, steered))

    def as_dict(self) -> dict[str, float]:
        """``{"AB": P_AB, ...}``."""
        return {party_name(v.steerer) + party_name(v.steered): v.value for v in self.values}

    def relabel(self, perm: Sequence[int]) -> "SteeringMatrix":
        """Rename party ``k`` to ``perm[k]``."""
        return SteeringMatrix(
            self.party_count,
            tuple(
                SteeringValue(perm[v.steerer], perm[v.steered], v.value, v.threshold, v.stderr)
                for v in self.values
            ),
            self.settings,
        )

    @classmethod
    def from_values(
        cls,
        values: Mapping[str, float],
        stderr: Mapping[str, float] | None = None,
        party_count: int = 3,
        threshold: float = 2.0,
    ) -> "SteeringMatrix":
        """Build from labels like ``"BA"`` (B steers A).  Missing pairs are NaN."""
        stderr = stderr or {}
        known = {k.upper().removeprefix("P_") for k in values}
        entries = []
        for i, j in permutations(range(party_count), 2):
            key = party_name(i) + party_name(j)
            val = next((v for k, v in values.items() if k.upper().removeprefix("P_") == key), math.nan)
            err = next((v for k, v in stderr.items() if k.upper().removeprefix("P_") == key), 0.0)
            entries.append(SteeringValue(i, j, float(val), threshold, float(err)))
            known.discard(key)
        if known:
            raise StateError(f"unknown pair labels: {sorted(known)}")
        return cls(party_count, tuple(entries))


def steering_matrix(rho: State, settings: Sequence = PAULI_SETTINGS) -> SteeringMatrix:
    rho = as_density(rho)
    n = rho.qubit_count
    if not 2 <= n <= 4:
        raise StateError(f"steering matrix supports 2-4 qubits, got {n}")
    return SteeringMatrix(n, _matrix_values(rho.entries, n, settings), _names(settings))


def _names(settings) -> tuple[str, ...]:
    return tuple(s if isinstance(s, str) else f"s{k}" for k, s in enumerate(settings))


def _matrix_values(m: np.ndarray, n: int, settings=PAULI_SETTINGS) -> tuple[SteeringValue, ...]:
    threshold = min_variance_bound(len(settings))
    out = []
    for i, j in permutations(range(n), 2):
        r = _partial_trace_array(m, n, [i, j])
        value = steering_value_from_moments(_pair_moments_array(r, settings))
        out.append(SteeringValue(i, j, value, threshold))
    return tuple(out)


def batched_pair_values(rhos: np.ndarray, n: int, pairs) -> np.ndarray:
    """Pauli-setting steering values for a stack of density matrices.

    ``rhos`` has shape (..., 2^n, 2^n); the result has shape (..., len(pairs)).
    """
    x, y, z = PAULI["x"], PAULI["y"], PAULI["z"]
    xx, yy, zz = np.kron(x, x), np.kron(y, y), np.kron(z, z)
    out = np.empty(rhos.shape[:-2] + (len(pairs),))
    cache: dict[tuple[int, int], tuple] = {}
    for k, (i, j) in enumerate(pairs):
        key = (min(i, j), max(i, j))
        if key not in cache:
            r = _partial_trace_array(rhos, n, list(key))
            t = r.reshape(r.shape[:-2] + (2, 2, 2, 2))
            r1 = np.einsum("...ajbj->...ab", t)
            r2 = np.einsum("...iaib->...ab", t)
            tr = lambda a, o: np.real(np.sum(a * o.T, axis=(-2, -1)))
            m1 = np.stack([tr(r1, x), tr(r1, y), tr(r1, z)], axis=-1)
            m2 = np.stack([tr(r2, x), tr(r2, y), tr(r2, z)], axis=-1)
            mc = np.stack([tr(r, xx), tr(r, yy), tr(r, zz)], axis=-1)
            cache[key] = (m1, m2, mc)
        m1, m2, mc = cache[key]
        a, b = (m1, m2) if i < j else (m2, m1)
        out[..., k] = residual_variance_sum(1 - a * a, 1 - b * b, mc - a * b)
    return out


@dataclass(frozen=True)
class SteeringConfiguration:
    party_count: int
    arrows: frozenset[tuple[int, int]]
    in_degree: tuple[int, ...]
    category: str

    @property
    def shareable(self) -> bool:
        """Some party is steered by two or more others (includes fully mutual)."""
        return max(self.in_degree) >= 2

    def arrow_labels(self) -> list[str]:
        return [f"{party_name(i)}->{party_name(j)}" for i, j in sorted(self.arrows)]


def classify_configuration(
    m: SteeringMatrix, epsilon: float = 0.0, sigma_k: float = 0.0
) -> SteeringConfiguration:
    """Directed steering graph and its category.

    An arrow i -> j is drawn when ``P_ij + sigma_k * stderr < threshold - epsilon``.
    """
    n = m.party_count
    arrows = frozenset(
        (v.steerer, v.steered) for v in m.values if v.violated(epsilon, sigma_k)
    )
    in_degree = tuple(sum(1 for _, j in arrows if j == k) for k in range(n))
    if not arrows:
        category = UNSTEERABLE
    elif n >= 3 and len(arrows) == n * (n - 1):
        category = FULLY_MUTUAL
    elif max(in_degree) >= 2:
        category = SHAREABLE
    else:
        category = MONOGAMOUS
    return SteeringConfiguration(n, arrows, in_degree, category)


# --- region map over the W-like family ---------------------------------------

SWEEP_PAIRS = ((0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1))
SWEEP_COLUMNS = ["alpha", "beta", "gamma", "P_AB", "P_BA", "P_AC", "P_CA", "P_BC", "P_CB", "category"]


@dataclass(frozen=True)
class SweepCell:
    alpha: float
    beta: float
    gamma: float | None
    values: tuple[float, ...] | None
    category: str

    def row(self) -> list[str]:
        if self.values is None:
            return [repr(self.alpha), repr(self.beta), "", *[""] * 6, self.category]
        return [
            repr(self.alpha),
            repr(self.beta),
            repr(self.gamma),
            *(repr(v) for v in self.values),
            self.category,
        ]


def _w_like_densities(alpha: np.ndarray, beta: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    v = np.zeros(alpha.shape + (8,))
    v[..., 1], v[..., 2], v[..., 4] = alpha, beta, gamma
    return (v[..., :, None] * v[..., None, :]).astype(complex)


def _categories(values: np.ndarray, pairs, n: int, threshold: float, epsilon: float) -> list[str]:
    """Vectorized :func:`classify_configuration` over rows of ``values``."""
    arrows = values < threshold - epsilon
    in_deg = np.zeros(values.shape[:-1] + (n,), dtype=int)
    for k, (_, j) in enumerate(pairs):
        in_deg[..., j] += arrows[..., k]
    count = arrows.sum(axis=-1)
    cats = np.where(
        count == 0,
        UNSTEERABLE,
        np.where(
            (count == n * (n - 1)) & (n >= 3),
            FULLY_MUTUAL,
            np.where(in_deg.max(axis=-1) >= 2, SHAREABLE, MONOGAMOUS),
        ),
    )
    return [str(c) for c in cats]


def _sweep_row(args) -> list[SweepCell]:
    alpha, betas, epsilon = args
    betas = np.asarray(betas, dtype=float)
    rest = 1.0 - alpha * alpha - betas * betas
    valid = rest >= -1e-12
    gammas = np.sqrt(np.clip(rest, 0.0, None))
    b_ok, g_ok = betas[valid], gammas[valid]
    rhos = _w_like_densities(np.full(b_ok.shape, alpha), b_ok, g_ok)
    vals = batched_pair_values(rhos, 3, SWEEP_PAIRS)
    cats = _categories(vals, SWEEP_PAIRS, 3, min_variance_bound(3), epsilon)
    out = []
    k = 0
    for b, g, ok in zip(betas, gammas, valid):
        if ok:
            out.append(SweepCell(alpha, float(b), float(g), tuple(float(x) for x in vals[k]), cats[k]))
            k += 1
        else:
            out.append(SweepCell(alpha, float(b), None, None, INVALID))
    return out


def sweep_cell(alpha: float, beta: float, epsilon: float = 0.0) -> SweepCell:
    return _sweep_row((float(alpha), [float(beta)], epsilon))[0]


def sweep_region_map(
    resolution: int,
    alpha_range: tuple[float, float] = (0.0, 1.0),
    beta_range: tuple[float, float] = (0.0, 1.0),
    epsilon: float = 0.0,
    workers: int = 1,
) -> list[SweepCell]:
    """Categories over a ``resolution`` x ``resolution`` grid of (α, β).

    Grid points include both ends of each range.  Rows are ordered with α
    outermost, so the output does not depend on ``workers``.
    """
    if resolution < 1:
        raise ValueError(f"resolution must be positive, got {resolution}")
    alphas = [float(a) for a in np.linspace(*alpha_range, resolution)]
    betas = [float(b) for b in np.linspace(*beta_range, resolution)]
    jobs = [(a, betas, epsilon) for a in alphas]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_sweep_row(j) for j in jobs]
    return [cell for row in rows for cell in row]


def write_sweep_csv(cells: Iterable[SweepCell], fh: io.TextIOBase) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for cell in cells:
        writer.writerow(cell.row())


def sweep_csv_text(cells: Iterable[SweepCell]) -> str:
    buf = io.StringIO()
    write_sweep_csv(cells, buf)
    return buf.getvalue()
