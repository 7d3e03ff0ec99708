"""Finite-count simulation, moment estimation with Poisson error bars, tomography.

Measurement settings are strings over ``{x, y, z}`` with one character per
party, e.g. ``"xzy"``.  Outcome bit 0 is the +1 eigenvalue.  Every random
draw comes from a generator seeded by ``(seed, task)`` through
:class:`numpy.random.SeedSequence`, so results never depend on the order or
parallelism in which tasks run.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .linalg import (
    IDENTITY,
    PAULI,
    DensityMatrix,
    PartyLabel,
    State,
    StateError,
    as_density,
    nearest_physical_state,
    party_index,
    party_name,
)
from .steering import (
    PAULI_SETTINGS,
    PairMoments,
    SteeringMatrix,
    SteeringValue,
    min_variance_bound,
    moments_from_means,
    residual_variance_sum,
)

AXES = "xyz"
MODES = ("multinomial", "poissonized", "exact")
MIN_PAIR_COUNTS = 2

_SQ = 1 / math.sqrt(2)
_HADAMARD = np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex)
# rows are the +1 and -1 eigenvectors (conjugated) of each Pauli
_BASIS_CHANGE = {
    "x": _HADAMARD,
    "y": _HADAMARD @ np.diag([1, -1j]),
    "z": np.eye(2, dtype=complex),
}


class StatisticsError(ValueError):
    """Counts are insufficient for a stable estimate."""


def setting_code(setting: str) -> int:
    """Base-3 index of a setting; used to derive its random stream."""
    code = 0
    for ch in setting:
        code = 3 * code + AXES.index(ch)
    return code


def check_setting(setting: str, qubit_count: int) -> str:
    setting = setting.lower()
    if len(setting) != qubit_count or any(ch not in AXES for ch in setting):
        raise StateError(f"invalid setting {setting!r} for {qubit_count} qubits")
    return setting


def all_settings(qubit_count: int) -> list[str]:
    return ["".join(s) for s in itertools.product(AXES, repeat=qubit_count)]


def aligned_settings(qubit_count: int) -> list[str]:
    """``["xxx", "yyy", "zzz"]``: enough to estimate every pair's moments."""
    return [a * qubit_count for a in AXES]


def outcome_probabilities(rho: State, setting: str) -> np.ndarray:
    rho = as_density(rho)
    n = rho.qubit_count
    setting = check_setting(setting, n)
    u = _BASIS_CHANGE[setting[0]]
    for ch in setting[1:]:
        u = np.kron(u, _BASIS_CHANGE[ch])
    p = np.real(np.einsum("ij,jk,ik->i", u, rho.entries, u.conj()))
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _bits(index: int, n: int) -> str:
    return format(index, f"0{n}b")


@dataclass(frozen=True, eq=False)
class CountsRecord:
    """Counts per setting, indexed by outcome (party 0 is the leading bit).

    In ``exact`` mode the entries are outcome probabilities and ``shots`` is 0.
    """

    qubit_count: int
    counts: Mapping[str, np.ndarray]
    shots: int
    seed: int
    mode: str = "multinomial"

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise StateError(f"unknown sampling mode {self.mode!r}")
        frozen = {}
        for s in sorted(self.counts, key=setting_code):
            arr = np.array(self.counts[s], dtype=float if self.mode == "exact" else np.int64)
            if arr.shape != (2**self.qubit_count,) or np.any(arr < 0):
                raise StateError(f"bad counts for setting {s!r}")
            arr.setflags(write=False)
            frozen[check_setting(s, self.qubit_count)] = arr
        object.__setattr__(self, "counts", frozen)

    @property
    def settings(self) -> list[str]:
        return list(self.counts)

    def to_dict(self) -> dict:
        n = self.qubit_count
        conv = float if self.mode == "exact" else int
        return {
            "qubit_count": n,
            "shots": self.shots,
            "seed": self.seed,
            "mode": self.mode,
            "counts": {
                s: {_bits(k, n): conv(c) for k, c in enumerate(arr)} for s, arr in self.counts.items()
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "CountsRecord":
        n = int(data["qubit_count"])
        counts = {}
        for s, table in data["counts"].items():
            arr = np.zeros(2**n)
            for outcome, c in table.items():
                if len(outcome) != n or set(outcome) - {"0", "1"}:
                    raise StateError(f"bad outcome string {outcome!r}")
                arr[int(outcome, 2)] = c
            counts[s] = arr
        return cls(n, counts, int(data["shots"]), int(data["seed"]), data.get("mode", "multinomial"))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["setting", "outcome", "count"])
        for s, arr in self.counts.items():
            for k, c in enumerate(arr):
                w.writerow([s, _bits(k, self.qubit_count), repr(float(c)) if self.mode == "exact" else int(c)])
        return buf.getvalue()


def simulate_counts(
    rho: State,
    settings: Sequence[str],
    shots: int,
    seed: int,
    mode: str = "multinomial",
    workers: int = 1,
) -> CountsRecord:
    """Sample coincidence counts for each setting.

    ``multinomial`` draws exactly ``shots`` outcomes per setting;
    ``poissonized`` draws each outcome count from Poisson(shots * p);
    ``exact`` stores the probabilities themselves.
    """
    rho = as_density(rho)
    n = rho.qubit_count
    if not settings:
        raise StateError("at least one setting is required")
    if mode not in MODES:
        raise StateError(f"unknown sampling mode {mode!r}")
    if mode != "exact" and shots < 1:
        raise StateError(f"shots must be >= 1, got {shots}")
    settings = [check_setting(s, n) for s in settings]

    def draw(setting: str) -> np.ndarray:
        p = outcome_probabilities(rho, setting)
        if mode == "exact":
            return p
        rng = np.random.default_rng(np.random.SeedSequence([seed, n, setting_code(setting)]))
        if mode == "multinomial":
            return rng.multinomial(shots, p)
        return rng.poisson(shots * p)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tables = list(pool.map(draw, settings))
    else:
        tables = [draw(s) for s in settings]
    return CountsRecord(n, dict(zip(settings, tables)), 0 if mode == "exact" else shots, seed, mode)


# --- moment estimation -------------------------------------------------------


def _pair_tables(rec: CountsRecord, i: int, j: int) -> list[np.ndarray]:
    """Per axis, the stacked raw count tables of all settings aligned on (i, j)."""
    out = []
    for axis in PAULI_SETTINGS:
        rows = [arr for s, arr in rec.counts.items() if s[i] == axis and s[j] == axis]
        if not rows:
            raise StatisticsError(
                f"record lacks a setting with {axis} on both {party_name(i)} and {party_name(j)}"
            )
        out.append(np.stack(rows).astype(float))
    return out


def _joint(tables: np.ndarray, n: int, i: int, j: int) -> np.ndarray:
    """Sum stacked tables (..., S, 2^n) into a pair joint (..., 2, 2) of counts."""
    shape = tables.shape[:-1] + (2,) * n
    t = tables.reshape(shape)
    lead = len(tables.shape) - 1
    others = tuple(lead + k for k in range(n) if k not in (i, j))
    t = t.sum(axis=others + (lead - 1,))
    return t if i < j else np.swapaxes(t, -1, -2)


def _means(joint: np.ndarray):
    total = joint.sum(axis=(-1, -2))
    with np.errstate(invalid="ignore", divide="ignore"):
        p = joint / total[..., None, None]
    a = p[..., 0, 0] + p[..., 0, 1] - p[..., 1, 0] - p[..., 1, 1]
    b = p[..., 0, 0] - p[..., 0, 1] + p[..., 1, 0] - p[..., 1, 1]
    ab = p[..., 0, 0] - p[..., 0, 1] - p[..., 1, 0] + p[..., 1, 1]
    return a, b, ab


def _resampled_means(rec: CountsRecord, i: int, j: int, resamples: int, seed: int):
    """Means per resample, each raw count replaced by a Poisson draw around it."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, i, j]))
    n = rec.qubit_count
    per_axis = []
    for tables in _pair_tables(rec, i, j):
        draws = rng.poisson(tables, size=(resamples,) + tables.shape).astype(float)
        per_axis.append(_means(_joint(draws, n, i, j)))
    a = np.stack([m[0] for m in per_axis], axis=-1)
    b = np.stack([m[1] for m in per_axis], axis=-1)
    ab = np.stack([m[2] for m in per_axis], axis=-1)
    return a, b, ab


def _point_means(rec: CountsRecord, i: int, j: int):
    n = rec.qubit_count
    cols = []
    for tables in _pair_tables(rec, i, j):
        joint = _joint(tables, n, i, j)
        # exact records hold probabilities, so only emptiness matters there
        needed = 0.0 if rec.mode == "exact" else MIN_PAIR_COUNTS
        if joint.sum() <= 0 or joint.sum() < needed:
            raise StatisticsError(
                f"{int(joint.sum())} counts in the {party_name(i)}{party_name(j)} marginal; "
                f"at least {MIN_PAIR_COUNTS} are needed for a variance"
            )
        cols.append(_means(joint))
    return tuple(np.array([c[k] for c in cols]) for k in range(3))


def estimate_moments(
    rec: CountsRecord,
    pair: tuple[PartyLabel, PartyLabel],
    resamples: int = 200,
    seed: int = 0,
) -> tuple[PairMoments, PairMoments]:
    """Plug-in moments for (steerer, steered) and their resampling stderrs.

    Counts of the other parties are summed out, pooling every setting that
    is aligned on the pair.
    """
    i, j = (party_index(p, rec.qubit_count) for p in pair)
    if i == j:
        raise StateError("pair parties must differ")
    point = moments_from_means(*_point_means(rec, i, j))
    if rec.mode == "exact" or resamples < 2:
        zeros = np.zeros(3)
        return point, PairMoments(zeros, zeros, zeros, zeros, zeros, zeros)
    a, b, ab = _resampled_means(rec, i, j, resamples, seed)
    ok = np.all(np.isfinite(a) & np.isfinite(b) & np.isfinite(ab), axis=-1)
    sample = moments_from_means(a[ok], b[ok], ab[ok])
    fields = ("mean_steerer", "mean_steered", "cross", "var_steerer", "var_steered", "covariance")
    errs = [np.std(getattr(sample, f), axis=0, ddof=1) for f in fields]
    return point, PairMoments(*errs)


@dataclass(frozen=True)
class EstimateWithError:
    value: float
    stderr: float
    resamples: int

    def __str__(self) -> str:
        return format_uncertainty(self.value, self.stderr)


def estimate_steering_parameter(
    rec: CountsRecord,
    steerer: PartyLabel,
    steered: PartyLabel,
    resamples: int = 200,
    seed: int = 0,
) -> EstimateWithError:
    """Plug-in steering parameter with a Poisson-resampling standard error.

    The standard error is the spread of the parameter over ``resamples``
    count tables in which every raw count ``c`` is redrawn from Poisson(c).
    """
    n = rec.qubit_count
    i, j = party_index(steerer, n), party_index(steered, n)
    if i == j:
        raise StateError("steerer and steered party must differ")
    a, b, ab = _point_means(rec, i, j)
    value = float(residual_variance_sum(1 - a * a, 1 - b * b, ab - a * b))
    if rec.mode == "exact" or resamples < 2:
        return EstimateWithError(value, 0.0, 0)
    ra, rb, rab = _resampled_means(rec, i, j, resamples, seed)
    vals = residual_variance_sum(1 - ra * ra, 1 - rb * rb, rab - ra * rb)
    vals = vals[np.isfinite(vals)]
    if vals.size < 2:
        raise StatisticsError("too few usable resamples for a standard error")
    return EstimateWithError(value, float(np.std(vals, ddof=1)), resamples)


def estimate_steering_matrix(rec: CountsRecord, resamples: int = 200, seed: int = 0) -> SteeringMatrix:
    n = rec.qubit_count
    threshold = min_variance_bound(3)
    vals = []
    for i, j in itertools.permutations(range(n), 2):
        est = estimate_steering_parameter(rec, i, j, resamples, seed)
        vals.append(SteeringValue(i, j, est.value, threshold, est.stderr))
    return SteeringMatrix(n, tuple(vals))


# --- tomography --------------------------------------------------------------


def tomography_reconstruct(rec: CountsRecord) -> DensityMatrix:
    """Linear-inversion estimate from all 3^n Pauli settings, made physical.

    Each Pauli-string expectation pools every setting that agrees with it on
    its non-identity slots; identity slots are summed out.
    """
    n = rec.qubit_count
    missing = set(all_settings(n)) - set(rec.counts)
    if missing:
        raise StatisticsError(f"tomography needs all {3**n} settings; missing {sorted(missing)[:3]}...")
    bits = np.array([[(k >> (n - 1 - q)) & 1 for q in range(n)] for k in range(2**n)])
    d = 2**n
    rho = np.eye(d, dtype=complex) / d
    for labels in itertools.product("ixyz", repeat=n):
        support = [q for q, ch in enumerate(labels) if ch != "i"]
        if not support:
            continue
        tables = [arr for s, arr in rec.counts.items() if all(s[q] == labels[q] for q in support)]
        pooled = np.sum(tables, axis=0).astype(float)
        total = pooled.sum()
        if total <= 0:
            raise StatisticsError(f"no counts for Pauli string {''.join(labels)}")
        sign = (-1.0) ** bits[:, support].sum(axis=1)
        value = float(sign @ pooled) / total
        op = np.array([[1.0]], dtype=complex)
        for ch in labels:
            op = np.kron(op, IDENTITY if ch == "i" else PAULI[ch])
        rho += value * op / d
    return nearest_physical_state(rho)


# --- reporting ---------------------------------------------------------------


def format_uncertainty(value: float, stderr: float, decimals: int | None = None) -> str:
    """Parenthesis notation: ``1.62(5)`` is 1.62 ± 0.05.

    With ``decimals`` unset the precision follows the leading digit of the
    uncertainty.  With ``decimals`` fixed the uncertainty is rounded up to
    whole units of the last digit.
    """
    if not math.isfinite(value):
        return str(value)
    if decimals is None:
        if stderr <= 0 or not math.isfinite(stderr):
            return f"{value:.6f}(0)"
        decimals = max(0, -math.floor(math.log10(stderr)))
        if round(stderr, decimals) >= 10 ** (1 - decimals):
            decimals = max(0, decimals - 1)
        digits = int(round(stderr * 10**decimals))
    else:
        digits = int(math.ceil(stderr * 10**decimals - 1e-9)) if stderr > 0 else 0
    return f"{value:.{decimals}f}({digits})"

