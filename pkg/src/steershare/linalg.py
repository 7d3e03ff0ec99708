"""Dense complex linear algebra for states of one to four qubits.

Conventions
-----------
- Party 0 is the most significant bit of a basis index.  For three qubits
  the index of ``|a b c>`` is ``4a + 2b + c`` with ``a`` belonging to party A.
- Parties are referred to by integer index or by their letter (A, B, C, D).
- All state objects are immutable; the wrapped arrays are read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

MAX_QUBITS = 4
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = -1e-8
EIG_FLOOR = 1e-14

PARTY_NAMES = "ABCD"

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
IDENTITY = np.eye(2, dtype=complex)

for _m in PAULI.values():
    _m.setflags(write=False)
IDENTITY.setflags(write=False)

PartyLabel = Union[int, str]


class StateError(ValueError):
    """Raised when an array does not describe a valid state or operand."""


def party_name(index: int) -> str:
    return PARTY_NAMES[index]


def party_index(label: PartyLabel, qubit_count: int) -> int:
    """Resolve ``label`` (an int or a letter such as ``"B"``) to an index."""
    if isinstance(label, str):
        key = label.strip().upper()
        if len(key) != 1 or key not in PARTY_NAMES:
            raise StateError(f"unknown party label {label!r}")
        index = PARTY_NAMES.index(key)
    else:
        index = int(label)
    if not 0 <= index < qubit_count:
        raise StateError(f"party {label!r} out of range for {qubit_count} qubits")
    return index


def _qubits_for_dim(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise StateError(f"dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise StateError(f"{n} qubits exceeds the supported maximum of {MAX_QUBITS}")
    return n


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Ket:
    """Normalized pure state given by its amplitudes in the computational basis."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = _frozen(np.asarray(self.amplitudes).reshape(-1))
        _qubits_for_dim(amps.size)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"ket norm is {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def qubit_count(self) -> int:
        return _qubits_for_dim(self.amplitudes.size)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "Ket") -> complex:
        """Inner product <self|other>."""
        if other.amplitudes.size != self.amplitudes.size:
            raise StateError("dimension mismatch")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix.

    ``check=False`` skips validation; it is meant for internal hot paths that
    construct states known to be physical.
    """

    entries: np.ndarray
    check: bool = True

    def __post_init__(self) -> None:
        m = _frozen(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StateError(f"density matrix must be square, got shape {m.shape}")
        _qubits_for_dim(m.shape[0])
        if self.check:
            if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
                raise StateError("density matrix is not Hermitian")
            tr = np.trace(m).real
            if abs(tr - 1.0) > TRACE_TOL:
                raise StateError(f"density matrix trace is {tr!r}, expected 1")
            lo = np.linalg.eigvalsh(m).min()
            if lo < PSD_TOL:
                raise StateError(f"density matrix has eigenvalue {lo!r} < {PSD_TOL}")
        object.__setattr__(self, "entries", m)

    @property
    def qubit_count(self) -> int:
        return _qubits_for_dim(self.entries.shape[0])

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


State = Union[Ket, DensityMatrix]


def as_density(state: State) -> DensityMatrix:
    return state.density() if isinstance(state, Ket) else state


def maximally_mixed(qubit_count: int) -> DensityMatrix:
    d = 2**qubit_count
    return DensityMatrix(np.eye(d) / d)


def basis_ket(bits: str) -> Ket:
    """``basis_ket("010")`` is the computational basis state |010>."""
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[int(bits, 2)] = 1.0
    return Ket(amps)


def tensor_product(x: State, y: State) -> State:
    """Kronecker composition; the parties of ``x`` stay most significant."""
    if isinstance(x, Ket) and isinstance(y, Ket):
        return Ket(np.kron(x.amplitudes, y.amplitudes))
    if isinstance(x, DensityMatrix) and isinstance(y, DensityMatrix):
        return DensityMatrix(np.kron(x.entries, y.entries), check=x.check and y.check)
    raise StateError("tensor_product needs two kets or two density matrices")


def _partial_trace_array(m: np.ndarray, n: int, keep: Sequence[int]) -> np.ndarray:
    """Partial trace of ``m`` with shape (..., 2^n, 2^n); leading axes broadcast."""
    batch = m.shape[:-2]
    t = m.reshape(batch + (2,) * (2 * n))
    rows = list(range(n))
    cols = [i + n for i in range(n)]
    for d in range(n):
        if d not in keep:
            cols[d] = rows[d]
    out = [rows[k] for k in keep] + [cols[k] for k in keep]
    r = np.einsum(t, [Ellipsis] + rows + cols, [Ellipsis] + out)
    d = 2 ** len(keep)
    return r.reshape(batch + (d, d))


def partial_trace(rho: State, keep: Sequence[PartyLabel]) -> DensityMatrix:
    """Reduced state over ``keep``, with the kept parties in the listed order."""
    rho = as_density(rho)
    n = rho.qubit_count
    idx = [party_index(k, n) for k in keep]
    if not idx:
        raise StateError("keep must name at least one party")
    if len(set(idx)) != len(idx):
        raise StateError(f"duplicate parties in keep: {list(keep)!r}")
    return DensityMatrix(_partial_trace_array(rho.entries, n, idx), check=False)


def _check_observable(op: np.ndarray) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise StateError(f"observable must be 2x2, got shape {op.shape}")
    if np.max(np.abs(op - op.conj().T)) > NORM_TOL:
        raise StateError("observable is not Hermitian")
    return op


def expectation(rho: State, placements: Mapping[PartyLabel, np.ndarray | str]) -> float:
    """Tr(rho * O) where O places the given single-qubit observables.

    Unplaced parties carry the identity.  An observable may be passed as a
    2x2 matrix or as a Pauli axis name (``"x"``, ``"y"``, ``"z"``).
    """
    rho = as_density(rho)
    n = rho.qubit_count
    if not placements:
        raise StateError("placements must not be empty")
    ops = [IDENTITY] * n
    seen: set[int] = set()
    for label, op in placements.items():
        i = party_index(label, n)
        if i in seen:
            raise StateError(f"party {label!r} placed twice")
        seen.add(i)
        ops[i] = PAULI[op] if isinstance(op, str) else _check_observable(op)
    full = ops[0]
    for op in ops[1:]:
        full = np.kron(full, op)
    # Tr(rho O) without forming the product
    return float(np.real(np.sum(rho.entries * full.T)))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    # round-off eigenvalues would contribute ~1e-8 after the square root
    w = np.where(w > EIG_FLOOR, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def _check_physical(rho: DensityMatrix) -> None:
    lo = rho.eigenvalues().min()
    if lo < PSD_TOL:
        raise StateError(f"state is not physical (eigenvalue {lo!r})")


def fidelity(rho1: State, rho2: State) -> float:
    """Root fidelity Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)), in [0, 1].

    For two pure states this equals ``|<psi|phi>|``.
    """
    rho1, rho2 = as_density(rho1), as_density(rho2)
    if rho1.entries.shape != rho2.entries.shape:
        raise StateError("fidelity needs states of equal dimension")
    _check_physical(rho1)
    _check_physical(rho2)
    # nuclear norm of sqrt(rho1) sqrt(rho2) avoids a second matrix square root
    sv = np.linalg.svd(_psd_sqrt(rho1.entries) @ _psd_sqrt(rho2.entries), compute_uv=False)
    return float(min(1.0, np.sum(sv)))


def project_to_simplex(values: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    v = np.asarray(values, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    j = np.arange(1, v.size + 1)
    k = j[u - css / j > 0][-1]
    tau = css[k - 1] / k
    return np.clip(v - tau, 0.0, None)


def nearest_physical_state(m: np.ndarray | DensityMatrix) -> DensityMatrix:
    """Closest density matrix (Frobenius norm) to a Hermitian unit-trace matrix.

    Eigenvalues are projected onto the probability simplex by shifting and
    clipping; eigenvectors are kept.
    """
    a = m.entries if isinstance(m, DensityMatrix) else np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise StateError(f"expected a square matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.conj().T)) > 1e-8:
        raise StateError("matrix is not Hermitian")
    tr = np.trace(a).real
    if abs(tr - 1.0) > 1e-6:
        raise StateError(f"matrix trace is {tr!r}, expected 1 within 1e-6")
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    p = project_to_simplex(w)
    return DensityMatrix((v * p) @ v.conj().T)


# --- JSON interchange -------------------------------------------------------


def _encode_complex(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def state_to_dict(state: State) -> dict:
    """Interchange form: complex numbers as ``[re, im]``, matrices row-major."""
    if isinstance(state, Ket):
        return {
            "kind": "ket",
            "qubit_count": state.qubit_count,
            "amplitudes": [_encode_complex(z) for z in state.amplitudes],
        }
    return {
        "kind": "density_matrix",
        "qubit_count": state.qubit_count,
        "entries": [[_encode_complex(z) for z in row] for row in state.entries],
    }


def _decode(values) -> np.ndarray:
    a = np.asarray(values, dtype=float)
    if a.shape[-1] != 2:
        raise StateError("complex numbers must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def state_from_dict(data: Mapping) -> State:
    kind = data.get("kind")
    if kind == "ket":
        state: State = Ket(_decode(data["amplitudes"]))
    elif kind == "density_matrix":
        state = DensityMatrix(_decode(data["entries"]))
    else:
        raise StateError(f"unknown state kind {kind!r}")
    if "qubit_count" in data and data["qubit_count"] != state.qubit_count:
        raise StateError("qubit_count does not match the data")
    return state
