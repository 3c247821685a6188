"""Dense complex matrix kernel.

Every operator in the package is a plain ``numpy.ndarray``.  Bipartite
operators use the composite index ``i = i1 * d2 + i2`` (factor 1 major),
which is what ``numpy.kron`` produces.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, NotAStateError, NumericalError

DEFAULT_TOL = 1e-10
#: Positivity / trace tolerance used when a state is constructed from raw numbers.
STATE_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
#: ``PAULI[0]`` is the identity, ``PAULI[1:]`` are sigma_1, sigma_2, sigma_3.
PAULI = (I2, SX, SY, SZ)


def as_matrix(m, name="matrix") -> np.ndarray:
    """Coerce to a finite 2-d complex array."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def is_hermitian(m, tol: float = 1e-12) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    return float(np.max(np.abs(m - dagger(m)), initial=0.0)) <= tol * scale


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dagger(m))


def is_projector(p, tol: float = 1e-10) -> bool:
    p = np.asarray(p, dtype=complex)
    return is_hermitian(p, tol) and np.linalg.norm(p @ p - p) <= tol * max(1.0, np.linalg.norm(p))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def tensor(a, b) -> np.ndarray:
    """Kronecker product with composite row index ``i1 * rows(b) + i2``."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def lift(op: np.ndarray, which: int, d1: int, d2: int) -> np.ndarray:
    """Embed a factor operator into the composite space (``A⊗I`` or ``I⊗A``)."""
    if which == 1:
        if op.shape != (d1, d1):
            raise DimensionError(f"factor-1 operator must be {d1}x{d1}, got {op.shape}")
        return np.kron(op, np.eye(d2))
    if which == 2:
        if op.shape != (d2, d2):
            raise DimensionError(f"factor-2 operator must be {d2}x{d2}, got {op.shape}")
        return np.kron(np.eye(d1), op)
    raise ValueError(f"which must be 1 or 2, got {which!r}")


def ptrace(m: np.ndarray, d1: int, d2: int, which: int) -> np.ndarray:
    """Partial trace of an arbitrary composite operator.

    ``which=1`` traces out factor 1 and returns a ``d2 x d2`` operator;
    ``which=2`` traces out factor 2 and returns a ``d1 x d1`` operator.
    """
    t = np.asarray(m).reshape(d1, d2, d1, d2)
    if which == 1:
        return np.einsum("ajak->jk", t)
    if which == 2:
        return np.einsum("iaja->ij", t)
    raise ValueError(f"which must be 1 or 2, got {which!r}")


class BipartiteState:
    """A density operator on C^d1 ⊗ C^d2.

    The matrix is validated on construction: Hermitian, eigenvalues not
    below ``-tol`` and trace within ``tol`` of one.  The stored matrix is
    the exact Hermitian part of the input.
    """

    __slots__ = ("rho", "d1", "d2")

    def __init__(self, rho, d1: int, d2: int, *, tol: float = STATE_TOL):
        rho = as_matrix(rho, "rho")
        d1, d2 = int(d1), int(d2)
        if d1 < 1 or d2 < 1:
            raise DimensionError("factor dimensions must be positive")
        n = d1 * d2
        if rho.shape != (n, n):
            raise DimensionError(f"rho must be {n}x{n} for dims ({d1}, {d2}), got {rho.shape}")
        if not is_hermitian(rho, tol):
            raise NotAStateError("rho is not Hermitian")
        rho = hermitian_part(rho)
        evals = np.linalg.eigvalsh(rho)
        if evals[0] < -tol:
            raise NotAStateError(
                f"rho is not positive: smallest eigenvalue {evals[0]:.3e}", eigenvalues=evals[::-1]
            )
        tr = np.trace(rho).real
        if abs(tr - 1.0) > tol:
            raise NotAStateError(f"rho does not have unit trace: Tr rho = {tr!r}", eigenvalues=evals[::-1])
        self.rho = rho
        self.d1 = d1
        self.d2 = d2

    @classmethod
    def from_vector(cls, phi, d1: int, d2: int) -> "BipartiteState":
        phi = np.asarray(phi, dtype=complex).ravel()
        phi = phi / np.linalg.norm(phi)
        return cls(np.outer(phi, phi.conj()), d1, d2)

    @classmethod
    def product(cls, rho1, rho2) -> "BipartiteState":
        rho1, rho2 = as_matrix(rho1), as_matrix(rho2)
        return cls(np.kron(rho1, rho2), rho1.shape[0], rho2.shape[0])

    @classmethod
    def mixture(cls, weights, states) -> "BipartiteState":
        states = list(states)
        d1, d2 = states[0].d1, states[0].d2
        if any((s.d1, s.d2) != (d1, d2) for s in states):
            raise DimensionError("all mixture terms must share factor dimensions")
        rho = sum(w * s.rho for w, s in zip(weights, states))
        return cls(rho, d1, d2)

    @property
    def dims(self) -> tuple[int, int]:
        return self.d1, self.d2

    def reduced(self, keep: int) -> np.ndarray:
        """Reduced operator of factor ``keep`` (1 or 2)."""
        return ptrace(self.rho, self.d1, self.d2, 2 if keep == 1 else 1)

    def conjugated(self, u1, u2) -> "BipartiteState":
        """The state ``(U1⊗U2) rho (U1⊗U2)†``."""
        u = np.kron(u1, u2)
        return BipartiteState(u @ self.rho @ dagger(u), self.d1, self.d2)

    def __repr__(self):
        return f"BipartiteState(d1={self.d1}, d2={self.d2})"


def partial_trace(s: BipartiteState, which: int) -> np.ndarray:
    """Trace out factor ``which``: returns rho_2 for ``which=1`` and rho_1 for ``which=2``."""
    return hermitian_part(ptrace(s.rho, s.d1, s.d2, which))


class Spectrum(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray
    blocks: list


def group_sorted(values, tol: float) -> list[np.ndarray]:
    """Split a descending sequence into runs whose consecutive gaps are ``<= tol``."""
    values = np.asarray(values)
    if values.size == 0:
        return []
    blocks, start = [], 0
    for k in range(1, values.size):
        if values[k - 1] - values[k] > tol:
            blocks.append(np.arange(start, k))
            start = k
    blocks.append(np.arange(start, values.size))
    return blocks


def eigh(h, tol: float = DEFAULT_TOL) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    ``blocks`` lists index arrays of eigenvalues whose sorted gaps are
    within ``tol * max(1, ||H||)``.
    """
    h = as_matrix(h, "h")
    if not is_hermitian(h, max(tol, 1e-12)):
        raise ValueError("eigh requires a Hermitian matrix")
    h = hermitian_part(h)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    w, v = w[::-1], v[:, ::-1]
    scale = max(1.0, float(np.linalg.norm(h, 2))) if h.size else 1.0
    if h.size and np.linalg.norm(h @ v - v * w, axis=0).max() > max(tol, 1e-13) * scale:
        raise NumericalError("eigendecomposition residual exceeds tolerance")
    return Spectrum(w, v, group_sorted(w, tol * scale))


def spectral_decomposition(h, tol: float = DEFAULT_TOL) -> list[tuple[float, np.ndarray]]:
    """Distinct eigenvalues (descending) and their spectral projectors."""
    eig = eigh(h, tol)
    out = []
    for block in eig.blocks:
        vecs = eig.vectors[:, block]
        out.append((float(np.mean(eig.values[block])), vecs @ dagger(vecs)))
    return out


def range_basis(h, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal columns spanning the eigenvectors of a PSD matrix with eigenvalue > tol·λmax."""
    eig = eigh(h, tol)
    top = max(float(eig.values[0]), 0.0)
    keep = eig.values > tol * max(top, 1e-300)
    return eig.vectors[:, keep]


def range_projector(h, tol: float = DEFAULT_TOL) -> np.ndarray:
    w = range_basis(h, tol)
    return w @ dagger(w)


def svd(m):
    """Thin SVD ``M = U diag(s) V†`` with ``s`` descending.  Returns ``(U, s, V)``."""
    m = as_matrix(m, "m")
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    return u, s, dagger(vh)


@dataclass(frozen=True)
class RankDecision:
    """Audit record for a singular-value cutoff.

    ``above`` is the smallest singular value kept, ``below`` the largest one
    discarded; ``gap`` is their ratio (``inf`` when nothing, or only exact
    zeros, were discarded).
    """

    cutoff: float
    rank: int
    above: float | None
    below: float | None

    @property
    def gap(self) -> float:
        if self.above is None:
            return float("nan")
        if self.below is None or self.below == 0.0:
            return float("inf")
        return self.above / self.below

    def as_dict(self) -> dict:
        return {
            "cutoff": self.cutoff,
            "rank": self.rank,
            "smallest_kept": self.above,
            "largest_dropped": self.below,
            "gap": self.gap,
        }


def rank_decision(singular_values, tol: float, n: int | None = None) -> RankDecision:
    """Decide how many of ``singular_values`` exceed ``tol * max``.

    ``n`` pads the list with exact zeros up to length ``n`` (the column count
    of a wide matrix).
    """
    s = np.sort(np.asarray(singular_values, dtype=float))[::-1]
    if n is not None and n > s.size:
        s = np.concatenate([s, np.zeros(n - s.size)])
    smax = float(s[0]) if s.size else 0.0
    cutoff = tol * smax
    kept = s[s > cutoff] if smax > 0 else s[:0]
    dropped = s[kept.size:]
    return RankDecision(
        cutoff=cutoff,
        rank=int(kept.size),
        above=float(kept[-1]) if kept.size else None,
        below=float(dropped[0]) if dropped.size else None,
    )


def kernel(a, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, RankDecision]:
    """Orthonormal kernel basis of a real matrix plus the rank decision behind it."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DimensionError("nullspace_real expects a 2-d array")
    m, n = a.shape
    if m == 0:
        return np.eye(n), RankDecision(0.0, 0, None, None)
    try:
        _, s, vt = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    decision = rank_decision(s, tol, n)
    return vt[decision.rank:].T.copy(), decision


def nullspace_real(a, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of ``{x : ||Ax|| <= tol * sigma_max}``."""
    return kernel(a, tol)[0]
