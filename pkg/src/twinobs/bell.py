"""Two-qubit states with maximally disordered subsystems (MDS).

Every MDS state is locally unitarily equivalent to

    T(t) = (1/4) (I⊗I + sum_i t_i sigma_i⊗sigma_i),

which is a state iff ``t`` lies in the tetrahedron spanned by the t-vectors
of the four Bell states.  Basis convention: ``|+> = (1, 0)``, ``|-> = (0, 1)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import NotAStateError, NumericalError, PreconditionError
from .linalg import PAULI, BipartiteState, dagger, partial_trace
from .schmidt import SchmidtDecomp, SchmidtTerm

_R2 = 1 / np.sqrt(2)

#: Bell vectors in the composite basis |++>, |+->, |-+>, |-->.
BELL_VECTORS = {
    0: np.array([0, 1, -1, 0], dtype=complex) * _R2,
    1: np.array([1, 0, 0, -1], dtype=complex) * _R2,
    2: np.array([1, 0, 0, 1], dtype=complex) * _R2,
    3: np.array([0, 1, 1, 0], dtype=complex) * _R2,
}

#: Correlation vector t of each Bell state; index order (1, 2, 3, 0).
BELL_T = {
    1: np.array([-1.0, 1.0, 1.0]),
    2: np.array([1.0, -1.0, 1.0]),
    3: np.array([1.0, 1.0, -1.0]),
    0: np.array([-1.0, -1.0, -1.0]),
}
WEIGHT_ORDER = (1, 2, 3, 0)
_SIGNS = np.array([BELL_T[k] for k in WEIGHT_ORDER])  # rows s_k

UNIT_TOL = 1e-9


def bell_state(k: int) -> BipartiteState:
    if k not in BELL_VECTORS:
        raise ValueError(f"Bell index must be 0, 1, 2 or 3, got {k!r}")
    v = BELL_VECTORS[k]
    return BipartiteState(np.outer(v, v.conj()), 2, 2)


def t_matrix(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return 0.25 * (np.eye(4) + sum(t[i] * np.kron(PAULI[i + 1], PAULI[i + 1]) for i in range(3)))


def weights_to_t(w) -> np.ndarray:
    """``(w1, w2, w3, w0) -> t``: the t-vector of ``sum_k w_k T_k``."""
    w = np.asarray(w, dtype=float)
    if w.shape != (4,):
        raise ValueError("weights must be a 4-vector (w1, w2, w3, w0)")
    return w @ _SIGNS


def t_to_weights(t, tol: float = 1e-12) -> tuple[np.ndarray, bool]:
    """Inverse of :func:`weights_to_t`; ``w_k = (1 + s_k . t) / 4``.

    Returns the weights and whether ``t`` lies in the tetrahedron.
    """
    t = np.asarray(t, dtype=float)
    if t.shape != (3,):
        raise ValueError("t must be a 3-vector")
    w = 0.25 * (1.0 + _SIGNS @ t)
    return w, bool(np.all(w >= -tol))


def correlation_matrix(s: BipartiteState) -> np.ndarray:
    """``C_ij = Tr[rho sigma_i ⊗ sigma_j]`` for a two-qubit state."""
    if s.dims != (2, 2):
        raise PreconditionError("correlation matrix needs a two-qubit state")
    return np.array([[np.trace(s.rho @ np.kron(PAULI[i], PAULI[j])).real for j in range(1, 4)]
                     for i in range(1, 4)])


def state_from_t(t, tol: float = 1e-12) -> BipartiteState:
    w, inside = t_to_weights(t, tol)
    if not inside:
        k = int(np.argmin(w))
        raise NotAStateError(
            f"t = {np.asarray(t, float).tolist()} is outside the tetrahedron: weight w{WEIGHT_ORDER[k]} = {w[k]:.6g} < 0",
            eigenvalues=np.sort(w)[::-1],
        )
    return BipartiteState(t_matrix(t), 2, 2)


@dataclass(frozen=True)
class BellMixture:
    """A Bell-diagonal state in both coordinate systems."""

    weights: tuple[float, float, float, float]
    t: tuple[float, float, float]

    @classmethod
    def from_weights(cls, w) -> "BellMixture":
        w = np.asarray(w, dtype=float)
        if w.shape != (4,) or np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-10:
            raise NotAStateError(f"weights {list(w)} are not a probability vector")
        return cls(tuple(w), tuple(weights_to_t(w)))

    @classmethod
    def from_t(cls, t) -> "BellMixture":
        w, inside = t_to_weights(t)
        if not inside:
            state_from_t(t)  # raises with the violated weight
        return cls(tuple(w), tuple(float(x) for x in t))

    @property
    def rank(self) -> int:
        return int(np.sum(np.asarray(self.weights) > 1e-12))

    def state(self) -> BipartiteState:
        return state_from_t(self.t)


# -- binary-mixture recognition -----------------------------------------------

class MixtureKind(str, enum.Enum):
    PURE_BELL = "pure_bell"
    BINARY_NONSINGLET = "binary_nonsinglet"
    BINARY_SINGLET = "binary_singlet"
    HIGHER_RANK = "higher_rank"


@dataclass
class MixtureClass:
    """Classification of a tetrahedron point by the number of ``|t_i| = 1``.

    ``axis`` (1..3) is the distinguished axis of a binary mixture, ``bell``
    the Bell index of a pure one.  ``terms`` lists ``(weight, bell index)``
    for binary mixtures.  ``margins`` holds ``|t_i| - 1`` so callers can see
    how close each component is to the unit decision.
    """

    kind: MixtureKind
    axis: int | None = None
    bell: int | None = None
    terms: list[tuple[float, int]] | None = None
    margins: tuple[float, float, float] = (0.0, 0.0, 0.0)


def _cyc(i: int, shift: int) -> int:
    return (i - 1 + shift) % 3 + 1


def classify_mixture(m: BellMixture, tol: float = UNIT_TOL) -> MixtureClass:
    t = np.asarray(m.t, dtype=float)
    margins = tuple(float(x) for x in np.abs(t) - 1.0)
    unit = np.abs(np.abs(t) - 1.0) <= tol
    n_unit = int(unit.sum())
    if n_unit == 3:
        signs = np.sign(t)
        for k, tk in BELL_T.items():
            if np.array_equal(signs, tk):
                return MixtureClass(MixtureKind.PURE_BELL, bell=k, margins=margins)
        raise NotAStateError(f"sign pattern {signs} with all |t_i| = 1 is not a state")
    if n_unit == 0:
        return MixtureClass(MixtureKind.HIGHER_RANK, margins=margins)
    if n_unit == 2:
        raise NotAStateError(f"t = {t.tolist()} has exactly two unit components; not a state")
    i = int(np.flatnonzero(unit)[0]) + 1
    j, k = _cyc(i, 1), _cyc(i, 2)
    tj, tk = t[j - 1], t[k - 1]
    if t[i - 1] > 0:
        if abs(tk + tj) > max(tol, 1e-9):
            raise NotAStateError(f"t_{i} = +1 requires t_{k} = -t_{j}; got {tj}, {tk}")
        terms = [((1 - tj) / 2, j), ((1 - tk) / 2, k)]
        return MixtureClass(MixtureKind.BINARY_NONSINGLET, axis=i, terms=terms, margins=margins)
    if abs(tk - tj) > max(tol, 1e-9):
        raise NotAStateError(f"t_{i} = -1 requires t_{j} = t_{k}; got {tj}, {tk}")
    terms = [((1 + tj) / 2, i), ((1 - tj) / 2, 0)]
    return MixtureClass(MixtureKind.BINARY_SINGLET, axis=i, terms=terms, margins=margins)


# -- explicit twins -----------------------------------------------------------

@dataclass(frozen=True)
class TwinFamily:
    """``A1 = alpha I + beta sigma_axis``, ``A2 = alpha I + sign * beta sigma_axis``."""

    axis: int
    sign: int

    def pair(self, alpha: float = 0.0, beta: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        s = PAULI[self.axis]
        return alpha * PAULI[0] + beta * s, alpha * PAULI[0] + self.sign * beta * s


@dataclass(frozen=True)
class PureBellTwins:
    """Every ``A1`` is a twin for a Bell state; partners from :func:`bell_twin_partner`."""

    bell: int

    def pair(self, alpha: float = 0.0, beta=(0.0, 0.0, 1.0)) -> tuple[np.ndarray, np.ndarray]:
        beta = np.asarray(beta, dtype=float)
        a1 = alpha * PAULI[0] + sum(beta[i] * PAULI[i + 1] for i in range(3))
        return a1, bell_twin_partner(self.bell, beta, alpha)


def mixture_twins(c: MixtureClass) -> TwinFamily | PureBellTwins | None:
    """Nontrivial twin family of a classified tetrahedron point, if any."""
    if c.kind is MixtureKind.BINARY_NONSINGLET:
        return TwinFamily(c.axis, +1)
    if c.kind is MixtureKind.BINARY_SINGLET:
        return TwinFamily(c.axis, -1)
    if c.kind is MixtureKind.PURE_BELL:
        return PureBellTwins(c.bell)
    return None


def bell_twin_partner(k: int, beta, alpha: float = 0.0) -> np.ndarray:
    """Twin of ``A1 = alpha I + beta . sigma`` for the Bell state ``T_k``.

    ``A2 = alpha I + sum_i s_ki beta_i sigma_i`` with ``s_k`` the t-vector
    signs of ``T_k``.
    """
    beta = np.asarray(beta, dtype=float)
    signs = BELL_T[k]
    return alpha * PAULI[0] + sum(signs[i] * beta[i] * PAULI[i + 1] for i in range(3))


def bell_diagonal_schmidt(m: BellMixture, tol: float = 1e-12) -> SchmidtDecomp:
    """Closed-form Hermitian Schmidt decomposition of ``T(t)``.

    Coefficients ``(1 + |t|²)^(-1/2)`` for ``(I/√2, I/√2)`` and
    ``|t_i| (1 + |t|²)^(-1/2)`` for ``(sigma_i/√2, sg(t_i) sigma_i/√2)``;
    components with ``|t_i| <= tol`` are omitted.
    """
    t = np.asarray(m.t, dtype=float)
    r0 = 1.0 / np.sqrt(1.0 + t @ t)
    terms = [SchmidtTerm(r0, PAULI[0] * _R2, PAULI[0] * _R2)]
    for i in range(3):
        if abs(t[i]) > tol:
            terms.append(SchmidtTerm(abs(t[i]) * r0, PAULI[i + 1] * _R2, np.sign(t[i]) * PAULI[i + 1] * _R2))
    terms.sort(key=lambda term: -term.coeff)
    return SchmidtDecomp(terms, 2, 2, hermitian=True, norm=0.5 * np.sqrt(1.0 + t @ t))


# -- normal form ----------------------------------------------------------------

@dataclass
class MDSNormalForm:
    u1: np.ndarray
    u2: np.ndarray
    t: np.ndarray
    residual: float


def su2_from_rotation(r: np.ndarray) -> np.ndarray:
    """A unitary ``U`` with ``U sigma_i U† = sum_j R_ji sigma_j``.

    It is the SU(2) lift times a global phase that makes the first nonzero
    entry positive real.
    """
    x, y, z, w = Rotation.from_matrix(r).as_quat()
    u = w * PAULI[0] - 1j * (x * PAULI[1] + y * PAULI[2] + z * PAULI[3])
    flat = u.ravel()
    lead = flat[int(np.flatnonzero(np.abs(flat) > 1e-12)[0])]
    return u * (np.conj(lead) / abs(lead))


def mds_normal_form(s: BipartiteState, tol: float = 1e-8) -> MDSNormalForm:
    """Local unitaries bringing an MDS state to ``T(t)``.

    The correlation matrix is diagonalized by two proper rotations.  Signs
    are folded so all components of ``t`` carry the sign of ``det C``.
    """
    if s.dims != (2, 2):
        raise PreconditionError("mds_normal_form needs a two-qubit state")
    half = 0.5 * np.eye(2)
    dev = max(np.abs(partial_trace(s, 2) - half).max(), np.abs(partial_trace(s, 1) - half).max())
    if dev > tol:
        raise PreconditionError(f"state is not MDS: reduced states deviate from I/2 by {dev:.2e}")
    c = correlation_matrix(s)
    u, d, vt = np.linalg.svd(c)
    sgn = 1.0 if np.linalg.det(u) * np.linalg.det(vt) > 0 else -1.0
    u, d = sgn * u, sgn * d
    if np.linalg.det(u) < 0:
        flip = np.diag([1.0, 1.0, -1.0])
        u, vt = u @ flip, flip @ vt
    u1, u2 = su2_from_rotation(u.T), su2_from_rotation(vt)
    big = np.kron(u1, u2)
    residual = float(np.linalg.norm(big @ s.rho @ dagger(big) - t_matrix(d)))
    if residual > tol:
        raise NumericalError(f"normal form verification residual {residual:.2e} exceeds {tol:g}")
    return MDSNormalForm(u1, u2, d, residual)


# -- tetrahedron sweep ----------------------------------------------------------

#: Twin-space dimension by number of Bell states in the mixture.
EXPECTED_TWIN_DIM = {1: 4, 2: 2, 3: 1, 4: 1}


def tetrahedron_grid(n: int) -> list[tuple[float, float, float, float]]:
    """All weight vectors ``(a, b, c, d) / n`` with nonnegative integers summing to ``n``.

    Lexicographic in ``(a, b, c)``; ``n`` points per edge including both vertices
    means ``n + 1`` grid values, so vertices, edges, faces and the interior are
    all sampled.
    """
    if n < 1:
        raise ValueError("grid size must be a positive integer")
    return [(a / n, b / n, c / n, (n - a - b - c) / n)
            for a in range(n + 1) for b in range(n + 1 - a) for c in range(n + 1 - a - b)]


@dataclass
class SweepPoint:
    index: int
    weights: tuple[float, float, float, float]
    t: tuple[float, float, float]
    rank: int
    dim: int
    decision: object

    @property
    def expected_dim(self) -> int:
        return EXPECTED_TWIN_DIM[self.rank]

    @property
    def ok(self) -> bool:
        return self.dim == self.expected_dim


def sweep(n: int, tol: float = 1e-9, jobs: int = 1) -> list[SweepPoint]:
    """Twin-space dimension over :func:`tetrahedron_grid`, ordered by grid index."""
    from concurrent.futures import ThreadPoolExecutor

    from .twins import twin_space

    def run(item):
        k, w = item
        m = BellMixture.from_weights(w)
        tb = twin_space(m.state(), tol)
        return SweepPoint(k, m.weights, m.t, m.rank, tb.dim, tb.decision)

    items = list(enumerate(tetrahedron_grid(n)))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, items))
    return [run(it) for it in items]
