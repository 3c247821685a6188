"""Operator Schmidt decompositions of bipartite operators.

Operators are treated as Hilbert-Schmidt supervectors with the inner
product ``<A|B> = Tr A†B``.  A bipartite operator ``X`` on C^d1 ⊗ C^d2 is
realigned into a ``d1² x d2²`` matrix whose SVD gives the general operator
Schmidt decomposition.  The Hermitian variant follows the reduced
superoperator route: diagonalize ``R R†``, pick a basis of each
characteristic subspace that is fixed by the adjoint involution ``A -> A†``,
and recover the second factors by partial HS inner products.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvariantError, NotATwinError, NumericalError, PreconditionError
from .linalg import (
    DEFAULT_TOL,
    BipartiteState,
    dagger,
    group_sorted,
    is_hermitian,
    is_projector,
    ptrace,
    svd,
)

#: Relative gap below which Schmidt coefficients are handled as one cluster
#: by :func:`hermitian_osd`.  Clusters are re-diagonalized exactly, so a
#: loose value only costs a slightly larger eigenproblem.
CLUSTER_TOL = 1e-6


def hs_inner(a, b) -> complex:
    """``Tr(a† b)``."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"supervector shapes differ: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def hs_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def realign_matrix(x, d1: int, d2: int) -> np.ndarray:
    """``R[(i1,j1),(i2,j2)] = X[(i1,i2),(j1,j2)]``."""
    x = np.asarray(x)
    if x.shape != (d1 * d2, d1 * d2):
        raise DimensionError(f"operator must be {d1 * d2}x{d1 * d2}, got {x.shape}")
    return x.reshape(d1, d2, d1, d2).transpose(0, 2, 1, 3).reshape(d1 * d1, d2 * d2)


def realign(s: BipartiteState) -> np.ndarray:
    return realign_matrix(s.rho, s.d1, s.d2)


def unrealign(r, d1: int, d2: int) -> np.ndarray:
    return np.asarray(r).reshape(d1, d1, d2, d2).transpose(0, 2, 1, 3).reshape(d1 * d2, d1 * d2)


# -- sign conventions ---------------------------------------------------------

def _reference_entry(a: np.ndarray, rel: float = 1e-9):
    """Entry used to fix the sign or phase of a factor operator.

    Largest-magnitude diagonal entry (first on ties); if the diagonal
    vanishes, the first largest-magnitude entry of the strict lower triangle.
    """
    mags = np.abs(a)
    top = mags.max()
    if top == 0:
        return 0.0
    diag = np.diag(mags)
    if diag.max() > rel * top:
        k = int(np.flatnonzero(diag >= diag.max() * (1 - rel))[0])
        return a[k, k]
    low = np.tril(mags, -1)
    idx = np.flatnonzero(low.ravel() >= low.max() * (1 - rel))[0]
    return a.ravel()[idx]


def hermitian_sign(a: np.ndarray) -> float:
    """``±1`` making the reference entry of a Hermitian operator positive.

    The reference entry is real on the diagonal; off the diagonal its real
    part decides, and its imaginary part when the real part vanishes.
    """
    z = _reference_entry(a)
    scale = abs(z)
    if scale == 0:
        return 1.0
    if abs(z.real) > 1e-9 * scale:
        return 1.0 if z.real > 0 else -1.0
    return 1.0 if z.imag > 0 else -1.0


def canonical_phase(a: np.ndarray) -> complex:
    """Unit phase rotating the first largest-magnitude entry of ``a`` to positive real."""
    flat = np.asarray(a).ravel()
    mags = np.abs(flat)
    if mags.max() == 0:
        return 1.0 + 0j
    z = flat[int(np.flatnonzero(mags >= mags.max() * (1 - 1e-9))[0])]
    return np.conj(z) / abs(z)


# -- decomposition containers -----------------------------------------------

@dataclass
class SchmidtTerm:
    coeff: float
    op_a: np.ndarray
    op_b: np.ndarray
    group: int = 0

    def operator(self) -> np.ndarray:
        return self.coeff * np.kron(self.op_a, self.op_b)


@dataclass
class SchmidtDecomp:
    """``sum_k coeff_k A_k ⊗ B_k`` approximating the normalized supervector.

    ``norm`` is the HS norm of the decomposed operator, so
    ``norm * reconstruct()`` gives the operator back.  ``group_weights`` is
    filled only by :func:`weak_twin_osd`.
    """

    terms: list[SchmidtTerm]
    d1: int
    d2: int
    hermitian: bool = False
    norm: float = 1.0
    group_weights: tuple[float, ...] | None = field(default=None)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coeff for t in self.terms])

    def __len__(self):
        return len(self.terms)

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.d1 * self.d2,) * 2, dtype=complex)
        for t in self.terms:
            out += t.operator()
        return out

    def residual(self, x) -> float:
        """HS distance between the reconstruction and ``x / ||x||_HS``."""
        x = np.asarray(x)
        return hs_norm(self.reconstruct() - x / hs_norm(x))

    def gram(self, side: int) -> np.ndarray:
        ops = [t.op_a if side == 1 else t.op_b for t in self.terms]
        flat = np.array([o.ravel() for o in ops])
        return flat.conj() @ flat.T if ops else np.zeros((0, 0))


def _sort_terms(terms: list[SchmidtTerm]) -> list[SchmidtTerm]:
    return sorted(terms, key=lambda t: -t.coeff)


def osd_operator(x, d1: int, d2: int, tol: float = DEFAULT_TOL) -> SchmidtDecomp:
    """General operator Schmidt decomposition of an arbitrary operator ``x``.

    Terms with coefficient ``<= tol * (largest coefficient)`` are dropped.
    Each ``A_k`` is phase-fixed so its first largest-magnitude entry is
    positive real; ``B_k`` absorbs the compensating phase.
    """
    x = np.asarray(x, dtype=complex)
    norm = hs_norm(x)
    if norm == 0:
        raise ValueError("cannot decompose the zero operator")
    u, s, v = svd(realign_matrix(x / norm, d1, d2))
    terms = []
    for k in range(s.size):
        if s[k] <= tol * s[0]:
            break
        a = u[:, k].reshape(d1, d1)
        b = np.conj(v[:, k]).reshape(d2, d2)
        ph = canonical_phase(a)
        terms.append(SchmidtTerm(float(s[k]), a * ph, b / ph))
    return SchmidtDecomp(terms, d1, d2, hermitian=False, norm=norm)


def osd(s: BipartiteState, tol: float = DEFAULT_TOL) -> SchmidtDecomp:
    """General (possibly nonhermitian) operator Schmidt decomposition of a state."""
    return osd_operator(s.rho, s.d1, s.d2, tol)


# -- antilinear maps ----------------------------------------------------------

@dataclass(frozen=True)
class AntilinearMap:
    """The antilinear map ``x -> m @ conj(x)``."""

    m: np.ndarray

    @property
    def dim(self) -> int:
        return self.m.shape[0]

    def __call__(self, x):
        x = np.asarray(x)
        return (self.m @ np.conj(x.ravel())).reshape(x.shape)

    def compose(self, other: "AntilinearMap") -> np.ndarray:
        """Matrix of the *linear* map ``self ∘ other``."""
        return self.m @ np.conj(other.m)

    def is_involution(self, tol: float = 1e-10) -> bool:
        return np.linalg.norm(self.compose(self) - np.eye(self.dim)) <= tol


def adjoint_involution(d: int) -> AntilinearMap:
    """``A -> A†`` on row-major flattened ``d x d`` operators."""
    perm = np.arange(d * d).reshape(d, d).T.ravel()
    return AntilinearMap(np.eye(d * d, dtype=complex)[perm])


def invariant_basis(vectors, v: AntilinearMap, tol: float = 1e-9) -> list[np.ndarray]:
    """Orthonormal basis of ``span(vectors)`` made of fixed points of ``v``.

    ``v`` must be an antiunitary involution leaving the span invariant.
    Candidates ``e + v(e)`` and ``i(e - v(e))`` for ``e`` in an orthonormal
    basis of the span are orthonormalized by pivoted Gram-Schmidt; since
    inner products between fixed points are real, the result stays fixed.
    Output elements keep the shape of the inputs.
    """
    vectors = [np.asarray(x, dtype=complex) for x in vectors]
    if not vectors:
        return []
    shape = vectors[0].shape
    mat = np.array([x.ravel() for x in vectors]).T
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s[0] == 0:
        return []
    basis = u[:, s > 1e-12 * s[0]]
    n = basis.shape[1]

    images = np.column_stack([v(basis[:, k]) for k in range(n)])
    leak = images - basis @ (dagger(basis) @ images)
    if np.linalg.norm(leak, axis=0).max() > tol:
        raise InvariantError(
            f"subspace is not invariant under the involution (leak {np.linalg.norm(leak, axis=0).max():.2e})"
        )

    cands = np.column_stack([basis + images, 1j * (basis - images)])
    accepted: list[np.ndarray] = []
    for _ in range(n):
        resid = cands.copy()
        for e in accepted:
            resid -= np.outer(e, e.conj() @ resid)
        for e in accepted:
            resid -= np.outer(e, e.conj() @ resid)
        norms = np.linalg.norm(resid, axis=0)
        k = int(np.argmax(norms))
        if norms[k] <= tol:
            break
        e = resid[:, k] / norms[k]
        e = 0.5 * (e + v(e))
        accepted.append(e / np.linalg.norm(e))
    if len(accepted) != n:
        raise NumericalError(f"found {len(accepted)} fixed vectors for a {n}-dimensional subspace")
    return [e.reshape(shape) for e in accepted]


# -- Hermitian operator Schmidt decomposition ---------------------------------

def hermitian_osd(s: BipartiteState, tol: float = DEFAULT_TOL, *, cluster_tol: float = CLUSTER_TOL) -> SchmidtDecomp:
    """Hermitian operator Schmidt decomposition of a state.

    The reduced superoperator ``R R†`` of the normalized supervector is
    diagonalized through the SVD of ``R``.  Coefficients whose relative gaps
    are below ``cluster_tol`` form one characteristic cluster; each cluster
    gets a Hermitian basis from :func:`invariant_basis`, the partner
    operators come from ``Tr_1[(A ⊗ I) sigma]``, and a final real rotation
    inside the cluster diagonalizes it exactly.
    """
    d1, d2 = s.d1, s.d2
    norm = hs_norm(s.rho)
    sigma = s.rho / norm
    u, sv, _ = svd(realign_matrix(sigma, d1, d2))
    r = int(np.sum(sv > tol * sv[0]))
    inv = adjoint_involution(d1)
    terms = []
    for block in group_sorted(sv[:r], cluster_tol * sv[0]):
        herm = invariant_basis([u[:, k] for k in block], inv, tol=1e-7)
        a_ops = [hermitian_part_flat(h, d1) for h in herm]
        b_raw = [partial_hs(a, sigma, d1, d2) for a in a_ops]
        flat = np.array([b.ravel() for b in b_raw])
        gram = (flat.conj() @ flat.T).real
        w, o = np.linalg.eigh(gram)
        for j in np.argsort(w)[::-1]:
            c = float(np.sqrt(max(w[j], 0.0)))
            if c <= tol * sv[0]:
                continue
            a = sum(o[i, j] * a_ops[i] for i in range(len(a_ops)))
            b = sum(o[i, j] * b_raw[i] for i in range(len(a_ops))) / c
            sgn = hermitian_sign(a)
            terms.append(SchmidtTerm(c, sgn * a, sgn * 0.5 * (b + dagger(b))))
    terms = _sort_terms(terms)
    out = SchmidtDecomp(terms, d1, d2, hermitian=True, norm=norm)
    for t in terms:
        if not (is_hermitian(t.op_a, 1e-10) and is_hermitian(t.op_b, 1e-10)):
            raise NumericalError("hermitian_osd produced a non-Hermitian factor")
    return out


def hermitian_part_flat(x, d: int) -> np.ndarray:
    a = np.asarray(x).reshape(d, d)
    return 0.5 * (a + dagger(a))


def partial_hs(a, x, d1: int, d2: int) -> np.ndarray:
    """Partial HS inner product ``Tr_1[(A† ⊗ I) X]`` (a factor-2 operator)."""
    return ptrace(np.kron(dagger(np.asarray(a)), np.eye(d2)) @ x, d1, d2, 1)


# -- weak twins: nonhermitian continuation ------------------------------------

def cross_overlaps(first: SchmidtDecomp | list, second: list) -> tuple[float, float]:
    """Largest ``|Tr A†C|`` and ``|Tr B†D|`` between two lists of Schmidt terms."""
    first = first.terms if isinstance(first, SchmidtDecomp) else first
    worst_a = worst_b = 0.0
    for t in first:
        for u in second:
            worst_a = max(worst_a, abs(hs_inner(t.op_a, u.op_a)))
            worst_b = max(worst_b, abs(hs_inner(t.op_b, u.op_b)))
    return worst_a, worst_b


def weak_twin_osd(s: BipartiteState, p1, tol: float = 1e-9) -> SchmidtDecomp:
    """Schmidt decomposition continued through a twin projector.

    ``rho = P1 rho + P1⊥ rho``; each term is decomposed separately (general
    SVD route) and the two lists are concatenated.  Term ``group`` is 0 for
    the ``P1`` part and 1 for the ``P1⊥`` part; ``group_weights`` holds the
    squared HS weight of each part in the normalized supervector.  Raises
    :class:`NotATwinError` when the two groups are not biorthogonal, which
    happens exactly when ``P1`` has no twin projector.
    """
    p1 = np.asarray(p1, dtype=complex)
    d1, d2 = s.d1, s.d2
    if p1.shape != (d1, d1):
        raise DimensionError(f"p1 must be {d1}x{d1}, got {p1.shape}")
    if not is_projector(p1, 1e-10):
        raise PreconditionError("p1 is not an orthogonal projector")
    norm = hs_norm(s.rho)
    big_p = np.kron(p1, np.eye(d2))
    parts = [big_p @ s.rho, s.rho - big_p @ s.rho]
    groups = []
    weights = []
    for g, x in enumerate(parts):
        xn = hs_norm(x)
        weights.append((xn / norm) ** 2)
        if xn <= tol * norm:
            groups.append([])
            continue
        dec = osd_operator(x, d1, d2, tol)
        groups.append([SchmidtTerm(t.coeff * xn / norm, t.op_a, t.op_b, group=g) for t in dec.terms])
    ca, cb = cross_overlaps(groups[0], groups[1])
    if max(ca, cb) > tol:
        raise NotATwinError(f"P1 is not a twin projector: cross-group overlaps {ca:.2e} / {cb:.2e}")
    return SchmidtDecomp(_sort_terms(groups[0] + groups[1]), d1, d2, False, norm, tuple(weights))
