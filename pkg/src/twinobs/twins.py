"""Twin observables: solving, classifying and using ``A1 rho = A2 rho``.

Throughout, ``A1`` stands for ``A1 ⊗ I`` and ``A2`` for ``I ⊗ A2``.  Only
the compression of an observable to the range of its reduced state (the
*detectable part*) matters for the twin relation, so solutions are
parameterized on the ranges and returned with zero nondetectable part.
"""
from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, NotATwinError, NotAStateError, NumericalError, PreconditionError, StrengthError
from .linalg import (
    BipartiteState,
    RankDecision,
    as_matrix,
    commutator,
    dagger,
    eigh,
    group_sorted,
    hermitian_part,
    is_hermitian,
    kernel,
    partial_trace,
    range_basis,
    range_projector,
)
from .schmidt import AntilinearMap

TWIN_TOL = 1e-8
KERNEL_TOL = 1e-9
MATCH_TOL = 1e-7


def _scale(*ops) -> float:
    return max([1.0] + [float(np.linalg.norm(o, 2)) for o in ops])


@dataclass
class TwinPair:
    """A candidate twin pair with its residual ``||A1 rho - A2 rho||_HS``.

    ``comm1``/``comm2`` are the HS norms of ``[A1, rho_1]`` and ``[A2, rho_2]``,
    which vanish for every genuine twin.
    """

    a1: np.ndarray
    a2: np.ndarray
    residual: float
    comm1: float
    comm2: float

    def is_twin(self, tol: float = TWIN_TOL) -> bool:
        return self.residual <= tol * _scale(self.a1, self.a2)


def verify_twin(s: BipartiteState, a1, a2) -> TwinPair:
    a1, a2 = as_matrix(a1, "a1"), as_matrix(a2, "a2")
    if a1.shape != (s.d1, s.d1) or a2.shape != (s.d2, s.d2):
        raise DimensionError(
            f"expected {s.d1}x{s.d1} and {s.d2}x{s.d2} operators, got {a1.shape} and {a2.shape}"
        )
    diff = np.kron(a1, np.eye(s.d2)) @ s.rho - np.kron(np.eye(s.d1), a2) @ s.rho
    rho1, rho2 = partial_trace(s, 2), partial_trace(s, 1)
    return TwinPair(
        a1,
        a2,
        float(np.linalg.norm(diff)),
        float(np.linalg.norm(commutator(a1, rho1))),
        float(np.linalg.norm(commutator(a2, rho2))),
    )


def range_projectors(s: BipartiteState, tol: float = KERNEL_TOL) -> tuple[np.ndarray, np.ndarray]:
    """``(Q1, Q2)``: projectors onto the ranges of the reduced states."""
    return range_projector(partial_trace(s, 2), tol), range_projector(partial_trace(s, 1), tol)


def hermitian_basis(r: int) -> list[np.ndarray]:
    """HS-orthonormal basis of the real space of ``r x r`` Hermitian matrices."""
    out = []
    for j in range(r):
        e = np.zeros((r, r), dtype=complex)
        e[j, j] = 1.0
        out.append(e)
    for j, k in itertools.combinations(range(r), 2):
        e = np.zeros((r, r), dtype=complex)
        e[j, k] = e[k, j] = 1 / np.sqrt(2)
        out.append(e)
        f = np.zeros((r, r), dtype=complex)
        f[j, k], f[k, j] = 1j / np.sqrt(2), -1j / np.sqrt(2)
        out.append(f)
    return out


@dataclass
class TwinBasis:
    """Real-linear basis of all twin pairs, compressed to the ranges.

    ``pairs[0]`` is always the trivial direction ``(Q1, Q2)`` (HS-normalized
    jointly).  ``decision`` records the singular-value cutoff that fixed
    the kernel dimension.
    """

    pairs: list[TwinPair]
    range_projectors: tuple[np.ndarray, np.ndarray]
    decision: RankDecision
    singular_values: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.pairs)

    @property
    def nontrivial(self) -> bool:
        return self.dim >= 2

    @property
    def gap(self) -> float:
        return self.decision.gap


def twin_space(s: BipartiteState, tol: float = KERNEL_TOL) -> TwinBasis:
    """Solve ``(A1 ⊗ I - I ⊗ A2) rho = 0`` over Hermitian pairs.

    ``A_i = W_i H_i W_i†`` with ``W_i`` an orthonormal basis of the range of
    ``rho_i`` and ``H_i`` Hermitian, giving ``rank(rho_1)² + rank(rho_2)²``
    real unknowns.  Real and imaginary parts of the equation are stacked
    and the kernel is taken at ``tol * sigma_max``.
    """
    d1, d2 = s.d1, s.d2
    w1 = range_basis(partial_trace(s, 2), tol)
    w2 = range_basis(partial_trace(s, 1), tol)
    h1, h2 = hermitian_basis(w1.shape[1]), hermitian_basis(w2.shape[1])
    ops1 = [w1 @ h @ dagger(w1) for h in h1]
    ops2 = [w2 @ h @ dagger(w2) for h in h2]
    cols = [(np.kron(a, np.eye(d2)) @ s.rho).ravel() for a in ops1]
    cols += [-(np.kron(np.eye(d1), b) @ s.rho).ravel() for b in ops2]
    m = np.column_stack(cols)
    system = np.vstack([m.real, m.imag])
    basis, decision = kernel(system, tol)
    sv = np.linalg.svd(system, compute_uv=False)

    n1 = len(ops1)
    trivial = np.concatenate([_identity_params(w1.shape[1]), _identity_params(w2.shape[1])])
    trivial /= np.linalg.norm(trivial)
    overlap = basis.T @ trivial
    if abs(np.linalg.norm(overlap) - 1.0) > 1e-6:
        raise NumericalError("trivial twin (Q1, Q2) is missing from the computed kernel")
    vecs = [trivial]
    if basis.shape[1] > 1:
        u, _, _ = np.linalg.svd(basis - np.outer(trivial, overlap), full_matrices=False)
        for k in range(basis.shape[1] - 1):
            x = u[:, k]
            lead = x[int(np.argmax(np.abs(x) >= np.abs(x).max() * (1 - 1e-9)))]
            vecs.append(x if lead > 0 else -x)

    pairs = []
    for x in vecs:
        a1 = hermitian_part(sum(c * o for c, o in zip(x[:n1], ops1)))
        a2 = hermitian_part(sum(c * o for c, o in zip(x[n1:], ops2)))
        pairs.append(verify_twin(s, a1, a2))
    q = (w1 @ dagger(w1), w2 @ dagger(w2))
    return TwinBasis(pairs, q, decision, sv)


def _identity_params(r: int) -> np.ndarray:
    # coordinates of I_r in hermitian_basis(r): ones on the diagonal elements
    return np.concatenate([np.ones(r), np.zeros(r * r - r)])


# -- spectra of twin pairs ----------------------------------------------------

class Strength(str, enum.Enum):
    STRONG = "strong"
    WEAK = "weak"
    PARTIAL = "partially_strong"


def _detectable_spectrum(a: np.ndarray, w: np.ndarray, tol: float):
    """Distinct eigenvalues of ``W† A W`` with their projectors lifted back by ``W``."""
    eig = eigh(dagger(w) @ a @ w, 1e-14)
    scale = _scale(a)
    out = []
    for block in group_sorted(eig.values, tol * scale):
        vals = eig.values[block]
        if vals.max() - vals.min() > 1e-12 * scale:
            warnings.warn(
                f"degenerate-spectrum collision: eigenvalues {vals.tolist()} merged at tolerance {tol:g}",
                stacklevel=3,
            )
        v = w @ eig.vectors[:, block]
        out.append((float(vals.mean()), v @ dagger(v)))
    return out


@dataclass
class SpectralPairing:
    """Common detectable spectrum of a twin pair.

    ``values[n]`` is the shared eigenvalue ``a_n`` (descending) and
    ``proj_pairs[n]`` the matching ``(P1^(n), P2^(n))``.  ``bijection`` maps
    the index of an eigenvalue of the detectable part of ``A1`` to the index
    of the equal eigenvalue of the detectable part of ``A2``; ``values_b``
    lists the latter in their own descending order.
    """

    values: list[float]
    proj_pairs: list[tuple[np.ndarray, np.ndarray]]
    bijection: dict[int, int]
    values_b: list[float]
    residuals: list[float]


def spectral_pairing(s: BipartiteState, p: TwinPair, tol: float = MATCH_TOL,
                     twin_tol: float = TWIN_TOL, range_tol: float = KERNEL_TOL) -> SpectralPairing:
    w1 = range_basis(partial_trace(s, 2), range_tol)
    w2 = range_basis(partial_trace(s, 1), range_tol)
    side1 = _detectable_spectrum(p.a1, w1, tol)
    side2 = _detectable_spectrum(p.a2, w2, tol)
    scale = _scale(p.a1, p.a2)
    unused = set(range(len(side2)))
    bijection = {}
    for k, (val, _) in enumerate(side1):
        best = min(unused, key=lambda l: abs(side2[l][0] - val), default=None)
        if best is None or abs(side2[best][0] - val) > tol * scale:
            raise NotATwinError(f"detectable eigenvalue {val:.10g} of A1 has no partner in A2")
        bijection[k] = best
        unused.discard(best)
    if unused:
        raise NotATwinError(
            f"detectable eigenvalues {[side2[l][0] for l in sorted(unused)]} of A2 have no partner in A1"
        )
    pairs, residuals = [], []
    for k, (val, proj1) in enumerate(side1):
        proj2 = side2[bijection[k]][1]
        tp = verify_twin(s, proj1, proj2)
        if not tp.is_twin(twin_tol):
            raise NotATwinError(f"spectral projectors for eigenvalue {val:.10g} are not twins "
                                f"(residual {tp.residual:.2e})")
        pairs.append((proj1, proj2))
        residuals.append(tp.residual)
    return SpectralPairing([v for v, _ in side1], pairs, bijection, [v for v, _ in side2], residuals)


class EigenStrength(NamedTuple):
    value: float
    strong: bool
    commutator: float


@dataclass
class TwinStrength:
    kind: Strength
    per_eigenvalue: list[EigenStrength]
    global_commutators: tuple[float, float]
    global_strong: bool


def classify_twin(s: BipartiteState, p: TwinPair, tol: float = TWIN_TOL) -> TwinStrength:
    """Strong / weak / partially strong, per detectable spectral projector.

    ``global_strong`` is the independent whole-operator test
    ``[A1, rho] = [A2, rho] = 0``; it agrees with ``kind == STRONG``.
    """
    if not p.is_twin(tol):
        raise NotATwinError(f"pair is not a twin pair (residual {p.residual:.2e})")
    pairing = spectral_pairing(s, p, twin_tol=tol)
    entries = []
    for val, (proj1, _) in zip(pairing.values, pairing.proj_pairs):
        c = float(np.linalg.norm(commutator(np.kron(proj1, np.eye(s.d2)), s.rho)))
        entries.append(EigenStrength(val, c <= tol, c))
    n_strong = sum(e.strong for e in entries)
    if n_strong == len(entries):
        kind = Strength.STRONG
    elif n_strong == 0:
        kind = Strength.WEAK
    else:
        kind = Strength.PARTIAL
    g1 = float(np.linalg.norm(commutator(np.kron(p.a1, np.eye(s.d2)), s.rho)))
    g2 = float(np.linalg.norm(commutator(np.kron(np.eye(s.d1), p.a2), s.rho)))
    return TwinStrength(kind, entries, (g1, g2), max(g1, g2) <= tol * _scale(p.a1, p.a2))


# -- strong twins and biorthogonal mixtures -----------------------------------

class MixtureTerm(NamedTuple):
    weight: float
    state: BipartiteState
    value: float
    projector: np.ndarray


def strong_twin_mixture(s: BipartiteState, p: TwinPair, tol: float = TWIN_TOL) -> list[MixtureTerm]:
    """Split ``rho`` along the spectral projectors of a strong twin pair.

    ``w_n = Tr rho P1^(n)`` and ``rho^(n) = P1^(n) rho / w_n``; terms with
    ``w_n <= tol`` are omitted.
    """
    strength = classify_twin(s, p, tol)
    if strength.kind is not Strength.STRONG:
        raise StrengthError(f"twin pair is {strength.kind.value}, not strong")
    pairing = spectral_pairing(s, p, twin_tol=tol)
    terms = []
    for val, (proj1, _) in zip(pairing.values, pairing.proj_pairs):
        big = np.kron(proj1, np.eye(s.d2))
        w = float(np.trace(big @ s.rho).real)
        if w <= tol:
            continue
        terms.append(MixtureTerm(w, BipartiteState(big @ s.rho @ big / w, s.d1, s.d2, tol=1e-8), val, proj1))
    return terms


def biorthogonality_residual(states) -> float:
    """Largest ``||rho_i^(n) rho_i^(m)||_2`` over ``n != m`` and both factors."""
    worst = 0.0
    reduced = [(partial_trace(st, 2), partial_trace(st, 1)) for st in states]
    for (a1, a2), (b1, b2) in itertools.combinations(reduced, 2):
        worst = max(worst, np.linalg.norm(a1 @ b1, 2), np.linalg.norm(a2 @ b2, 2))
    return float(worst)


# -- pure states --------------------------------------------------------------

@dataclass
class PureSchmidt:
    """``phi = sum_i coeffs[i] vecs1[:, i] ⊗ vecs2[:, i]`` with ``vecs2 = U_a vecs1``."""

    coeffs: np.ndarray
    vecs1: np.ndarray
    vecs2: np.ndarray
    u_a: AntilinearMap

    def reconstruct(self) -> np.ndarray:
        return sum(c * np.kron(self.vecs1[:, i], self.vecs2[:, i]) for i, c in enumerate(self.coeffs))


def pure_schmidt(phi, d1: int, d2: int, tol: float = 1e-10) -> PureSchmidt:
    """Schmidt decomposition of a unit vector and its correlation operator.

    ``u_a`` is stored as ``M`` with ``U_a x = M conj(x)``; it maps ``vecs1[:, i]``
    to ``vecs2[:, i]`` and annihilates the null space of ``rho_1``.
    """
    phi = np.asarray(phi, dtype=complex).ravel()
    if phi.size != d1 * d2:
        raise DimensionError(f"vector of length {phi.size} does not match dims ({d1}, {d2})")
    if abs(np.linalg.norm(phi) - 1.0) > 1e-8:
        raise PreconditionError(f"phi must be normalized, |phi| = {np.linalg.norm(phi)!r}")
    u, s, vh = np.linalg.svd(phi.reshape(d1, d2), full_matrices=False)
    r = int(np.sum(s > tol * s[0]))
    u, s, v2 = u[:, :r], s[:r], vh[:r].T
    for i in range(r):
        col = u[:, i]
        z = col[int(np.argmax(np.abs(col) >= np.abs(col).max() * (1 - 1e-9)))]
        ph = np.conj(z) / abs(z)
        u[:, i] *= ph
        v2[:, i] /= ph
    return PureSchmidt(s, u, v2, AntilinearMap(v2 @ u.T))


def pure_twin_partner(phi, d1: int, d2: int, a1, tol: float = TWIN_TOL) -> np.ndarray:
    """The twin ``A2 = U_a A1 U_a^-1 Q2`` of ``A1`` for a pure state.

    ``A1`` must commute with ``rho_1``; the returned ``A2`` vanishes on the
    null space of ``rho_2``.
    """
    a1 = as_matrix(a1, "a1")
    if a1.shape != (d1, d1):
        raise DimensionError(f"a1 must be {d1}x{d1}, got {a1.shape}")
    if not is_hermitian(a1, 1e-10):
        raise PreconditionError("a1 must be Hermitian")
    phi = np.asarray(phi, dtype=complex).ravel()
    mat = phi.reshape(d1, d2)
    rho1 = mat @ dagger(mat)
    c = np.linalg.norm(commutator(a1, rho1))
    if c > tol * _scale(a1):
        raise PreconditionError(f"[A1, rho_1] = {c:.2e} exceeds tolerance; A1 has no twin")
    m = pure_schmidt(phi, d1, d2).u_a.m
    return hermitian_part(m @ np.conj(a1) @ dagger(m))


# -- separable mixtures -------------------------------------------------------

class SeparableDecomp:
    """Explicit separable mixture ``sum_k w_k rho1_k ⊗ rho2_k``."""

    def __init__(self, terms, *, tol: float = 1e-10):
        checked = []
        for k, (w, r1, r2) in enumerate(terms):
            w = float(w)
            if not 0.0 < w <= 1.0 + tol:
                raise NotAStateError(f"term {k}: weight {w!r} outside (0, 1]")
            r1, r2 = as_matrix(r1, f"rho1[{k}]"), as_matrix(r2, f"rho2[{k}]")
            for label, r in (("rho1", r1), ("rho2", r2)):
                try:
                    BipartiteState(r, r.shape[0], 1, tol=tol)
                except (NotAStateError, DimensionError) as exc:
                    raise NotAStateError(f"term {k}: {label} is not a state: {exc}") from exc
            checked.append((w, hermitian_part(r1), hermitian_part(r2)))
        if not checked:
            raise NotAStateError("separable decomposition has no terms")
        if abs(sum(t[0] for t in checked) - 1.0) > tol:
            raise NotAStateError(f"weights sum to {sum(t[0] for t in checked)!r}, not 1")
        dims = {(t[1].shape[0], t[2].shape[0]) for t in checked}
        if len(dims) != 1:
            raise DimensionError(f"inconsistent factor dimensions {sorted(dims)}")
        self.terms = checked
        self.d1, self.d2 = dims.pop()

    def __len__(self):
        return len(self.terms)

    def state(self) -> BipartiteState:
        rho = sum(w * np.kron(r1, r2) for w, r1, r2 in self.terms)
        return BipartiteState(rho, self.d1, self.d2, tol=1e-8)


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]

    def components(self) -> list[list[int]]:
        groups: dict[int, list[int]] = {}
        for x in range(len(self.parent)):
            groups.setdefault(self.find(x), []).append(x)
        return sorted(groups.values(), key=lambda g: g[0])


@dataclass
class BiorthoGroups:
    """Biorthogonal grouping of separable-mixture terms.

    ``twins[g]`` verifies the range projectors of group ``g``'s reduced
    operators as a twin pair on the full mixture.
    """

    components: list[list[int]]
    twins: list[TwinPair]

    @property
    def nontrivial(self) -> bool:
        return len(self.components) >= 2


def biortho_groups(d: SeparableDecomp, tol: float = KERNEL_TOL) -> BiorthoGroups:
    """Connected components of the "non-orthogonal in either factor" graph."""
    n = len(d.terms)
    uf = UnionFind(n)
    for k, l in itertools.combinations(range(n), 2):
        _, a1, a2 = d.terms[k]
        _, b1, b2 = d.terms[l]
        if np.linalg.norm(a1 @ b1, 2) > tol or np.linalg.norm(a2 @ b2, 2) > tol:
            uf.union(k, l)
    comps = uf.components()
    state = d.state()
    twins = []
    for comp in comps:
        r1 = sum(d.terms[k][0] * d.terms[k][1] for k in comp)
        r2 = sum(d.terms[k][0] * d.terms[k][2] for k in comp)
        twins.append(verify_twin(state, range_projector(r1, tol), range_projector(r2, tol)))
    return BiorthoGroups(comps, twins)


@dataclass
class TermwiseCheck:
    ok: bool
    failing: int | None
    residuals: list[float]
    mixture_residual: float

    def __bool__(self):
        return self.ok


def termwise_twin_check(terms, weights, a1, a2, tol: float = TWIN_TOL) -> TermwiseCheck:
    """Is ``(a1, a2)`` a twin pair for every term of a mixture?

    ``failing`` is the first term index for which it is not.  The residual
    on the mixture itself is reported alongside, for consistency checks.
    """
    terms = list(terms)
    weights = np.asarray(weights, dtype=float)
    if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-10:
        raise PreconditionError("weights must be positive and sum to one")
    residuals, failing = [], None
    for k, st in enumerate(terms):
        tp = verify_twin(st, a1, a2)
        residuals.append(tp.residual)
        if failing is None and not tp.is_twin(tol):
            failing = k
    mix = BipartiteState.mixture(weights, terms)
    return TermwiseCheck(failing is None, failing, residuals, verify_twin(mix, a1, a2).residual)
