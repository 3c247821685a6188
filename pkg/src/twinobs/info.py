"""Entropic correlation measures, in bits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotAStateError, NotPerfectlyCorrelatedError
from .linalg import BipartiteState, as_matrix, partial_trace, spectral_decomposition
from .twins import TwinPair

CLIP_TOL = 1e-10


def vn_entropy(h, tol: float = CLIP_TOL) -> float:
    """``-sum lambda log2 lambda`` over eigenvalues above ``tol``."""
    h = as_matrix(h, "h")
    tr = np.trace(h).real
    if abs(tr - 1.0) > max(tol, 1e-10):
        raise NotAStateError(f"entropy needs a unit-trace operator, Tr = {tr!r}")
    lam = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
    if lam[0] < -max(tol, 1e-10):
        raise NotAStateError(f"entropy needs a positive operator, smallest eigenvalue {lam[0]:.3e}")
    lam = np.clip(lam, 0.0, 1.0)
    lam = lam[lam > tol]
    return float(-np.sum(lam * np.log2(lam)))


def shannon(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def quantum_mutual_info(s: BipartiteState) -> float:
    """Logarithmic correlation ``S(rho_1) + S(rho_2) - S(rho_12)``."""
    return vn_entropy(partial_trace(s, 2)) + vn_entropy(partial_trace(s, 1)) - vn_entropy(s.rho)


@dataclass
class JointDistribution:
    values_a: np.ndarray
    values_b: np.ndarray
    p: np.ndarray

    @property
    def p_a(self) -> np.ndarray:
        return self.p.sum(axis=1)

    @property
    def p_b(self) -> np.ndarray:
        return self.p.sum(axis=0)


def joint_distribution(s: BipartiteState, a, b, tol: float = CLIP_TOL) -> JointDistribution:
    """``p(k, l) = Tr[rho (P_k ⊗ Q_l)]`` over the distinct eigenvalues of ``a`` and ``b``."""
    a, b = as_matrix(a, "a"), as_matrix(b, "b")
    sa = spectral_decomposition(a, tol)
    sb = spectral_decomposition(b, tol)
    p = np.array([[np.trace(s.rho @ np.kron(pk, ql)).real for _, ql in sb] for _, pk in sa])
    if p.min() < -1e-12:
        raise NotAStateError(f"negative joint probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    return JointDistribution(np.array([v for v, _ in sa]), np.array([v for v, _ in sb]), p)


def classical_mutual_info(j: JointDistribution) -> float:
    """``H(p_k) + H(p_l) - H(p(k, l))``."""
    return shannon(j.p_a) + shannon(j.p_b) - shannon(j.p)


@dataclass
class LindbladCheck:
    H: float
    C: float
    ok: bool


def lindblad_check(s: BipartiteState, a, b) -> LindbladCheck:
    """``H(A:B) <= C``; one observable pair only, so a lower bound on the supremum."""
    h = classical_mutual_info(joint_distribution(s, a, b))
    c = quantum_mutual_info(s)
    return LindbladCheck(h, c, h <= c + 1e-9)


@dataclass
class PerfectCorrelation:
    """Outcome bijection of a twin pair and the information it carries.

    ``f`` maps eigenvalues of ``A1`` with nonzero probability to eigenvalues
    of ``A2``.
    """

    f: dict[float, float]
    H: float
    joint: JointDistribution


def perfect_correlation(s: BipartiteState, p: TwinPair, tol: float = 1e-9) -> PerfectCorrelation:
    j = joint_distribution(s, p.a1, p.a2)
    f = {}
    used = set()
    for k, pk in enumerate(j.p_a):
        if pk <= tol:
            continue
        hits = np.flatnonzero(j.p[k] > tol)
        if hits.size != 1 or abs(j.p[k, hits[0]] - pk) > tol or hits[0] in used:
            raise NotPerfectlyCorrelatedError(
                f"outcome {j.values_a[k]:.6g} of A1 is not paired with a unique outcome of A2"
            )
        used.add(int(hits[0]))
        f[float(j.values_a[k])] = float(j.values_b[hits[0]])
    h = classical_mutual_info(j)
    ha, hb = shannon(j.p_a), shannon(j.p_b)
    if max(abs(h - ha), abs(h - hb)) > tol:
        raise NotPerfectlyCorrelatedError(f"H(A:B) = {h:.12g} differs from H(p_k) = {ha:.12g} / H(p_l) = {hb:.12g}")
    return PerfectCorrelation(f, h, j)
