"""Singular value estimation of the Gram matrix through a two-reflection walk.

Two isometries embed the ``n``-dimensional space into ``n**2`` dimensions:
``col_map`` sends ``|j⟩`` to the normalised column ``|K_j⟩|j⟩`` and ``row_map``
sends ``|i⟩`` to ``|i⟩`` times the column-norm profile of ``K``.  The walk is
the product of the two reflections about their ranges.  On each plane spanned
by ``col_map v_k`` and ``row_map u_k`` it rotates by ``2θ_k`` with
``cos θ_k = σ_k / ‖K‖_F``.  Phase estimation is simulated by an exact unitary
eigenbasis of the walk followed by ideal ``t``-bit binning of ``θ``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

from .errors import (
    DegenerateSubspace,
    DirtyAncilla,
    InsufficientCopies,
    InsufficientPositiveSpectrum,
    ShotBudgetTooSmall,
)
from .oracle import EmbeddingResult, fix_signs

LEAK_TOL = 1e-10
PRUNE = 1e-15


@dataclass(frozen=True)
class WalkOperator:
    n: int
    col_map: np.ndarray  # |j⟩ -> |K_j⟩|j⟩
    row_map: np.ndarray  # |i⟩ -> |i⟩|column-norm profile⟩
    unitary: np.ndarray
    frob: float

    def reflect_cols(self) -> np.ndarray:
        return 2 * self.col_map @ self.col_map.conj().T - np.eye(self.n ** 2)

    def reflect_rows(self) -> np.ndarray:
        return 2 * self.row_map @ self.row_map.conj().T - np.eye(self.n ** 2)


def build_walk(K) -> WalkOperator:
    """Both isometries (``n**2 x n``) and the walk unitary for a Gram matrix.

    Row index of the ``n**2`` space is ``a * n + b`` for ``|a⟩|b⟩``.  A zero
    column ``j`` of ``K`` gets ``|K_j⟩ = |j⟩`` so ``col_map`` stays an isometry.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    frob = float(np.linalg.norm(K))
    if frob == 0:
        raise ValueError("the walk is undefined for a zero matrix")
    col_norms = np.linalg.norm(K, axis=0)
    cols = np.zeros((n * n, n))
    for j in range(n):
        kj = K[:, j] / col_norms[j] if col_norms[j] > 0 else np.eye(n)[j]
        cols[np.arange(n) * n + j, j] = kj
    profile = col_norms / frob
    rows = np.zeros((n * n, n))
    for i in range(n):
        rows[i * n + np.arange(n), i] = profile
    eye = np.eye(n * n)
    walk = (2 * rows @ rows.T - eye) @ (2 * cols @ cols.T - eye)
    return WalkOperator(n, cols, rows, walk, frob)


@dataclass(frozen=True)
class SubspaceCheck:
    sigma: float
    residual: float
    cos2theta: float
    cos2theta_expected: float
    cos_theta: float
    degenerate: bool


def verify_invariant_subspace(w: WalkOperator, eigvals, eigvecs, tol: float = 1e-12) -> list[SubspaceCheck]:
    """Check that each ``span{col_map v_k, row_map u_k}`` is mapped into itself by the walk.

    ``cos θ`` is read from the eigenvalues of the 2x2 restriction of the walk
    in the Gram–Schmidt basis ``e1 = col_map v_k``,
    ``e2 ∝ row_map u_k - (σ/‖K‖) e1``.
    A rank-one direction (``σ = ‖K‖_F``) has no second basis vector; it is
    reported with ``degenerate=True`` and checked as a fixed point of the walk.
    """
    eigvals = np.asarray(eigvals, dtype=float)
    eigvecs = np.asarray(eigvecs, dtype=float)
    out = []
    for lam, v in zip(eigvals, eigvecs.T):
        sigma = abs(lam)
        u = np.sign(lam) * v if lam != 0 else v
        e1 = w.col_map @ v
        ratio = sigma / w.frob
        expected = 2 * ratio ** 2 - 1
        We1 = w.unitary @ e1
        gap = 1 - ratio ** 2
        if gap <= tol:
            residual = float(np.linalg.norm(We1 - e1))
            out.append(SubspaceCheck(sigma, residual, float(e1 @ We1), expected, 1.0, True))
            continue
        e2 = (w.row_map @ u - ratio * e1) / math.sqrt(gap)
        basis = np.column_stack([e1, e2])
        proj = basis @ (basis.T @ We1)
        residual = float(np.linalg.norm(We1 - proj))
        R = basis.T @ w.unitary @ basis
        phases = np.angle(np.linalg.eigvals(R))
        theta = float(np.abs(phases).max()) / 2
        out.append(SubspaceCheck(sigma, residual, float(e1 @ We1), expected, math.cos(theta), False))
    return out


def require_nondegenerate(checks: list[SubspaceCheck]) -> None:
    for c in checks:
        if c.degenerate:
            raise DegenerateSubspace(f"σ = {c.sigma} equals ‖K‖_F; the invariant plane collapses")


def phase_label(theta: np.ndarray, t: int) -> np.ndarray:
    """Signed ``t``-bit label ``round(θ 2^t / 2π)`` for ``θ`` in ``(-π/2, π/2]``."""
    return np.rint(np.asarray(theta) * (2 ** t) / (2 * math.pi)).astype(np.int64)


def label_angle(label, t: int):
    return np.asarray(label) * 2 * math.pi / (2 ** t)


@dataclass(frozen=True)
class PhaseState:
    """``Σ_a Σ_m c[a, m] |a⟩|q_m⟩|label_m⟩`` after phase estimation.

    ``Q`` holds the eigenvectors ``q_m`` of the walk as columns, ``labels`` the
    signed phase label for each one.
    """

    walk: WalkOperator
    coeffs: np.ndarray
    Q: np.ndarray
    theta: np.ndarray
    labels: np.ndarray
    t: int


def input_matrix(gram) -> np.ndarray:
    """``K / ‖K‖_F`` as an ``n x n`` amplitude array, from a GramState or a matrix."""
    if hasattr(gram, "amplitude_matrix"):
        return gram.amplitude_matrix()
    A = np.asarray(gram, dtype=float)
    return A / np.linalg.norm(A)


def phase_estimate(w: WalkOperator, gram, t: int) -> PhaseState:
    """Apply ``col_map`` to the second register, then ideal ``t``-bit phase estimation of the walk."""
    A = input_matrix(gram)
    psi1 = A @ w.col_map.T  # row a: col_map applied to the second-register vector of |K⟩
    T, Q = schur(w.unitary.astype(complex), output="complex")
    phases = np.angle(np.diag(T))
    theta = phases / 2
    coeffs = psi1 @ Q.conj()
    return PhaseState(w, coeffs, Q, theta, phase_label(theta, t), t)


@dataclass(frozen=True)
class EigenBranch:
    """Post-uncompute component carrying one value of ``cos θ̄`` in the new register."""

    label: int
    cos_value: float
    R: np.ndarray  # n x n: amplitudes over |a⟩|b⟩ of this branch

    @property
    def probability(self) -> float:
        return float(np.sum(self.R ** 2))


@dataclass(frozen=True)
class EigenRegisterState:
    branches: list[EigenBranch]
    frob: float
    t: int
    n: int


def cosine_oracle(state: PhaseState, t: int | None = None) -> EigenRegisterState:
    """Write ``cos θ̄`` next to each phase label, undo phase estimation, apply ``col_map†``.

    The ``±θ̄`` partners share one ``cos θ̄`` value, so clearing the phase
    register recombines ``|x+⟩`` and ``|x-⟩`` into ``col_map|v_k⟩``; any weight the
    final ``col_map†`` cannot carry back is leakage and raises ``DirtyAncilla``.
    """
    t = state.t if t is None else t
    if t != state.t:
        raise ValueError("cosine oracle precision must match the phase register")
    n = state.walk.n
    mags = np.abs(state.labels)
    branches = []
    for lab in np.unique(mags):
        cols = np.flatnonzero(mags == lab)
        phi = state.coeffs[:, cols] @ state.Q[:, cols].T
        weight = float(np.sum(np.abs(phi) ** 2))
        if weight < PRUNE:
            continue
        R = phi @ state.walk.col_map.conj()
        kept = float(np.sum(np.abs(R) ** 2))
        if weight - kept > LEAK_TOL:
            raise DirtyAncilla(f"phase label {lab}: {weight - kept:.3e} weight outside the range of col_map",
                               stage="qsve")
        if np.abs(R.imag).max(initial=0.0) > 1e-8:
            raise DirtyAncilla(f"phase label {lab}: complex residue after uncompute", stage="qsve")
        if kept < PRUNE:
            continue
        cos_val = math.cos(float(label_angle(lab, t)))
        branches.append(EigenBranch(int(lab), cos_val, R.real.copy()))
    return EigenRegisterState(branches, state.walk.frob, t, n)


@dataclass
class SpectralEntry:
    sigma: float
    theta_bin: int
    weight: float
    multiplicity: int = 1
    sign: float = 1.0
    vectors: np.ndarray | None = None

    def to_dict(self) -> dict:
        vecs = [] if self.vectors is None else [[float(x) for x in v] for v in self.vectors]
        return {
            "sigma": float(self.sigma),
            "theta_bin": int(self.theta_bin),
            "weight": float(self.weight),
            "multiplicity": int(self.multiplicity),
            "sign": float(self.sign),
            "vector": vecs[0] if len(vecs) == 1 else vecs,
        }


@dataclass
class SpectralReadout:
    entries: list[SpectralEntry]
    t: int
    eta: float
    frob: float
    shots: int
    seed: int | None = None
    counts: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"seed": self.seed, "t": self.t, "eta": self.eta, "frob": self.frob,
                           "shots": self.shots, "outcomes": [e.to_dict() for e in self.entries]},
                          indent=2)


def outcome_probabilities(state: EigenRegisterState) -> dict[int, float]:
    return {b.label: b.probability for b in state.branches}


def sample_spectrum(state: EigenRegisterState, shots: int, eta: float, rng=None,
                    min_outcomes: int = 0, seed: int | None = None) -> SpectralReadout:
    """Measure the eigenvalue register ``shots`` times and keep the dominant outcomes.

    Keeps the smallest set of distinct outcomes (by observed frequency) whose
    cumulative frequency reaches ``eta`` and that accounts for at least
    ``min_outcomes`` eigenvectors, then orders it by decreasing ``σ``.
    """
    if shots < 1:
        raise ShotBudgetTooSmall("need at least one shot")
    rng = np.random.default_rng() if rng is None else rng
    probs = np.array([b.probability for b in state.branches])
    counts = rng.multinomial(shots, probs / probs.sum())
    seen = [(c, b) for c, b in zip(counts, state.branches) if c > 0]
    seen.sort(key=lambda cb: (-cb[0], -cb[1].cos_value))
    entries, cum, columns = [], 0.0, 0
    for c, b in seen:
        if cum >= eta and columns >= min_outcomes:
            break
        freq = c / shots
        cos2 = b.cos_value ** 2
        # a bin holding m equal eigenvalues is hit m times as often as cos^2 alone predicts
        mult = int(round(freq / cos2)) if cos2 > 1e-12 else 1
        mult = max(1, min(mult, state.n))
        entries.append(SpectralEntry(state.frob * b.cos_value, b.label, freq, mult))
        cum += freq
        columns += mult
    if cum < eta - 1e-12 or columns < min_outcomes:
        raise ShotBudgetTooSmall(
            f"observed outcomes cover {cum:.3f} of the spectrum with {columns} eigenvectors"
        )
    entries.sort(key=lambda e: -e.sigma)
    return SpectralReadout(entries, state.t, eta, state.frob, shots, seed,
                           {int(b.label): int(c) for c, b in zip(counts, state.branches)})


def tomograph_vector(v, copies: int, rng=None, sign_oracle: bool = True,
                     tolerance: float = 0.05) -> np.ndarray:
    """Standard-basis tomography of a real unit vector from ``copies`` measurements.

    Magnitudes are ``sqrt(n_i / copies)``.  Signs come from the exact
    amplitudes when ``sign_oracle`` is on, otherwise all are taken positive.
    """
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    rng = np.random.default_rng() if rng is None else rng
    counts = rng.multinomial(copies, v ** 2 / np.sum(v ** 2))
    needed = np.abs(v) > tolerance
    if np.any(needed & (counts <= 4)):
        raise InsufficientCopies(
            f"{copies} copies leave components of magnitude > {tolerance} unresolved"
        )
    mags = np.sqrt(counts / copies)
    if sign_oracle:
        return np.where(v < 0, -mags, mags)
    return mags


def branch_for(state: EigenRegisterState, label: int) -> EigenBranch:
    for b in state.branches:
        if b.label == label:
            return b
    raise KeyError(f"no branch with phase label {label}")


def tomography(state: EigenRegisterState, entry: SpectralEntry, copies: int, rng=None,
               sign_oracle: bool = True) -> np.ndarray:
    """Estimate the eigenvector(s) behind one observed eigenvalue outcome.

    Post-selecting on the outcome leaves ``Σ_k σ_k |v_k⟩|v_k⟩`` over the
    eigenvalues in that bin.  Measuring the first register collapses the second
    onto a vector of the eigenspace, which is then tomographed.  For a bin of
    multiplicity ``m`` several collapses are taken and the top-``m`` singular
    subspace of the estimates is returned (rows are orthonormal vectors).
    The eigenvalue sign (from the diagonal amplitudes) is stored on ``entry``
    when the sign oracle is on.
    """
    rng = np.random.default_rng() if rng is None else rng
    b = branch_for(state, entry.theta_bin)
    R = b.R
    if sign_oracle:
        tr = float(np.trace(R))
        entry.sign = -1.0 if tr < 0 else 1.0
    m = entry.multiplicity
    row_p = np.sum(R ** 2, axis=1)
    row_p = row_p / row_p.sum()
    draws = m if m == 1 else min(int(np.count_nonzero(row_p > 0)), 3 * m)
    picks = rng.choice(len(row_p), size=draws, replace=False, p=row_p)
    ests = np.array([tomograph_vector(R[a], copies, rng, sign_oracle) for a in picks])
    if m == 1:
        vecs = ests[:1] / np.linalg.norm(ests[0])
    else:
        _, _, Vt = np.linalg.svd(ests, full_matrices=False)
        vecs = Vt[:m]
    entry.vectors = vecs
    return vecs


def assemble_embedding(readout: SpectralReadout, d: int) -> EmbeddingResult:
    """Stack ``v * sqrt(λ)`` columns for the ``d`` largest positive estimates."""
    if d == 0:
        n = 0
        for e in readout.entries:
            if e.vectors is not None:
                n = e.vectors.shape[1]
                break
        return EmbeddingResult(np.zeros((n, 0)), np.zeros(0), 0.0)
    cols, lams = [], []
    for e in sorted(readout.entries, key=lambda e: -e.sigma):
        if e.sign < 0 or e.sigma <= 0 or e.vectors is None:
            continue
        for v in e.vectors:
            cols.append(v)
            lams.append(e.sigma)
    if len(cols) < d:
        raise InsufficientPositiveSpectrum(f"only {len(cols)} positive eigenvectors read out, need {d}")
    lam = np.array(lams[:d])
    V = fix_signs(np.column_stack(cols[:d]))
    Z = V * np.sqrt(lam)
    eta = float(np.sum(lam ** 2) / readout.frob ** 2) if readout.frob > 0 else 0.0
    return EmbeddingResult(Z, lam, eta)


def run_qsve(gram, t: int, shots: int, eta: float, copies: int, d: int, rng=None,
             sign_oracle: bool = True, seed: int | None = None, K=None):
    """Walk construction through embedding, returning intermediate objects too."""
    rng = np.random.default_rng() if rng is None else rng
    if K is None:
        K = gram.matrix() if hasattr(gram, "matrix") else np.asarray(gram, dtype=float)
    w = build_walk(K)
    ps = phase_estimate(w, gram, t)
    es = cosine_oracle(ps)
    readout = sample_spectrum(es, shots, eta, rng, min_outcomes=d, seed=seed)
    for e in readout.entries:
        tomography(es, e, copies, rng, sign_oracle)
    return w, es, readout, assemble_embedding(readout, d)
