"""Complex-matrix side: projectors, density operators, sequential (Lüders)
probabilities, and the numerical equivalence of each classical
compatibility criterion with projector commutation.

Each criterion has two operator forms checked here:

  * order exchange:        P Q P = Q P Q
  * ignored measurement:   sum_s Q_s P Q_s = P        (complete family Q_s)
  * non-disturbance:       P_j Q P_j' Q P_j = delta_jj' P_j Q P_j
                           over a complete family P_j, plus the single-pair
                           form P Q P Q P = P Q P (labeled derived-form in
                           reports; its proof mirrors the order-exchange
                           C-dagger-C argument)

and a sampled form: the classical probability equality evaluated on a
spanning set of d^2 density matrices plus random pure states.  Both agree
with commutation of the projectors up to tolerance; `equivalence_experiment`
measures the confusion counts over randomized trials.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .criteria import CriterionKind
from .errors import (
    DimensionMismatchError,
    IncompatError,
    RankDeficientError,
    ShapeMismatchError,
    ValidationError,
    ZeroConditionError,
)

DEFAULT_TOL = 1e-9
CONSTRUCTION_TOL = 1e-12


def _as_matrix(values: Any) -> np.ndarray:
    m = np.array(values, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("expected a square matrix")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise ValidationError("matrix entries must be finite")
    m.setflags(write=False)
    return m


def _frobenius(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


@dataclass(frozen=True)
class Projector:
    """Hermitian idempotent matrix with its rank."""

    matrix: np.ndarray
    rank: int

    def __post_init__(self) -> None:
        m = _as_matrix(self.matrix)
        object.__setattr__(self, "matrix", m)
        scale = max(1.0, _frobenius(m))
        if _frobenius(m - m.conj().T) > CONSTRUCTION_TOL * scale:
            raise ValidationError("projector must be Hermitian")
        if _frobenius(m @ m - m) > CONSTRUCTION_TOL * max(1.0, scale**2):
            raise ValidationError("projector must be idempotent")
        if abs(np.trace(m).real - self.rank) > 1e-9:
            raise ValidationError("projector trace must equal its rank")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def complement(self) -> Projector:
        return Projector(np.eye(self.dim) - self.matrix, self.dim - self.rank)

    @staticmethod
    def identity(dim: int) -> Projector:
        return Projector(np.eye(dim), dim)


@dataclass(frozen=True)
class DensityOp:
    """Trace-one positive semidefinite matrix."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = _as_matrix(self.matrix)
        object.__setattr__(self, "matrix", m)
        if _frobenius(m - m.conj().T) > 1e-10:
            raise ValidationError("density operator must be Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-10:
            raise ValidationError("density operator must have trace 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValidationError("density operator must be positive semidefinite")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @staticmethod
    def pure(vector: Iterable[complex]) -> DensityOp:
        v = np.asarray(tuple(vector), dtype=np.complex128)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValidationError("cannot normalize the zero vector")
        v = v / norm
        return DensityOp(np.outer(v, v.conj()))

    @staticmethod
    def maximally_mixed(dim: int) -> DensityOp:
        return DensityOp(np.eye(dim) / dim)


@dataclass(frozen=True)
class ProjectorFamily:
    """Mutually orthogonal projectors summing to the identity."""

    members: tuple[Projector, ...]

    def __post_init__(self) -> None:
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise ValidationError("a projector family needs at least one member")
        dim = members[0].dim
        for p in members:
            if p.dim != dim:
                raise DimensionMismatchError("family members must share one dimension")
        for i, p in enumerate(members):
            for q in members[i + 1 :]:
                if _frobenius(p.matrix @ q.matrix) > 1e-10:
                    raise ValidationError("family members must be mutually orthogonal")
        total = sum(p.matrix for p in members)
        if _frobenius(total - np.eye(dim)) > 1e-10:
            raise ValidationError("family members must sum to the identity")

    @property
    def dim(self) -> int:
        return self.members[0].dim


def binary_family(p: Projector) -> ProjectorFamily:
    """The two-outcome family {p, not-p}."""
    return ProjectorFamily((p, p.complement()))


# ---------------------------------------------------------------------------
# Construction and elementary operations
# ---------------------------------------------------------------------------

def make_projector(
    span_vectors: Sequence[Iterable[complex]], rank_tol: float = 1e-9
) -> Projector:
    """Projector onto the span of the given vectors.

    Orthonormalizes with modified Gram-Schmidt; a residual below
    ``rank_tol`` (relative to the vector norm) means the vectors are
    dependent and raises `RankDeficientError`.
    """
    vectors = [np.asarray(tuple(v), dtype=np.complex128) for v in span_vectors]
    if not vectors:
        raise RankDeficientError("need at least one span vector")
    dim = vectors[0].shape[0]
    basis: list[np.ndarray] = []
    for v in vectors:
        if v.shape != (dim,):
            raise DimensionMismatchError("span vectors must share one dimension")
        scale = np.linalg.norm(v)
        w = v.copy()
        for b in basis:
            w = w - (b.conj() @ w) * b
        residual = np.linalg.norm(w)
        if scale == 0 or residual <= rank_tol * scale:
            raise RankDeficientError("span vectors are linearly dependent")
        basis.append(w / residual)
    matrix = sum(np.outer(b, b.conj()) for b in basis)
    return Projector(matrix, len(basis))


def _check_dims(rho_dim: int, proj: Projector) -> None:
    if proj.dim != rho_dim:
        raise DimensionMismatchError(
            f"projector dimension {proj.dim} != state dimension {rho_dim}"
        )


def lueders_condition(rho: DensityOp, proj: Projector, tol: float = DEFAULT_TOL) -> DensityOp:
    """State after observing the value projected by ``proj``:
    P rho P / Tr(rho P).  Raises `ZeroConditionError` when the observation
    probability is at most ``tol``."""
    _check_dims(rho.dim, proj)
    weight = float(np.trace(rho.matrix @ proj.matrix).real)
    if weight <= tol:
        raise ZeroConditionError("conditioning on an (almost) zero-probability value")
    conditioned = proj.matrix @ rho.matrix @ proj.matrix / weight
    conditioned = (conditioned + conditioned.conj().T) / 2
    return DensityOp(conditioned)


def seq_prob_q(rho: DensityOp, projs: Sequence[Projector], tol: float = DEFAULT_TOL) -> float:
    """Probability of observing the projector sequence in order:
    Tr(P_n ... P_1 rho P_1 ... P_n), clamped to [0, 1]."""
    if not projs:
        raise ValueError("projs must be non-empty")
    current = rho.matrix
    for proj in projs:
        _check_dims(rho.dim, proj)
        current = proj.matrix @ current @ proj.matrix
    value = float(np.trace(current).real)
    if value < -tol or value > 1 + tol:
        raise IncompatError(f"sequential probability {value} escaped [0, 1]")
    return min(1.0, max(0.0, value))


def commutator_defect(p: Projector, q: Projector) -> float:
    """Frobenius norm of PQ - QP; zero exactly when the projectors commute."""
    if p.dim != q.dim:
        raise DimensionMismatchError("projectors must share one dimension")
    return _frobenius(p.matrix @ q.matrix - q.matrix @ p.matrix)


# ---------------------------------------------------------------------------
# Operator-identity checks
# ---------------------------------------------------------------------------

def criterion_identity_check(
    kind: CriterionKind,
    p_side: Projector | ProjectorFamily,
    q_side: Projector | ProjectorFamily,
    tol: float = DEFAULT_TOL,
) -> tuple[float, bool]:
    """Defect of the operator identity equivalent to ``kind`` and whether
    it holds within ``tol``.

    Shapes: order exchange takes two projectors; ignored measurement takes
    a projector and a complete family; non-disturbance takes a complete
    family and a projector, or two projectors for the single-pair
    derived form.
    """
    if kind is CriterionKind.ORDER_EXCHANGE:
        if not isinstance(p_side, Projector) or not isinstance(q_side, Projector):
            raise ShapeMismatchError("order exchange takes two single projectors")
        p, q = p_side.matrix, q_side.matrix
        defect = _frobenius(p @ q @ p - q @ p @ q)
    elif kind is CriterionKind.IGNORED_MEASUREMENT:
        if not isinstance(p_side, Projector) or not isinstance(q_side, ProjectorFamily):
            raise ShapeMismatchError("ignored measurement takes a projector and a family")
        p = p_side.matrix
        total = sum(qs.matrix @ p @ qs.matrix for qs in q_side.members)
        defect = _frobenius(total - p)
    elif kind is CriterionKind.NON_DISTURBANCE:
        if isinstance(p_side, Projector) and isinstance(q_side, Projector):
            p, q = p_side.matrix, q_side.matrix
            pqp = p @ q @ p
            defect = _frobenius(pqp @ q @ p - pqp)
        elif isinstance(p_side, ProjectorFamily) and isinstance(q_side, Projector):
            q = q_side.matrix
            defect = 0.0
            for j, pj in enumerate(p_side.members):
                for jp, pjp in enumerate(p_side.members):
                    lhs = pj.matrix @ q @ pjp.matrix @ q @ pj.matrix
                    rhs = pj.matrix @ q @ pj.matrix if j == jp else 0.0
                    defect = max(defect, _frobenius(lhs - rhs))
        else:
            raise ShapeMismatchError(
                "non-disturbance takes a family and a projector, or two projectors"
            )
    else:
        raise ShapeMismatchError(f"unknown criterion kind {kind!r}")
    return defect, defect <= tol


# ---------------------------------------------------------------------------
# Random pairs and density sets
# ---------------------------------------------------------------------------

def _gaussian_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def gen_pair(
    dim: int,
    mode: str,
    ranks: tuple[int, int],
    seed: int,
    degenerate_defect: float = 1e-6,
) -> tuple[Projector, Projector]:
    """Seeded random projector pair.

    ``commuting`` mode diagonalizes both projectors in one random
    orthonormal basis; ``generic`` mode orthonormalizes independent random
    spans, redrawing the rare degenerate pair whose commutator defect does
    not exceed ``degenerate_defect``.  Deterministic per seed.
    """
    if mode not in ("commuting", "generic"):
        raise ValueError("mode must be 'commuting' or 'generic'")
    r1, r2 = ranks
    if not (1 <= r1 < dim and 1 <= r2 < dim):
        raise ValueError("ranks must satisfy 1 <= rank < dim")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    for _ in range(128):
        if mode == "commuting":
            basis, _ = np.linalg.qr(_gaussian_matrix(rng, dim))
            idx1 = rng.choice(dim, size=r1, replace=False)
            idx2 = rng.choice(dim, size=r2, replace=False)
            cols1 = basis[:, sorted(idx1)]
            cols2 = basis[:, sorted(idx2)]
            p = Projector(cols1 @ cols1.conj().T, r1)
            q = Projector(cols2 @ cols2.conj().T, r2)
            return p, q
        try:
            p = make_projector([_gaussian_matrix(rng, dim)[i] for i in range(r1)])
            q = make_projector([_gaussian_matrix(rng, dim)[i] for i in range(r2)])
        except RankDeficientError:
            continue
        if commutator_defect(p, q) > degenerate_defect:
            return p, q
    raise IncompatError("failed to draw a non-degenerate generic pair")


def spanning_density_set(dim: int) -> list[DensityOp]:
    """d^2 pure states whose density matrices span the Hermitian operators:
    the basis states |i><i| and, for each i < j, the two standard
    superpositions (|i>+|j>)/sqrt2 and (|i>+i|j>)/sqrt2."""
    states: list[DensityOp] = []
    for i in range(dim):
        v = np.zeros(dim, dtype=np.complex128)
        v[i] = 1.0
        states.append(DensityOp.pure(v))
    for i in range(dim):
        for j in range(i + 1, dim):
            for phase in (1.0, 1.0j):
                v = np.zeros(dim, dtype=np.complex128)
                v[i] = 1.0
                v[j] = phase
                states.append(DensityOp.pure(v))
    return states


def random_pure_state(rng: np.random.Generator, dim: int) -> DensityOp:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return DensityOp.pure(v)


# ---------------------------------------------------------------------------
# Equivalence experiment
# ---------------------------------------------------------------------------

IDENTITY_CHECKS = (
    "order_exchange",
    "ignored_measurement",
    "non_disturbance_family",
    "non_disturbance_pair_derived_form",
)
SAMPLED_CHECKS = ("order_exchange", "ignored_measurement", "non_disturbance")


@dataclass
class OrderExchangeWitness:
    """Density matrix maximizing |Pr(p & q) - Pr(q & p)| among the sampled
    states of one trial."""

    rho: np.ndarray
    p_then_q: float
    q_then_p: float

    @property
    def violation(self) -> float:
        return abs(self.p_then_q - self.q_then_p)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "rho": [[[z.real, z.imag] for z in row] for row in self.rho],
            "p_then_q": self.p_then_q,
            "q_then_p": self.q_then_p,
            "violation": self.violation,
        }


@dataclass
class TrialRecord:
    index: int
    dim: int
    mode: str
    ranks: tuple[int, int]
    commutator_defect: float
    commuting: bool
    identity_defects: dict[str, float]
    identity_holds: dict[str, bool]
    sampled_max_violation: dict[str, float]
    sampled_holds: dict[str, bool]
    witness: OrderExchangeWitness | None

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "trial": self.index,
            "dim": self.dim,
            "mode": self.mode,
            "ranks": list(self.ranks),
            "commutator_defect": self.commutator_defect,
            "commuting": self.commuting,
            "identity_defects": dict(self.identity_defects),
            "sampled_max_violations": dict(self.sampled_max_violation),
            "witness": self.witness.to_json_dict() if self.witness else None,
        }


@dataclass
class EquivalenceReport:
    dims: tuple[int, ...]
    trials: int
    rho_samples: int
    seed: int
    tolerance: float
    records: list[TrialRecord]

    def confusion(self) -> dict[str, dict[str, int]]:
        """Per check: counts of (commuting?, holds?) combinations.  The
        off-diagonal cells commuting_fails and noncommuting_holds must be
        empty if the criterion is equivalent to commutation."""
        tables: dict[str, dict[str, int]] = {}
        for record in self.records:
            checks = {f"identity_{k}": record.identity_holds[k] for k in IDENTITY_CHECKS}
            checks.update(
                {f"sampled_{k}": record.sampled_holds[k] for k in SAMPLED_CHECKS}
            )
            for name, holds in checks.items():
                table = tables.setdefault(
                    name,
                    {
                        "commuting_holds": 0,
                        "commuting_fails": 0,
                        "noncommuting_holds": 0,
                        "noncommuting_fails": 0,
                    },
                )
                key = ("commuting" if record.commuting else "noncommuting") + (
                    "_holds" if holds else "_fails"
                )
                table[key] += 1
        return tables

    def off_diagonal_total(self) -> int:
        return sum(
            t["commuting_fails"] + t["noncommuting_holds"]
            for t in self.confusion().values()
        )

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "dims": list(self.dims),
            "trials": self.trials,
            "rho_samples": self.rho_samples,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "confusion": self.confusion(),
            "off_diagonal_total": self.off_diagonal_total(),
            "records": [r.to_json_dict() for r in self.records],
        }


def equivalence_experiment(
    dims: Sequence[int],
    trials: int,
    rho_samples: int,
    seed: int,
    tol: float = DEFAULT_TOL,
) -> EquivalenceReport:
    """Randomized test that each criterion matches projector commutation.

    Each trial draws a pair (alternating commuting and generic modes,
    cycling through ``dims`` with random ranks), evaluates the commutator
    defect, the operator-identity form of each criterion, and the sampled
    probability-equality form over the d^2 spanning density set plus
    ``rho_samples`` random pure states.  For every generic pair the
    sampled state maximizing the order-exchange violation is recorded as a
    witness.  Deterministic per seed; trials derive independent sub-seeds,
    so results do not depend on execution order.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not dims:
        raise ValueError("dims must be non-empty")
    records: list[TrialRecord] = []
    spanning_cache: dict[int, list[DensityOp]] = {}
    for index in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
        dim = dims[index % len(dims)]
        mode = "commuting" if index % 2 == 0 else "generic"
        ranks = (int(rng.integers(1, dim)), int(rng.integers(1, dim)))
        p, q = gen_pair(dim, mode, ranks, seed=int(rng.integers(2**63)))
        defect = commutator_defect(p, q)
        commuting = defect <= tol

        identity_defects = {}
        identity_defects["order_exchange"], _ = criterion_identity_check(
            CriterionKind.ORDER_EXCHANGE, p, q, tol
        )
        identity_defects["ignored_measurement"], _ = criterion_identity_check(
            CriterionKind.IGNORED_MEASUREMENT, p, binary_family(q), tol
        )
        identity_defects["non_disturbance_family"], _ = criterion_identity_check(
            CriterionKind.NON_DISTURBANCE, binary_family(p), q, tol
        )
        identity_defects["non_disturbance_pair_derived_form"], _ = criterion_identity_check(
            CriterionKind.NON_DISTURBANCE, p, q, tol
        )
        identity_holds = {k: v <= tol for k, v in identity_defects.items()}

        pm, qm = p.matrix, q.matrix
        qc = q.complement().matrix
        pqp = pm @ qm @ pm
        sampled_matrices = {
            "order_exchange": pqp - qm @ pm @ qm,
            "ignored_measurement": qm @ pm @ qm + qc @ pm @ qc - pm,
            "non_disturbance": pqp @ qm @ pm - pqp,
        }
        rhos = list(spanning_cache.setdefault(dim, spanning_density_set(dim)))
        rhos.extend(random_pure_state(rng, dim) for _ in range(rho_samples))
        sampled_max = {k: 0.0 for k in SAMPLED_CHECKS}
        witness: OrderExchangeWitness | None = None
        for rho in rhos:
            for kind, matrix in sampled_matrices.items():
                violation = abs(float(np.trace(rho.matrix @ matrix).real))
                if violation > sampled_max[kind]:
                    sampled_max[kind] = violation
                    if kind == "order_exchange":
                        witness = OrderExchangeWitness(
                            rho.matrix,
                            float(np.trace(rho.matrix @ pqp).real),
                            float(np.trace(rho.matrix @ (qm @ pm @ qm)).real),
                        )
        sampled_holds = {k: v <= tol for k, v in sampled_max.items()}
        records.append(
            TrialRecord(
                index, dim, mode, ranks, defect, commuting,
                identity_defects, identity_holds, sampled_max, sampled_holds,
                witness if mode == "generic" else None,
            )
        )
    return EquivalenceReport(tuple(dims), trials, rho_samples, seed, tol, records)
