"""Inductive phase recovery: from counts to a pure-state estimate.

The estimate is assembled level by level.  Amplitudes c_alpha = sqrt(p_alpha)
come from the computational record (small probabilities clamped to exact 0).
At level j the two halves of each length-2^j block differ by one unknown
relative phase delta; every basis of the family contributes one linear
equation

    Re[e^{i delta} X] = rhs,  i.e.  (Re X) cos(delta) - (Im X) sin(delta) = rhs,

on the unknowns (cos delta, sin delta).  The stacked k x 2 system is solved
by least squares and the solution projected radially onto the unit circle;
ill-conditioned systems fall back to intersecting the dominant single
equation with the circle and letting the residual over all rows pick the
candidate.  Merged blocks become the children of the next level, so j = n
yields the full estimate up to an (unobservable) global phase.

Each child block enters later systems with whatever global phase it was
assembled with; the equations are built from the children as produced, so
this is self-consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bases import (
    BasisId,
    OutcomeRole,
    QubitBasis,
    default_family,
    entangled_id,
    local_id,
    outcome_role,
)
from .measurement import CountsRecord, ProbTable, exact_record, to_empirical
from .states import PureState, ReducedState, _freeze, global_phase_normalize, make_reduced

# Least-squares solutions shorter than this carry no phase direction.
ZERO_SOLUTION_EPS = 1e-15
# Residual / cosine ties in the ambiguity candidate pick.
TIE_EPS = 1e-12


class AmbiguityError(RuntimeError):
    """Raised under ambiguity_policy='fail' when a phase system cannot be solved uniquely."""

    def __init__(self, j: int, beta: int, message: str):
        super().__init__(f"phase system (j={j}, beta={beta}): {message}")
        self.j = j
        self.beta = beta


@dataclass(frozen=True)
class PhaseSystem:
    """Stacked linear equations for one relative phase; rows act on (cos delta, sin delta)."""

    j: int
    beta: int
    rows: np.ndarray  # (k, 2) real
    rhs: np.ndarray  # (k,) real
    cond: float  # singular-value ratio of rows; inf when rank < 2


@dataclass(frozen=True)
class ReconstructionOptions:
    """Estimation configuration.

    mode selects which measurement records are consumed: "local" needs the
    product bases (a = 1..m, b = 1..n), "entangled" the ladder bases
    (a = 1..m); both need the computational record.  family defaults to the
    balanced phase family of size m and must match the one the records were
    measured in.  null_threshold of None picks 0.5/shots for sampled records
    (zero observed counts clamp to a null amplitude) and 0 for exact ones.
    """

    mode: str = "local"
    m: int = 2
    family: tuple = None
    use_extra_rows: bool = False
    null_threshold: float = None
    cond_threshold: float = 1e6
    ambiguity_policy: str = "residual_pick"

    def __post_init__(self):
        if self.mode not in ("local", "entangled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.m < 2:
            raise ValueError("need at least 2 bases (m >= 2)")
        if self.null_threshold is not None and not self.null_threshold > 0:
            raise ValueError("null_threshold must be positive")
        if not self.cond_threshold > 0:
            raise ValueError("cond_threshold must be positive")
        if self.ambiguity_policy not in ("residual_pick", "fail"):
            raise ValueError(f"unknown ambiguity_policy {self.ambiguity_policy!r}")
        if self.family is not None:
            fam = tuple(self.family)
            if len(fam) < self.m:
                raise ValueError(f"family has {len(fam)} bases, need m={self.m}")
            object.__setattr__(self, "family", fam)

    def resolved_family(self) -> list[QubitBasis]:
        return list(self.family) if self.family is not None else default_family(self.m)


@dataclass(frozen=True)
class PhaseFlags:
    """What solve_phase did: plain least squares unless one of these is set."""

    fallback: bool = False
    clamped: bool = False
    default_phase: bool = False


@dataclass
class Diagnostics:
    """Per-run solve statistics; one entry per non-null (j, beta) problem.

    conds holds every solved system's condition number (inf marks systems
    with no usable rows).  null_branches, fallbacks and default_phases are
    disjoint lists of (j, beta) labels; together with conds they account for
    all 2^n - 1 phase problems.
    """

    n: int
    conds: dict = field(default_factory=dict)
    phases: dict = field(default_factory=dict)
    null_branches: list = field(default_factory=list)
    fallbacks: list = field(default_factory=list)
    default_phases: list = field(default_factory=list)

    @property
    def cond_max(self) -> float:
        return max(self.conds.values()) if self.conds else 0.0

    @property
    def n_fallbacks(self) -> int:
        return len(self.fallbacks)

    @property
    def n_null_branches(self) -> int:
        return len(self.null_branches)

    @property
    def n_default_phases(self) -> int:
        return len(self.default_phases)

    def to_dict(self) -> dict:
        cond = {f"{j},{beta}": (v if np.isfinite(v) else "inf") for (j, beta), v in self.conds.items()}
        return {"cond": cond, "fallbacks": self.n_fallbacks, "null_branches": self.n_null_branches}


def amplitudes_from_counts(comp: CountsRecord, n: int, null_threshold: float = None) -> np.ndarray:
    """c_alpha = sqrt(p_alpha) from the computational record, with small p clamped to exact 0."""
    if comp.basis.tag != "computational":
        raise ValueError(f"amplitude estimation needs the computational record, got {comp.basis}")
    p = to_empirical(comp)
    if p.shape != (1 << n,):
        raise ValueError(f"record has {p.size} outcomes, expected {1 << n}")
    if null_threshold is None:
        null_threshold = 0.5 / comp.shots if comp.shots > 0 else 0.0
    p = np.where(p < null_threshold, 0.0, p)
    return np.sqrt(p)


_TAIL_CACHE: dict = {}


def _tail_state(qb: QubitBasis, tail: tuple) -> np.ndarray:
    """Tensor product of |+_a>/|-_a> kets over the tail signs (qubits j-2 .. 0); scalar 1 for level 1."""
    key = (qb.u, qb.v, qb.phi, tail)
    w = _TAIL_CACHE.get(key)
    if w is None:
        w = np.ones(1, dtype=np.complex128)
        for s in tail:
            w = np.kron(w, qb.plus_ket() if s == 1 else qb.minus_ket())
        w.setflags(write=False)
        # unbounded growth is only possible with extra rows at large j
        if len(_TAIL_CACHE) < 4096:
            _TAIL_CACHE[key] = w
    return w


def _gram_cond(rows: np.ndarray) -> float:
    """Singular-value ratio of a k x 2 real matrix via its 2x2 Gram spectrum."""
    g11 = float(rows[:, 0] @ rows[:, 0])
    g12 = float(rows[:, 0] @ rows[:, 1])
    g22 = float(rows[:, 1] @ rows[:, 1])
    half = 0.5 * (g11 + g22)
    disc = 0.5 * np.hypot(g11 - g22, 2.0 * g12)
    hi, lo = half + disc, half - disc
    if lo <= 0.0 or hi <= 0.0:
        return np.inf
    return float(np.sqrt(hi / lo))


def build_system(
    j: int,
    beta: int,
    childA: ReducedState,
    childB: ReducedState,
    equations: list,
    family: list[QubitBasis],
) -> PhaseSystem:
    """Assemble the phase system for block (j, beta) from (role, probability) pairs.

    The canonical role (pivot +, all-minus tail) yields
        X = e^{-i phi_a} <childA|W><W|childB>,   W = |-_a>^{x(j-1)},
        row = (Re X, -Im X),  rhs = (P - u^2|<W|childA>|^2 - v^2|<W|childB>|^2) / (2uv).
    Any other sign pattern yields the unscaled form
        A = <s0|0><W_w|childA>,  B = <s0|1><W_w|childB>,  X = conj(A) B,
        row = (2 Re X, -2 Im X),  rhs = P - |A|^2 - |B|^2.
    """
    if childA.is_null or childB.is_null:
        raise ValueError(f"phase system (j={j}, beta={beta}) requires non-null children")
    if childA.j != j - 1 or childB.j != j - 1:
        raise ValueError("children must sit one level below the system")
    if childA.beta != 2 * beta or childB.beta != 2 * beta + 1:
        raise ValueError(f"children ({childA.beta}, {childB.beta}) do not merge into block {beta}")
    if not equations:
        raise ValueError("phase system needs at least one equation")
    rows = np.empty((len(equations), 2))
    rhs = np.empty(len(equations))
    for i, (role, prob) in enumerate(equations):
        if role.j != j or role.beta != beta:
            raise ValueError(f"role {role} does not belong to system (j={j}, beta={beta})")
        if not 1 <= role.a <= len(family):
            raise ValueError(f"role basis index {role.a} outside family of size {len(family)}")
        qb = family[role.a - 1]
        w = _tail_state(qb, role.tail)
        wa = complex(np.vdot(w, childA.amps))
        wb = complex(np.vdot(w, childB.amps))
        if role.is_canonical:
            x = np.exp(-1j * qb.phi) * np.conj(wa) * wb
            rows[i] = (x.real, -x.imag)
            rhs[i] = (prob - qb.u**2 * abs(wa) ** 2 - qb.v**2 * abs(wb) ** 2) / (2.0 * qb.u * qb.v)
        else:
            ca = qb.u if role.sign0 == 1 else qb.v
            cb = (qb.v if role.sign0 == 1 else -qb.u) * np.exp(-1j * qb.phi)
            a = ca * wa
            b = cb * wb
            x = np.conj(a) * b
            rows[i] = (2.0 * x.real, -2.0 * x.imag)
            rhs[i] = prob - abs(a) ** 2 - abs(b) ** 2
    return PhaseSystem(j=j, beta=beta, rows=rows, rhs=rhs, cond=_gram_cond(rows))


def phase_ls(sys: PhaseSystem) -> np.ndarray:
    """Unconstrained least-squares solution of the system (2x2 normal equations)."""
    rows, rhs = sys.rows, sys.rhs
    g11 = float(rows[:, 0] @ rows[:, 0])
    g12 = float(rows[:, 0] @ rows[:, 1])
    g22 = float(rows[:, 1] @ rows[:, 1])
    b1 = float(rows[:, 0] @ rhs)
    b2 = float(rows[:, 1] @ rhs)
    det = g11 * g22 - g12 * g12
    if det <= 0.0 or not np.isfinite(det):
        sol, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
        return sol
    return np.array([(g22 * b1 - g12 * b2) / det, (g11 * b2 - g12 * b1) / det])


def _circle_candidates(row: np.ndarray, d: float) -> tuple[list, bool]:
    """Intersect row . x = d with the unit circle; clamp to the nearest point if disjoint."""
    norm = float(np.hypot(row[0], row[1]))
    unit = row / norm
    if abs(d) >= norm:
        sgn = 1.0 if d >= 0 else -1.0
        return [sgn * unit], abs(d) > norm
    foot = (d / norm) * unit
    h = float(np.sqrt(max(0.0, 1.0 - (d / norm) ** 2)))
    perp = np.array([-unit[1], unit[0]])
    return [foot + h * perp, foot - h * perp], False


def solve_phase(sys: PhaseSystem, opts: ReconstructionOptions) -> tuple[float, float, PhaseFlags]:
    """(cos delta, sin delta) on the unit circle, plus flags describing the path taken.

    Well-conditioned systems: least squares projected radially onto the
    circle.  Ill-conditioned ones (cond above the threshold): the dominant
    row is intersected with the circle and the candidate with the smaller
    residual over all rows wins; ties break toward delta = 0, then toward
    non-negative sine.  A system whose rows are all exactly zero, or whose
    least-squares solution sits at the origin, pins nothing: the default
    phase (1, 0) is returned and flagged.
    """
    if sys.rows.shape[0] < 1:
        raise ValueError("empty phase system")
    if not sys.rows.any():
        return 1.0, 0.0, PhaseFlags(default_phase=True)
    if sys.cond <= opts.cond_threshold:
        x = phase_ls(sys)
        r = float(np.hypot(x[0], x[1]))
        if r < ZERO_SOLUTION_EPS:
            return 1.0, 0.0, PhaseFlags(default_phase=True)
        return float(x[0] / r), float(x[1] / r), PhaseFlags()
    if opts.ambiguity_policy == "fail":
        raise AmbiguityError(sys.j, sys.beta, f"condition number {sys.cond:.3g} above threshold")
    dom = int(np.argmax(np.einsum("ij,ij->i", sys.rows, sys.rows)))
    cands, clamped = _circle_candidates(sys.rows[dom], float(sys.rhs[dom]))
    best = None
    best_res = np.inf
    for cand in cands:
        res = float(np.sum((sys.rows @ cand - sys.rhs) ** 2))
        if (
            best is None
            or res < best_res - TIE_EPS
            or (abs(res - best_res) <= TIE_EPS and (cand[0] > best[0] + TIE_EPS or (abs(cand[0] - best[0]) <= TIE_EPS and cand[1] > best[1])))
        ):
            best, best_res = cand, res
    return float(best[0]), float(best[1]), PhaseFlags(fallback=True, clamped=clamped)


def merge_children(childA: ReducedState, childB: ReducedState, cos_d: float, sin_d: float) -> ReducedState:
    """Parent block [childA; e^{i delta} childB]; a null child embeds the other with delta = 0."""
    if childA.j != childB.j:
        raise ValueError(f"cannot merge levels {childA.j} and {childB.j}")
    if childA.beta % 2 != 0 or childB.beta != childA.beta + 1:
        raise ValueError(f"blocks {childA.beta} and {childB.beta} are not siblings")
    if childA.is_null or childB.is_null:
        amps = np.concatenate([childA.amps, childB.amps])
    else:
        amps = np.concatenate([childA.amps, (cos_d + 1j * sin_d) * childB.amps])
    return make_reduced(childA.j + 1, childA.beta // 2, amps)


def _records_by_id(records: list[CountsRecord], n: int) -> dict:
    dim = 1 << n
    by_id = {}
    for rec in records:
        if np.asarray(rec.counts).shape != (dim,):
            raise ValueError(f"record {rec.basis} has {np.asarray(rec.counts).size} outcomes, expected {dim} for n={n}")
        by_id[str(rec.basis)] = rec
    return by_id


def _system_equations(
    id: BasisId,
    emp: np.ndarray,
    j: int,
    beta: int,
    n: int,
    use_extra_rows: bool,
) -> list:
    """(role, probability) pairs this basis record contributes to system (j, beta)."""
    if id.tag == "local":
        base = beta << j
        if use_extra_rows:
            ks = range(base, base + (1 << j))
        else:
            ks = [base + (1 << (j - 1)) - 1]
        return [(outcome_role(id, k, n), float(emp[k])) for k in ks]
    off = (1 << n) - (1 << (n - j + 1))
    k = off + beta
    return [(outcome_role(id, k, n), float(emp[k]))]


def reconstruct(records: list[CountsRecord], n: int, opts: ReconstructionOptions) -> tuple[PureState, Diagnostics]:
    """Estimate the n-qubit state from one record per required basis.

    Level j = 1..n: split each length-2^j block into its two children,
    solve the phase system from the level's measurement records, and merge.
    Blocks with a null child produce no system (the surviving child embeds
    with phase 0).  The estimate is renormalized and global-phase normalized;
    the whole procedure is deterministic.
    """
    family = opts.resolved_family()
    by_id = _records_by_id(records, n)
    comp = by_id.get("computational")
    if comp is None:
        raise ValueError("computational-basis record is required")
    if opts.mode == "local":
        needed = {a: [local_id(a, b) for b in range(1, n + 1)] for a in range(1, opts.m + 1)}
    else:
        needed = {a: [entangled_id(a)] for a in range(1, opts.m + 1)}
    emp = {}
    for ids in needed.values():
        for id in ids:
            rec = by_id.get(str(id))
            if rec is None:
                raise ValueError(f"missing record for basis {id}")
            emp[str(id)] = to_empirical(rec)

    diag = Diagnostics(n=n)
    work = amplitudes_from_counts(comp, n, opts.null_threshold).astype(np.complex128)
    for j in range(1, n + 1):
        half = 1 << (j - 1)
        if opts.mode == "local":
            level_ids = [needed[a][j - 1] for a in range(1, opts.m + 1)]
        else:
            level_ids = [needed[a][0] for a in range(1, opts.m + 1)]
        for beta in range(1 << (n - j)):
            lo = beta << j
            a_amps = work[lo : lo + half]
            b_amps = work[lo + half : lo + 2 * half]
            null_a = not a_amps.any()
            null_b = not b_amps.any()
            if null_a or null_b:
                diag.null_branches.append((j, beta))
                continue
            childA = ReducedState(j=j - 1, beta=2 * beta, amps=a_amps, is_null=False)
            childB = ReducedState(j=j - 1, beta=2 * beta + 1, amps=b_amps, is_null=False)
            equations = []
            for id in level_ids:
                equations.extend(_system_equations(id, emp[str(id)], j, beta, n, opts.use_extra_rows))
            sys = build_system(j, beta, childA, childB, equations, family)
            diag.conds[(j, beta)] = sys.cond
            cos_d, sin_d, flags = solve_phase(sys, opts)
            diag.phases[(j, beta)] = (cos_d, sin_d)
            if flags.fallback:
                diag.fallbacks.append((j, beta))
            if flags.default_phase:
                diag.default_phases.append((j, beta))
            b_amps *= cos_d + 1j * sin_d
    norm = float(np.linalg.norm(work))
    if norm == 0.0:
        raise ValueError("all amplitudes clamped to zero; nothing to reconstruct")
    estimate = global_phase_normalize(PureState(n=n, amps=_freeze(work / norm)))
    return estimate, diag


def reconstruct_from_probs(tables: list[ProbTable], n: int, opts: ReconstructionOptions) -> tuple[PureState, Diagnostics]:
    """Infinite-statistics reconstruction straight from exact outcome distributions."""
    return reconstruct([exact_record(t) for t in tables], n, opts)


def estimate_to_dict(state: PureState, diag: Diagnostics) -> dict:
    from .states import state_to_dict

    out = state_to_dict(state)
    out["diagnostics"] = diag.to_dict()
    return out
