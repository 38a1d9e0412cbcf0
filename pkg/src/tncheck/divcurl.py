"""Wave-cone membership for the div-curl system and T_N' configurations.

A stacked matrix (X, Y, Z) with X, Y of shape n x m and Z of shape m x m
belongs to the wave cone when some direction xi != 0 satisfies
X = u (x) xi, Y xi = 0 and Z xi = 0.  A T_N' configuration stacks a
T_N-shaped laminate in each of the three blocks and requires every arm
(C_i, D_i, E_i) to lie in the wave cone.

Directions are kept as exact rational vectors: every membership condition
is invariant under rescaling of xi, so unit normalization is cosmetic and
would break exactness.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from tncheck.linalg import (
    RatMatrix,
    ZERO_MATRIX,
    nullspace,
    outer,
    rank_one_decompose,
    rat,
    rat_str,
)
from tncheck.tn import (
    TNConfig,
    TnError,
    closing_rank_one_arms,
    points_from_config,
    random_k,
    verify_tn,
)


@dataclass(frozen=True)
class StackedMatrix:
    """Blocks X (n x m), Y (n x m), Z (m x m) of one div-curl state."""

    X: RatMatrix
    Y: RatMatrix
    Z: RatMatrix

    def __post_init__(self):
        n, m = self.X.shape
        if self.Y.shape != (n, m):
            raise ValueError("X and Y blocks must share their shape")
        if self.Z.shape != (m, m):
            raise ValueError("Z block must be m x m")

    @property
    def shape(self):
        return self.X.shape

    def __add__(self, other: "StackedMatrix") -> "StackedMatrix":
        return StackedMatrix(self.X + other.X, self.Y + other.Y, self.Z + other.Z)

    def __sub__(self, other: "StackedMatrix") -> "StackedMatrix":
        return StackedMatrix(self.X - other.X, self.Y - other.Y, self.Z - other.Z)

    def __neg__(self) -> "StackedMatrix":
        return StackedMatrix(-self.X, -self.Y, -self.Z)

    def scale(self, s) -> "StackedMatrix":
        return StackedMatrix(self.X.scale(s), self.Y.scale(s), self.Z.scale(s))

    def is_zero(self) -> bool:
        return self.X.is_zero() and self.Y.is_zero() and self.Z.is_zero()

    @staticmethod
    def zero(n: int, m: int) -> "StackedMatrix":
        return StackedMatrix(RatMatrix.zero(n, m), RatMatrix.zero(n, m),
                             RatMatrix.zero(m, m))

    def to_json(self):
        return {"X": self.X.to_json(), "Y": self.Y.to_json(), "Z": self.Z.to_json()}

    @staticmethod
    def from_json(doc) -> "StackedMatrix":
        return StackedMatrix(RatMatrix.from_json(doc["X"]),
                             RatMatrix.from_json(doc["Y"]),
                             RatMatrix.from_json(doc["Z"]))


@dataclass(frozen=True)
class WaveConeWitness:
    """Rational direction xi and vector u with X = u (x) xi, Y xi = 0,
    Z xi = 0 for the owning stacked matrix."""

    xi: RatMatrix  # m x 1, nonzero
    u: RatMatrix   # n x 1

    def __post_init__(self):
        if self.xi.is_zero():
            raise ValueError("witness direction must be nonzero")

    def to_json(self):
        return {"xi": [rat_str(x) for x in self.xi.entries],
                "u": [rat_str(x) for x in self.u.entries]}

    @staticmethod
    def from_json(doc) -> "WaveConeWitness":
        return WaveConeWitness(RatMatrix.column(doc["xi"]),
                               RatMatrix.column(doc["u"]))


@dataclass
class WaveConeResult:
    witness: Optional[WaveConeWitness]
    reason: str

    @property
    def member(self) -> bool:
        return self.witness is not None


def _witness_conditions_hold(W: StackedMatrix, wit: WaveConeWitness) -> bool:
    return (W.X == outer(wit.u, wit.xi)
            and (W.Y @ wit.xi).is_zero()
            and (W.Z @ wit.xi).is_zero())


def wave_cone_membership(W: StackedMatrix) -> WaveConeResult:
    """Decide membership exactly and return a witness or the reason why
    none exists.

    For X != 0 the direction is forced (up to scale) by a rank-one
    decomposition of X; for X = 0 any common kernel vector of Y and Z
    works, found by an exact kernel intersection.
    """
    n, m = W.shape
    decomp = rank_one_decompose(W.X)
    if decomp is None:
        return WaveConeResult(None, "X has rank >= 2")
    if decomp is not ZERO_MATRIX:
        u, v = decomp
        xi = RatMatrix.column(v.entries)
        if (W.Y @ xi).is_zero() and (W.Z @ xi).is_zero():
            return WaveConeResult(WaveConeWitness(xi, u), "rank-one X forces the direction")
        return WaveConeResult(
            None, "the direction forced by X is not in the kernels of Y and Z")
    stacked = RatMatrix((2 * n + m) - n, m,
                        W.Y.entries + W.Z.entries)  # rows of Y over rows of Z
    kernel = nullspace(stacked)
    if kernel:
        return WaveConeResult(
            WaveConeWitness(kernel[0], RatMatrix.zero(n, 1)),
            "X = 0; first kernel vector of the stacked (Y; Z) block")
    return WaveConeResult(None, "X = 0 but Y and Z have no common kernel direction")


@dataclass(frozen=True)
class TNPrimeConfig:
    """Stacked base (P, Q, R), stacked arms (C_i, D_i, E_i), coefficients,
    and one wave-cone witness per arm."""

    base: StackedMatrix
    arms: Tuple[StackedMatrix, ...]
    ks: Tuple[Fraction, ...]
    witnesses: Tuple[WaveConeWitness, ...]

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        object.__setattr__(self, "ks", tuple(rat(k) for k in self.ks))
        object.__setattr__(self, "witnesses", tuple(self.witnesses))
        if not (len(self.arms) == len(self.ks) == len(self.witnesses)):
            raise TnError("arms, coefficients and witnesses must align")
        if len(self.arms) < 2:
            raise TnError("a configuration needs at least two arms")
        for arm in self.arms:
            if arm.shape != self.base.shape:
                raise TnError("arm shape differs from base shape")

    @property
    def N(self) -> int:
        return len(self.arms)

    @property
    def shape(self):
        return self.base.shape

    def x_config(self) -> TNConfig:
        return TNConfig(self.base.X, tuple(a.X for a in self.arms), self.ks)

    def to_json(self):
        return {
            "N": self.N,
            "base": self.base.to_json(),
            "arms": [a.to_json() for a in self.arms],
            "k": [rat_str(k) for k in self.ks],
            "witnesses": [w.to_json() for w in self.witnesses],
        }

    @staticmethod
    def from_json(doc) -> "TNPrimeConfig":
        return TNPrimeConfig(
            StackedMatrix.from_json(doc["base"]),
            tuple(StackedMatrix.from_json(a) for a in doc["arms"]),
            tuple(rat(k) for k in doc["k"]),
            tuple(WaveConeWitness.from_json(w) for w in doc["witnesses"]),
        )


def stacked_points(cfg: TNPrimeConfig) -> Tuple[StackedMatrix, ...]:
    """A_i = base + arm_1 + ... + arm_{i-1} + k_i arm_i, blockwise."""
    points = []
    partial = cfg.base
    for i in range(cfg.N):
        points.append(partial + cfg.arms[i].scale(cfg.ks[i]))
        partial = partial + cfg.arms[i]
    return tuple(points)


@dataclass
class TnPrimeVerdict:
    relation_residuals: List[StackedMatrix]
    closing_residual: StackedMatrix
    wave_cone_ok: List[bool]
    k_ok: List[bool]
    distinct_stacked: bool
    distinct_x: bool
    nondegenerate: bool
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (all(r.is_zero() for r in self.relation_residuals)
                and self.closing_residual.is_zero()
                and all(self.wave_cone_ok) and all(self.k_ok)
                and self.distinct_stacked)

    def failures(self) -> List[str]:
        out = []
        for i, r in enumerate(self.relation_residuals, start=1):
            if not r.is_zero():
                out.append(f"stacked-linear-relations[{i}]")
        if not self.closing_residual.is_zero():
            out.append("closing-sums")
        for i, ok in enumerate(self.wave_cone_ok, start=1):
            if not ok:
                out.append(f"wave-cone[{i}]")
        for i, ok in enumerate(self.k_ok, start=1):
            if not ok:
                out.append(f"k-bounds[{i}]")
        if not self.distinct_stacked:
            out.append("distinctness")
        return out

    def to_json(self):
        return {
            "passed": self.passed,
            "failures": self.failures(),
            "checks": {
                "stacked-linear-relations": all(r.is_zero() for r in self.relation_residuals),
                "closing-sums": self.closing_residual.is_zero(),
                "wave-cone": all(self.wave_cone_ok),
                "k-bounds": all(self.k_ok),
                "distinctness": self.distinct_stacked,
                "x-block-distinctness": self.distinct_x,
            },
            "nondegenerate": self.nondegenerate,
            "notes": list(self.notes),
        }


def verify_tnprime(points: Sequence[StackedMatrix], cfg: TNPrimeConfig) -> TnPrimeVerdict:
    """Check stacked linear relations, the three closing sums, per-arm wave
    cone membership, k_i > 1, and distinctness of the stacked points.

    Distinctness of the X blocks alone is reported separately: repeated X
    blocks keep the stacked configuration valid but stop the X projection
    from being a T_N on its own.
    """
    if len(points) != cfg.N:
        raise TnError(f"{len(points)} points for {cfg.N} arms")
    expected = stacked_points(cfg)
    relation_residuals = [points[i] - expected[i] for i in range(cfg.N)]
    closing = cfg.arms[0]
    for a in cfg.arms[1:]:
        closing = closing + a
    wave_ok = []
    for arm, wit in zip(cfg.arms, cfg.witnesses):
        wave_ok.append(_witness_conditions_hold(arm, wit))
    k_ok = [k > 1 for k in cfg.ks]
    N = cfg.N
    distinct_stacked = all(not (points[i] - points[j]).is_zero()
                           for i in range(N) for j in range(i + 1, N))
    distinct_x = all(points[i].X != points[j].X
                     for i in range(N) for j in range(i + 1, N))
    nondegenerate = all(rank_one_decompose(a.X) not in (None, ZERO_MATRIX)
                        for a in cfg.arms)
    notes = []
    if N == 2:
        notes.append("degenerate-N2: two arms span a single wave-cone line")
    return TnPrimeVerdict(relation_residuals, closing, wave_ok, k_ok,
                          distinct_stacked, distinct_x, nondegenerate, notes)


@dataclass
class StructuralReport:
    """Structural consequences of a valid configuration: the X projection
    is a T_N (when its points are distinct), the witnesses annihilate
    their D and E blocks, and <C_i, D_i> = 0 for every arm."""

    x_projection: Optional[str]   # None = verified; else why not applicable
    witness_ok: List[bool]
    orthogonality: List[Fraction]

    @property
    def passed(self) -> bool:
        return (self.x_projection is None and all(self.witness_ok)
                and all(x == 0 for x in self.orthogonality))


def structural_checks(cfg: TNPrimeConfig) -> StructuralReport:
    xcfg = cfg.x_config()
    xpoints = points_from_config(xcfg)
    if all(xpoints[i] != xpoints[j]
           for i in range(cfg.N) for j in range(i + 1, cfg.N)):
        verdict = verify_tn(xpoints, xcfg)
        x_note = None if verdict.passed else \
            f"X projection fails: {verdict.failures()}"
    else:
        x_note = "not applicable: repeated X blocks"
    witness_ok = [_witness_conditions_hold(arm, wit)
                  for arm, wit in zip(cfg.arms, cfg.witnesses)]
    orthogonality = [arm.X.inner(arm.Y) for arm in cfg.arms]
    return StructuralReport(x_note, witness_ok, orthogonality)


# -- generator ------------------------------------------------------------

def annihilator_basis(direction: RatMatrix):
    """Exact basis of the hyperplane orthogonal to a nonzero direction."""
    return nullspace(direction.transpose())


def closing_annihilated_blocks(rows: int, m: int, dirs: Sequence[RatMatrix],
                               rng: random.Random):
    """Blocks D_i (rows x m) with D_i dirs_i = 0 and sum D_i = 0.

    The first N-2 blocks are random in their annihilators; the last two
    are solved exactly.  Requires the last two directions to be either
    linearly independent or (when N = 2 forces it) parallel with a zero
    partial sum.  Returns None when the draw cannot be balanced.
    """
    N = len(dirs)
    blocks = []
    for i in range(N - 2):
        basis = annihilator_basis(dirs[i])
        B = RatMatrix.zero(rows, m)
        for b in basis:
            w = RatMatrix.column([rng.randint(-2, 2) for _ in range(rows)])
            B = B + outer(w, b)
        blocks.append(B)
    S = RatMatrix.zero(rows, m)
    for B in blocks:
        S = S + B
    d_prev, d_last = dirs[-2], dirs[-1]
    # need T with T d_prev = 0 and T d_last = -S d_last
    pair = RatMatrix(m, 2, tuple(x for row in zip(d_prev.entries, d_last.entries)
                                 for x in row))
    from tncheck.linalg import inverse, rank
    if rank(pair) == 2:
        cols = [d_prev, d_last]
        targets = [RatMatrix.zero(rows, 1), -(S @ d_last)]
        for e in range(m):
            if len(cols) == m:
                break
            cand = RatMatrix.column([1 if i == e else 0 for i in range(m)])
            trial = RatMatrix(m, len(cols) + 1,
                              tuple(x for row in zip(*[c.entries for c in cols + [cand]])
                                    for x in row))
            if rank(trial) == len(cols) + 1:
                cols.append(cand)
                targets.append(RatMatrix.column([rng.randint(-2, 2)
                                                 for _ in range(rows)]))
        B = RatMatrix(m, m, tuple(x for row in zip(*[c.entries for c in cols])
                                  for x in row))
        Binv = inverse(B)
        target = RatMatrix(rows, m,
                           tuple(x for row in zip(*[t.entries for t in targets])
                                 for x in row))
        T = target @ Binv
    else:
        # parallel last directions: balance works only if S kills d_last
        if not (S @ d_last).is_zero():
            return None
        basis = annihilator_basis(d_prev)
        T = RatMatrix.zero(rows, m)
        for b in basis:
            w = RatMatrix.column([rng.randint(-2, 2) for _ in range(rows)])
            T = T + outer(w, b)
    blocks.append(T)
    blocks.append(-(S + T))
    return blocks


def random_tnprime(n: int, m: int, N: int, rng: random.Random,
                   normalized: bool = False) -> TNPrimeConfig:
    """Seed-deterministic valid configuration.

    Rank-one C arms come from the exact closing construction; D and E
    blocks are drawn in the annihilators of their directions with the last
    two solved to balance the closing sums (pure rejection cannot hit
    those kernel conditions).  With ``normalized`` the base is P = Q = 0
    with a trace-free R.
    """
    if N < 2:
        raise TnError("N must be at least 2")
    for _ in range(100):
        arms_c, us, dirs = closing_rank_one_arms(n, m, N, rng)
        ds = closing_annihilated_blocks(n, m, dirs, rng)
        es = closing_annihilated_blocks(m, m, dirs, rng)
        if ds is None or es is None:
            continue
        ks = tuple(random_k(rng) for _ in range(N))
        if normalized:
            P = RatMatrix.zero(n, m)
            Q = RatMatrix.zero(n, m)
            R = RatMatrix.from_rows([[rng.randint(-3, 3) for _ in range(m)]
                                     for _ in range(m)])
            shift = R.trace() / m
            R = R - RatMatrix.identity(m).scale(shift)
        else:
            P = RatMatrix.from_rows([[rng.randint(-3, 3) for _ in range(m)]
                                     for _ in range(n)])
            Q = RatMatrix.from_rows([[rng.randint(-3, 3) for _ in range(m)]
                                     for _ in range(n)])
            R = RatMatrix.from_rows([[rng.randint(-3, 3) for _ in range(m)]
                                     for _ in range(m)])
        base = StackedMatrix(P, Q, R)
        arms = tuple(StackedMatrix(arms_c[i], ds[i], es[i]) for i in range(N))
        witnesses = tuple(WaveConeWitness(dirs[i], us[i]) for i in range(N))
        cfg = TNPrimeConfig(base, arms, ks, witnesses)
        points = stacked_points(cfg)
        verdict = verify_tnprime(points, cfg)
        if verdict.passed:
            return cfg
    raise TnError("generator retry budget exhausted; reseed")
