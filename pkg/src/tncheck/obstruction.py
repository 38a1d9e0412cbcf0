"""Gauge normalization, the exact identities of the infeasibility argument,
and the trace certificate.

Pipeline: a configuration with consistent third blocks (Z_i = X_i^T Y_i -
c_i id) and normalized base (P = Q = 0, trace-free R) satisfies a chain of
exact identities culminating in a block-triangular representation of R
whose diagonal carries xi_i nu_i over an independent subset A of the arm
directions.  Since tr(R) = 0, the weighted sum of the nu_i over A vanishes
exactly, so the strict system nu_i > 0 for all i is infeasible: no such
configuration fits inside the inclusion set of a strictly polyconvex
energy.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from tncheck.divcurl import (
    StackedMatrix,
    TNPrimeConfig,
    WaveConeWitness,
    stacked_points,
    verify_tnprime,
)
from tncheck.linalg import RatMatrix, nullspace, rank, rat, rat_str, solve
from tncheck.tn import (
    DefiningVector,
    TnError,
    defining_vector_from_ks,
    random_tn,
    points_from_config,
    t_vectors,
)


class IdentityViolation(TnError):
    """An exact identity that must hold on consistent input failed."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class GaugeParams:
    """Target base point S, target gradient base T, cost shift a."""

    S: RatMatrix
    T: RatMatrix
    a: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", rat(self.a))


def gauge_normalize(cfg: TNPrimeConfig, costs: Sequence[Fraction],
                    gp: GaugeParams) -> Tuple[TNPrimeConfig, Tuple[Fraction, ...]]:
    """Rebase a configuration to (S, T) and shift costs by a.

    X arms and Y arms are unchanged; the third-block arms become
    E_i - C_i^T V + <C_i, V> id + O^T D_i with O = S - P, V = Q - T, and the
    rebuilt base is (S, T, U) with
    U = R - P^T V + O^T T + (<P, V> + a) id.  New costs are
    c_i - <X_i, V> - a (inner product against the input points).
    Membership-consistent input stays consistent, and the three structural
    properties (closing sum, barycentric relations, direction annihilation)
    hold exactly on the output.
    """
    if len(costs) != cfg.N:
        raise TnError("need one cost per arm")
    costs = [rat(c) for c in costs]
    P, Q, R = cfg.base.X, cfg.base.Y, cfg.base.Z
    O = gp.S - P
    V = Q - gp.T
    m = P.cols
    ident = RatMatrix.identity(m)

    new_arms = []
    for arm in cfg.arms:
        E_new = (arm.Z - arm.X.T @ V + ident.scale(arm.X.inner(V))
                 + O.T @ arm.Y)
        new_arms.append(StackedMatrix(arm.X, arm.Y, E_new))
    U = R - P.T @ V + O.T @ gp.T + ident.scale(P.inner(V) + gp.a)

    new_cfg = TNPrimeConfig(StackedMatrix(gp.S, gp.T, U), tuple(new_arms),
                            cfg.ks, cfg.witnesses)
    old_points = points_from_config(cfg.x_config())
    new_costs = tuple(costs[i] - old_points[i].inner(V) - gp.a
                      for i in range(cfg.N))
    return new_cfg, new_costs


def normalizing_gauge(cfg: TNPrimeConfig) -> GaugeParams:
    """The gauge (S, T, a) = (0, 0, a*) whose output has zero base points
    and a trace-free third base block.

    tr(U) = tr(R) + (m - 1) <P, Q> + m a, so a* solves the single linear
    equation tr(U) = 0.
    """
    n, m = cfg.shape
    P, Q, R = cfg.base.X, cfg.base.Y, cfg.base.Z
    a_star = -(R.trace() + (m - 1) * P.inner(Q)) / m
    return GaugeParams(RatMatrix.zero(n, m), RatMatrix.zero(n, m), a_star)


def gauge_output_checks(cfg: TNPrimeConfig):
    """Exact residuals of the three structural properties of the third
    block: arms close to zero, barycentric rows reproduce the partial sums,
    and every arm annihilates its direction."""
    dv = defining_vector_from_ks(cfg.ks)
    ts, _ = t_vectors(dv)
    points = stacked_points(cfg)
    closing = cfg.arms[0].Z
    for arm in cfg.arms[1:]:
        closing = closing + arm.Z
    bary = []
    partial = cfg.base.Z
    for i in range(cfg.N):
        acc = points[0].Z.scale(ts[i][0])
        for j in range(1, cfg.N):
            acc = acc + points[j].Z.scale(ts[i][j])
        bary.append(acc - partial)
        partial = partial + cfg.arms[i].Z
    annih = [arm.Z @ wit.xi for arm, wit in zip(cfg.arms, cfg.witnesses)]
    return closing, bary, annih


def _require_normalized(cfg: TNPrimeConfig):
    if not (cfg.base.X.is_zero() and cfg.base.Y.is_zero()):
        raise TnError("operation requires a normalized base (P = Q = 0)")


def _weights(dv: DefiningVector, ks) -> List[Fraction]:
    """k_i (k_i - 1) lambda_i, the diagonal weights of the R identity."""
    return [k * (k - 1) * l for k, l in zip(ks, dv.lam)]


def r_identity(cfg: TNPrimeConfig):
    """Exact residuals of the two base identities for normalized input:
    sum_j lambda_j X_j^T Y_j - sum_i k_i(k_i-1) lambda_i C_i^T D_i  (matrix)
    and sum_j lambda_j <X_j, Y_j>  (scalar)."""
    _require_normalized(cfg)
    dv = defining_vector_from_ks(cfg.ks)
    points = stacked_points(cfg)
    m = cfg.shape[1]
    lhs = RatMatrix.zero(m, m)
    scalar = Fraction(0)
    for lam, A in zip(dv.lam, points):
        prod = A.X.T @ A.Y
        lhs = lhs + prod.scale(lam)
        scalar += lam * A.X.inner(A.Y)
    rhs = RatMatrix.zero(m, m)
    for w, arm in zip(_weights(dv, cfg.ks), cfg.arms):
        rhs = rhs + (arm.X.T @ arm.Y).scale(w)
    return lhs - rhs, scalar


@dataclass
class ConsistencyReport:
    costs: Tuple[Fraction, ...]
    nu: Tuple[Fraction, ...]
    xi: Tuple[Fraction, ...]
    R: RatMatrix
    sum_lambda_c: Fraction
    r_matches: bool
    trace_free: bool

    @property
    def consistent(self) -> bool:
        return self.r_matches and self.trace_free and self.sum_lambda_c == 0


def consistency_and_nu(cfg: TNPrimeConfig,
                       costs: Optional[Sequence[Fraction]] = None) -> ConsistencyReport:
    """Extract or validate costs from the third blocks and compute the
    certificate ingredients.

    Requires normalized base and Z_i = X_i^T Y_i - c_i id exactly (raises
    :class:`IdentityViolation` naming the first offending index otherwise).
    Reports whether sum_j lambda_j c_j = 0, whether the third base block
    equals sum_i k_i(k_i-1) lambda_i C_i^T D_i, and whether it is
    trace-free.
    """
    _require_normalized(cfg)
    points = stacked_points(cfg)
    m = cfg.shape[1]
    ident = RatMatrix.identity(m)
    extracted = []
    for i, A in enumerate(points, start=1):
        M = A.X.T @ A.Y - A.Z
        c_i = M.entry(0, 0)
        if costs is not None:
            c_i = rat(costs[i - 1])
        if M != ident.scale(c_i):
            raise IdentityViolation(
                f"third block of point {i} is not X^T Y - c id", index=i)
        extracted.append(c_i)
    dv = defining_vector_from_ks(cfg.ks)
    ts, xis = t_vectors(dv)
    nu = []
    for i in range(cfg.N):
        s = sum((ts[i][j] * extracted[j] for j in range(cfg.N)), Fraction(0))
        nu.append(-(extracted[i] - s
                    - cfg.ks[i] * points[i].Y.inner(cfg.arms[i].X)))
    R = cfg.base.Z
    rhs = RatMatrix.zero(m, m)
    for w, arm in zip(_weights(dv, cfg.ks), cfg.arms):
        rhs = rhs + (arm.X.T @ arm.Y).scale(w)
    sum_lc = sum((l * c for l, c in zip(dv.lam, extracted)), Fraction(0))
    return ConsistencyReport(tuple(extracted), tuple(nu), tuple(xis), R,
                             sum_lc, R == rhs, R.trace() == 0)


def finaleq_check(cfg: TNPrimeConfig, costs: Sequence[Fraction]) -> List[RatMatrix]:
    """Per-arm residual vectors of the direction evaluation identity
    (1/xi_i)(R n_i + (mu-1) sum_{a<i} w_a C_a^T D_a n_i) = nu_i n_i."""
    _require_normalized(cfg)
    costs = [rat(c) for c in costs]
    dv = defining_vector_from_ks(cfg.ks)
    ts, xis = t_vectors(dv)
    weights = _weights(dv, cfg.ks)
    points = stacked_points(cfg)
    R = cfg.base.Z
    residuals = []
    for i in range(cfg.N):
        n_i = cfg.witnesses[i].xi
        acc = R @ n_i
        for a in range(i):
            acc = acc + ((cfg.arms[a].X.T @ cfg.arms[a].Y) @ n_i).scale(
                (dv.mu - 1) * weights[a])
        s = sum((ts[i][j] * costs[j] for j in range(cfg.N)), Fraction(0))
        nu_i = -(costs[i] - s - cfg.ks[i] * points[i].Y.inner(cfg.arms[i].X))
        residuals.append(acc.scale(Fraction(1) / xis[i]) - n_i.scale(nu_i))
    return residuals


def independent_set(directions: Sequence[RatMatrix]) -> Tuple[int, ...]:
    """Greedy independent prefix subset (1-based): index 1 plus every j
    whose direction is not a combination of the strictly earlier ones.
    The selected directions are independent and span the full span."""
    chosen: List[RatMatrix] = []
    out = []
    current_rank = 0
    for j, d in enumerate(directions, start=1):
        trial = RatMatrix(d.rows, len(chosen) + 1,
                          tuple(x for row in zip(*[c.entries for c in chosen + [d]])
                                for x in row))
        r = rank(trial)
        if r > current_rank:
            chosen.append(d)
            out.append(j)
            current_rank = r
    return tuple(out)


@dataclass
class Certificate:
    """Outcome of the trace argument.

    ``INFEASIBLE_STRICT_SYSTEM`` records the exact identity
    sum_{j in A} xi_j nu_j = tr(R) = 0 over the independent direction set
    A, which makes nu_i > 0 for all i impossible.  Inconsistent input
    yields ``IDENTITY_VIOLATION`` with a detail message instead.
    """

    verdict: str
    A: Tuple[int, ...] = ()
    xi: Tuple[Fraction, ...] = ()
    nu: Tuple[Fraction, ...] = ()
    trace_residual: Fraction = Fraction(0)
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.verdict == "INFEASIBLE_STRICT_SYSTEM"

    def to_json(self):
        doc = {"verdict": self.verdict, "detail": self.detail}
        if self.ok:
            doc.update({
                "A": list(self.A),
                "xi": [rat_str(x) for x in self.xi],
                "nu": [rat_str(x) for x in self.nu],
                "trace_residual": rat_str(self.trace_residual),
                "weighted_nu_sum_over_A": rat_str(
                    sum((self.xi[j - 1] * self.nu[j - 1] for j in self.A),
                        Fraction(0))),
                "min_nu": rat_str(min(self.nu)),
            })
        return doc


def _orthogonal_completion(vectors: List[RatMatrix], m: int) -> List[RatMatrix]:
    """Vectors orthogonal to the given ones and to each other, completing
    them to a basis; exact unnormalized Gram-Schmidt."""
    ortho = []
    for v in vectors:
        w = v
        for o in ortho:
            w = w - o.scale(o.inner(w) / o.inner(o))
        ortho.append(w)
    completion = []
    for k in range(m):
        e = RatMatrix.column([1 if i == k else 0 for i in range(m)])
        w = e
        for o in ortho:
            w = w - o.scale(o.inner(w) / o.inner(o))
        if not w.is_zero():
            ortho.append(w)
            completion.append(w)
        if len(vectors) + len(completion) == m:
            break
    return completion


def certify(cfg: TNPrimeConfig,
            costs: Optional[Sequence[Fraction]] = None) -> Certificate:
    """Run the full trace argument on a normalized consistent configuration.

    Builds the independent direction set A, represents the third base
    block in the basis {n_s : s in A} plus an orthogonal completion,
    asserts the block-triangular shape with diagonal xi_i nu_i, and checks
    sum_{j in A} xi_j nu_j = tr = 0, all exactly.
    """
    try:
        rep = consistency_and_nu(cfg, costs)
        if not rep.consistent:
            raise IdentityViolation(
                "base identities fail: "
                f"sum lambda_j c_j = {rat_str(rep.sum_lambda_c)}, "
                f"R matches weighted sum: {rep.r_matches}, "
                f"trace-free: {rep.trace_free}")
        for i, res in enumerate(finaleq_check(cfg, rep.costs), start=1):
            if not res.is_zero():
                raise IdentityViolation(
                    f"direction evaluation identity fails at arm {i}", index=i)
    except IdentityViolation as err:
        return Certificate(verdict="IDENTITY_VIOLATION", detail=str(err))

    ns = [w.xi for w in cfg.witnesses]
    A = independent_set(ns)
    m = cfg.shape[1]
    basis_vectors = [ns[j - 1] for j in A]
    gammas = _orthogonal_completion(list(basis_vectors), m)
    cols = basis_vectors + gammas
    B = RatMatrix(m, m, tuple(x for row in zip(*[c.entries for c in cols])
                              for x in row))
    R = cfg.base.Z
    M = solve(B, R @ B)
    if M is None:
        return Certificate(verdict="IDENTITY_VIOLATION",
                           detail="direction basis is singular")
    s = len(A)
    for r in range(m):
        for c in range(m):
            entry = M.entry(r, c)
            if r < s and c < s:
                if r > c and entry != 0:
                    return Certificate(verdict="IDENTITY_VIOLATION",
                                       detail=f"triangular block broken at ({r + 1}, {c + 1})")
                if r == c and entry != rep.xi[A[r] - 1] * rep.nu[A[r] - 1]:
                    return Certificate(verdict="IDENTITY_VIOLATION",
                                       detail=f"diagonal entry {r + 1} is not xi nu")
            elif r >= s and entry != 0:
                return Certificate(verdict="IDENTITY_VIOLATION",
                                   detail=f"completion block nonzero at ({r + 1}, {c + 1})")
    trace_residual = sum((rep.xi[j - 1] * rep.nu[j - 1] for j in A), Fraction(0))
    if trace_residual != R.trace() or trace_residual != 0:
        return Certificate(verdict="IDENTITY_VIOLATION",
                           detail="weighted nu sum does not balance the trace")
    return Certificate(
        verdict="INFEASIBLE_STRICT_SYSTEM", A=A, xi=rep.xi, nu=rep.nu,
        trace_residual=trace_residual,
        detail="sum of xi_j nu_j over the independent set is exactly zero, "
               "so nu_i > 0 for every i is impossible")


# -- consistent instance generator ------------------------------------------

def random_consistent_tnprime(n: int, m: int, N: int, rng: random.Random
                              ) -> Tuple[TNPrimeConfig, Tuple[Fraction, ...]]:
    """Seed-deterministic normalized consistent configuration.

    The X blocks come from a random rank-one laminate.  The Y arms and the
    costs then satisfy a homogeneous exact linear system (direction
    annihilation for the D and derived E arms, closing sums, cost
    balance); a random rational kernel element gives the instance, and
    Z_i := X_i^T Y_i - c_i id closes the construction.  Rejection sampling
    cannot hit these kernel conditions, hence the direct solve.
    """
    from tncheck.linalg import rank_one_decompose

    from tncheck.tn import TNConfig

    for _ in range(50):
        drawn = random_tn(n, m, N, rng)
        # normalized base: translate the laminate to P = 0 (distinctness
        # of the points is translation invariant)
        xcfg = TNConfig(RatMatrix.zero(n, m), drawn.arms, drawn.ks)
        deco = [rank_one_decompose(C) for C in xcfg.arms]
        if any(d is None or not isinstance(d, tuple) for d in deco):
            continue
        us = [d[0] for d in deco]
        dirs = [RatMatrix.column(d[1].entries) for d in deco]
        dv = defining_vector_from_ks(xcfg.ks)
        ts, _ = t_vectors(dv)
        xpoints = points_from_config(xcfg)

        # unknowns: D_1..D_N (n x m each) then c_1..c_N
        nm = n * m
        num_unknowns = N * nm + N
        rows: List[List[Fraction]] = []

        def new_row():
            return [Fraction(0)] * num_unknowns

        # D_i n_i = 0
        for i in range(N):
            for p in range(n):
                row = new_row()
                for q in range(m):
                    row[i * nm + p * m + q] = dirs[i].entry(q, 0)
                rows.append(row)
        # sum_i D_i = 0
        for p in range(n):
            for q in range(m):
                row = new_row()
                for i in range(N):
                    row[i * nm + p * m + q] = Fraction(1)
                rows.append(row)
        # E_i n_i = 0 for the arms recovered from Z_j = X_j^T Y_j - c_j id
        gamma = [[(ts[i + 1][j] - ts[i][j]) if i < N - 1 else (ts[0][j] - ts[N - 1][j])
                  for j in range(N)] for i in range(N)]
        beta = [[Fraction(1) if l < j else (xcfg.ks[j] if l == j else Fraction(0))
                 for l in range(N)] for j in range(N)]
        for i in range(N):
            G = [RatMatrix.zero(n, m) for _ in range(N)]
            for l in range(N):
                for j in range(N):
                    w = gamma[i][j] * beta[j][l]
                    if w:
                        G[l] = G[l] + xpoints[j].scale(w)
            gc = [gamma[i][j] for j in range(N)]
            for r in range(m):
                row = new_row()
                for l in range(N):
                    for p in range(n):
                        coeff = G[l].entry(p, r)
                        if coeff:
                            for q in range(m):
                                row[l * nm + p * m + q] += coeff * dirs[i].entry(q, 0)
                for j in range(N):
                    row[N * nm + j] -= gc[j] * dirs[i].entry(r, 0)
                rows.append(row)
        # sum_j lambda_j c_j = 0
        row = new_row()
        for j in range(N):
            row[N * nm + j] = dv.lam[j]
        rows.append(row)

        system = RatMatrix(len(rows), num_unknowns,
                           tuple(x for r_ in rows for x in r_))
        kernel = nullspace(system)
        if not kernel:
            continue
        coeffs = [Fraction(rng.randint(-3, 3)) for _ in kernel]
        x = [sum((coeffs[t] * kernel[t].entry(idx, 0)
                  for t in range(len(kernel))), Fraction(0))
             for idx in range(num_unknowns)]

        darms = [RatMatrix(n, m, tuple(x[i * nm + p * m + q]
                                       for p in range(n) for q in range(m)))
                 for i in range(N)]
        costs = tuple(x[N * nm + j] for j in range(N))

        ident = RatMatrix.identity(m)
        ys = []
        acc = RatMatrix.zero(n, m)
        for i in range(N):
            ys.append(acc + darms[i].scale(xcfg.ks[i]))
            acc = acc + darms[i]
        zs = [xpoints[i].T @ ys[i] - ident.scale(costs[i]) for i in range(N)]
        partials = []
        for i in range(N):
            p = zs[0].scale(ts[i][0])
            for j in range(1, N):
                p = p + zs[j].scale(ts[i][j])
            partials.append(p)
        R = partials[0]
        earms = [partials[i] - partials[i - 1] for i in range(1, N)]
        closing = RatMatrix.zero(m, m)
        for E in earms:
            closing = closing + E
        earms.append(-closing)

        base = StackedMatrix(RatMatrix.zero(n, m), RatMatrix.zero(n, m), R)
        arms = tuple(StackedMatrix(xcfg.arms[i], darms[i], earms[i])
                     for i in range(N))
        witnesses = tuple(WaveConeWitness(dirs[i], us[i]) for i in range(N))
        cfg = TNPrimeConfig(base, arms, xcfg.ks, witnesses)
        points = stacked_points(cfg)
        if any(points[i].Z != zs[i] for i in range(N)):
            continue
        verdict = verify_tnprime(points, cfg)
        if verdict.passed:
            return cfg, costs
    raise TnError("consistent generator retry budget exhausted; reseed")


def zero_lift(xcfg, costs: Optional[Sequence[Fraction]] = None
              ) -> Tuple[TNPrimeConfig, Tuple[Fraction, ...]]:
    """Lift a plain configuration to stacked form with zero Y and Z data;
    always consistent with costs identically zero."""
    from tncheck.linalg import rank_one_decompose

    n, m = xcfg.shape
    deco = [rank_one_decompose(C) for C in xcfg.arms]
    if any(not isinstance(d, tuple) for d in deco):
        raise TnError("zero lift requires nondegenerate rank-one arms")
    arms = tuple(StackedMatrix(C, RatMatrix.zero(n, m), RatMatrix.zero(m, m))
                 for C in xcfg.arms)
    witnesses = tuple(WaveConeWitness(RatMatrix.column(d[1].entries), d[0])
                      for d in deco)
    base = StackedMatrix(xcfg.P, RatMatrix.zero(n, m), RatMatrix.zero(m, m))
    cfg = TNPrimeConfig(base, arms, xcfg.ks, witnesses)
    if costs is None:
        costs = (Fraction(0),) * xcfg.N
    return cfg, tuple(rat(c) for c in costs)
