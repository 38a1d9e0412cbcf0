"""Classical T_N configurations: verification, synthesis, and the exact
identities that tie points, arms, and defining vectors together.

A configuration is the data (P, C_1..C_N, k_1..k_N): a closed rank-one
polygon P, P+C_1, ..., P+C_1+...+C_N = P whose sides are extended by the
factors k_i > 1 to reach the points

    X_i = P + C_1 + ... + C_{i-1} + k_i C_i.

The positive kernel vector lambda and the scalar mu > 1 (the defining
vector) characterize the same data through the kernel conditions
A^mu_Z lambda = 0 over all order-2 minors Z.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from tncheck.linalg import (
    MultiIndex,
    RatMatrix,
    ZERO_MATRIX,
    a2_indices,
    cof,
    det,
    minor_extract,
    nullspace,
    rank_one_decompose,
    rat,
    rat_str,
)


class TnError(ValueError):
    pass


class SynthesisError(TnError):
    """Raised when the kernel conditions refuse a synthesis request."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class TNConfig:
    """Base point P, arms C_1..C_N, and coefficients k_1..k_N."""

    P: RatMatrix
    arms: Tuple[RatMatrix, ...]
    ks: Tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        object.__setattr__(self, "ks", tuple(rat(k) for k in self.ks))
        if len(self.arms) != len(self.ks):
            raise TnError("need one coefficient per arm")
        if len(self.arms) < 2:
            raise TnError("a configuration needs at least two arms")
        for C in self.arms:
            if C.shape != self.P.shape:
                raise TnError("arm shape differs from base point shape")

    @property
    def N(self) -> int:
        return len(self.arms)

    @property
    def shape(self):
        return self.P.shape

    def to_json(self):
        return {
            "N": self.N,
            "P": self.P.to_json(),
            "C": [C.to_json() for C in self.arms],
            "k": [rat_str(k) for k in self.ks],
        }

    @staticmethod
    def from_json(doc) -> "TNConfig":
        arms = tuple(RatMatrix.from_json(C) for C in doc["C"])
        return TNConfig(RatMatrix.from_json(doc["P"]), arms,
                        tuple(rat(k) for k in doc["k"]))


@dataclass(frozen=True)
class DefiningVector:
    """Positive kernel vector lambda (normalized to sum 1) and mu > 1."""

    lam: Tuple[Fraction, ...]
    mu: Fraction

    def __post_init__(self):
        lam = tuple(rat(x) for x in self.lam)
        mu = rat(self.mu)
        if any(x <= 0 for x in lam):
            raise TnError("lambda must have positive entries")
        if mu <= 1:
            raise TnError("mu must exceed 1")
        total = sum(lam, Fraction(0))
        if total != 1:
            # unnormalized inputs are rescaled; every use below is
            # invariant under positive rescaling of lambda
            lam = tuple(x / total for x in lam)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    @property
    def N(self) -> int:
        return len(self.lam)

    def to_json(self):
        return {"lambda": [rat_str(x) for x in self.lam], "mu": rat_str(self.mu)}

    @staticmethod
    def from_json(doc) -> "DefiningVector":
        return DefiningVector(tuple(rat(x) for x in doc["lambda"]), rat(doc["mu"]))


TNPointSet = Tuple[RatMatrix, ...]


def points_from_config(cfg: TNConfig) -> TNPointSet:
    """X_i = P + C_1 + ... + C_{i-1} + k_i C_i, exactly."""
    points = []
    partial = cfg.P
    for i in range(cfg.N):
        points.append(partial + cfg.arms[i].scale(cfg.ks[i]))
        partial = partial + cfg.arms[i]
    return tuple(points)


@dataclass
class TnVerdict:
    """Per-condition outcome of a configuration check."""

    rank_one: List[bool]
    closing_residual: RatMatrix
    relation_residuals: List[RatMatrix]
    k_ok: List[bool]
    distinct: bool
    strict: bool
    nondegenerate: bool
    notes: List[str] = field(default_factory=list)

    @property
    def closing_ok(self) -> bool:
        return self.closing_residual.is_zero()

    @property
    def relations_ok(self) -> bool:
        return all(r.is_zero() for r in self.relation_residuals)

    @property
    def passed(self) -> bool:
        ok = all(self.rank_one) and self.closing_ok and self.relations_ok \
            and all(self.k_ok)
        if self.strict:
            ok = ok and self.distinct
        return ok

    def failures(self) -> List[str]:
        out = []
        for i, ok in enumerate(self.rank_one, start=1):
            if not ok:
                out.append(f"rank-one-arms[{i}]")
        if not self.closing_ok:
            out.append("closing-sum")
        for i, r in enumerate(self.relation_residuals, start=1):
            if not r.is_zero():
                out.append(f"linear-relations[{i}]")
        for i, ok in enumerate(self.k_ok, start=1):
            if not ok:
                out.append(f"k-bounds[{i}]")
        if self.strict and not self.distinct:
            out.append("distinctness")
        return out

    def to_json(self):
        return {
            "passed": self.passed,
            "checks": {
                "rank-one-arms": all(self.rank_one),
                "closing-sum": self.closing_ok,
                "linear-relations": self.relations_ok,
                "k-bounds": all(self.k_ok),
                "distinctness": self.distinct,
            },
            "failures": self.failures(),
            "closing_residual": self.closing_residual.to_json(),
            "relation_residuals": [r.to_json() for r in self.relation_residuals],
            "nondegenerate": self.nondegenerate,
            "notes": list(self.notes),
        }


def verify_tn(points: Sequence[RatMatrix], cfg: TNConfig, strict: bool = False) -> TnVerdict:
    """Check the defining conditions of a configuration against a point set.

    Conditions: every arm has rank <= 1, the arms close up to zero, the N
    linear relations hold exactly, every k_i > 1.  Distinctness of the
    points is reported always but enforced only in strict mode.
    """
    if len(points) != cfg.N:
        raise TnError(f"{len(points)} points for {cfg.N} arms")
    for X in points:
        if X.shape != cfg.shape:
            raise TnError("point shape differs from configuration shape")

    rank_one = [rank_one_decompose(C) is not None for C in cfg.arms]
    closing = sum(cfg.arms[1:], cfg.arms[0])
    expected = points_from_config(cfg)
    relation_residuals = [points[i] - expected[i] for i in range(cfg.N)]
    k_ok = [k > 1 for k in cfg.ks]
    distinct = all(points[i] != points[j]
                   for i in range(cfg.N) for j in range(i + 1, cfg.N))
    nondegenerate = all(rank_one) and not any(C.is_zero() for C in cfg.arms)

    notes = []
    if cfg.N == 2:
        notes.append("degenerate-N2: two arms span a single rank-one line")
    if any(C.is_zero() for C in cfg.arms):
        notes.append("degenerate: some arms vanish")
    return TnVerdict(rank_one, closing, relation_residuals, k_ok,
                     distinct, strict, nondegenerate, notes)


def defining_vector_from_ks(ks: Sequence[Fraction]) -> DefiningVector:
    """Recover (lambda, mu) from the coefficients:
    mu is the product of the k_i over the product of (k_i - 1), and
    lambda_j = k_1...k_{j-1} / ((mu-1)(k_1-1)...(k_j-1))."""
    ks = [rat(k) for k in ks]
    if any(k <= 1 for k in ks):
        raise TnError("all coefficients must exceed 1")
    num = Fraction(1)
    den = Fraction(1)
    for k in ks:
        num *= k
        den *= k - 1
    mu = num / den
    lam = []
    prefix = Fraction(1)      # k_1 ... k_{j-1}
    denom = mu - 1            # grows to (mu-1)(k_1-1)...(k_j-1)
    for k in ks:
        denom *= k - 1
        lam.append(prefix / denom)
        prefix *= k
    dv = DefiningVector(tuple(lam), mu)
    assert sum(dv.lam, Fraction(0)) == 1
    return dv


def ks_from_defining_vector(dv: DefiningVector) -> Tuple[Fraction, ...]:
    """k_i = (mu lambda_1 + ... + mu lambda_i + lambda_{i+1} + ... + lambda_N)
    / ((mu - 1) lambda_i); always > 1 for a valid defining vector."""
    lam, mu = dv.lam, dv.mu
    total = sum(lam, Fraction(0))
    ks = []
    prefix = Fraction(0)
    for i, li in enumerate(lam):
        prefix += li
        ks.append((mu * prefix + (total - prefix)) / ((mu - 1) * li))
    assert all(k > 1 for k in ks)
    return tuple(ks)


def t_vectors(dv: DefiningVector):
    """The barycentric rows t^i = (mu l_1,...,mu l_{i-1}, l_i,...,l_N)/xi_i
    with xi_i = 1 + (mu-1)(l_1+...+l_{i-1}); each t^i sums to 1.

    Returns (t, xi) where t[i-1] is the tuple t^i.
    """
    lam, mu = dv.lam, dv.mu
    ts = []
    xis = []
    prefix = Fraction(0)
    for i in range(len(lam)):
        xi = 1 + (mu - 1) * prefix
        row = tuple((mu * lam[j] if j < i else lam[j]) / xi
                    for j in range(len(lam)))
        assert sum(row, Fraction(0)) == 1
        ts.append(row)
        xis.append(xi)
        prefix += lam[i]
    return ts, xis


def build_a_mu(points: Sequence[RatMatrix], mu: Fraction, Z: MultiIndex) -> RatMatrix:
    """The N x N minor matrix: entry (i, j) is det(X_j^Z - X_i^Z) above the
    diagonal, mu times that below, zero on the diagonal."""
    mu = rat(mu)
    if Z.order != 2:
        raise TnError("kernel matrices use order-2 minors")
    N = len(points)
    minors = [minor_extract(X, Z) for X in points]
    flat = []
    for i in range(N):
        for j in range(N):
            if i == j:
                flat.append(Fraction(0))
            else:
                d = det(minors[j] - minors[i])
                flat.append(d if j > i else mu * d)
    return RatMatrix(N, N, tuple(flat))


@dataclass
class MinorKernelReport:
    ok: bool
    checked: int
    failures: List[Tuple[MultiIndex, List[Fraction]]]

    def first_failure(self):
        return self.failures[0] if self.failures else None

    def to_json(self):
        return {
            "passed": self.ok,
            "minors_checked": self.checked,
            "failures": [{"Z": Z.key(), "residual": [rat_str(x) for x in res]}
                         for Z, res in self.failures],
        }


def kernel_check_all_minors(points: Sequence[RatMatrix], dv: DefiningVector) -> MinorKernelReport:
    """A^mu_Z lambda = 0, exactly, for every order-2 minor Z."""
    n, m = points[0].shape
    lam = RatMatrix.column(dv.lam)
    failures = []
    zs = a2_indices(n, m)
    for Z in zs:
        res = build_a_mu(points, dv.mu, Z) @ lam
        if not res.is_zero():
            failures.append((Z, list(res.entries)))
    return MinorKernelReport(not failures, len(zs), failures)


def synthesize_tn(points: Sequence[RatMatrix], dv: DefiningVector) -> TNConfig:
    """Recover (P, C_i, k_i) from points and a defining vector.

    Solves sum_j t^i_j X_j = P + C_1 + ... + C_{i-1} in the stated
    recursive order; refuses (with the failing minor) when the kernel
    conditions do not hold -- exact or nothing, no least-squares repair.
    """
    if len(points) != dv.N:
        raise TnError("point count differs from defining vector length")
    report = kernel_check_all_minors(points, dv)
    if not report.ok:
        Z, res = report.first_failure()
        raise SynthesisError(
            f"kernel condition fails at minor {Z.key()}: residual "
            f"{[rat_str(x) for x in res]}", report)
    ts, _ = t_vectors(dv)
    partials = []
    for row in ts:
        acc = points[0].scale(row[0])
        for j in range(1, len(points)):
            acc = acc + points[j].scale(row[j])
        partials.append(acc)
    P = partials[0]
    arms = [partials[i] - partials[i - 1] for i in range(1, len(points))]
    closing = P - P  # zero of the right shape
    for C in arms:
        closing = closing + C
    arms.append(-closing)
    cfg = TNConfig(P, tuple(arms), ks_from_defining_vector(dv))
    verdict = verify_tn(points, cfg)
    if not verdict.passed:
        raise SynthesisError(f"synthesis produced an inconsistent configuration: "
                             f"{verdict.failures()}", report)
    return cfg


def matrix_determinant_lemma(A: RatMatrix, B: RatMatrix) -> Fraction:
    """Residual det(A+B) - det(A) - <cof(A)^T, B> for rank(B) <= 1.

    The contract is that the residual is always zero; callers treat a
    nonzero value as a broken precondition or a broken determinant.
    """
    if not A.is_square() or A.shape != B.shape:
        raise TnError("expect square matrices of equal shape")
    if rank_one_decompose(B) is None:
        raise TnError("perturbation must have rank at most 1")
    return det(A + B) - det(A) - cof(A).transpose().inner(B)


@dataclass
class MinorSumReport:
    """Exact residuals of the minor-sum identities for one minor Z.

    For each i: sum_j t^i_j S(X_j) = S(sum_j t^i_j X_j)
             = S(P + C_1 + ... + C_{i-1}),  and
             sum_j t^i_j det(X_j^Z - X_i^Z) = 0,
    where S is the minor selected by Z.
    """

    Z: MultiIndex
    combination_residuals: List[Fraction]
    base_residuals: List[Fraction]
    centered_residuals: List[Fraction]

    @property
    def ok(self) -> bool:
        return all(x == 0 for x in
                   self.combination_residuals + self.base_residuals
                   + self.centered_residuals)


def minor_sum_identity(cfg: TNConfig, Z: MultiIndex) -> MinorSumReport:
    points = points_from_config(cfg)
    dv = defining_vector_from_ks(cfg.ks)
    ts, _ = t_vectors(dv)
    dets = [det(minor_extract(X, Z)) for X in points]
    comb_res = []
    base_res = []
    centered = []
    partial = cfg.P
    for i in range(cfg.N):
        row = ts[i]
        lin = points[0].scale(row[0])
        for j in range(1, cfg.N):
            lin = lin + points[j].scale(row[j])
        lhs = sum((row[j] * dets[j] for j in range(cfg.N)), Fraction(0))
        mid = det(minor_extract(lin, Z))
        comb_res.append(lhs - mid)
        base_res.append(mid - det(minor_extract(partial, Z)))
        ci = sum((row[j] * det(minor_extract(points[j] - points[i], Z))
                  for j in range(cfg.N) if j != i), Fraction(0))
        centered.append(ci)
        partial = partial + cfg.arms[i]
    return MinorSumReport(Z, comb_res, base_res, centered)


def barycentric_combination(v: RatMatrix, vs: Sequence[RatMatrix],
                            ws: Sequence[RatMatrix], dv: DefiningVector):
    """Residuals sum_j t^i_j w_j - (v + v_1 + ... + v_{i-1}) for data in
    laminate form w_i = v + v_1 + ... + v_{i-1} + k_i v_i with sum v_j = 0.

    Works in any linear space realized as matrices of a common shape.
    Raises if the preconditions fail.
    """
    N = dv.N
    if len(vs) != N or len(ws) != N:
        raise TnError("need N arms and N values")
    ks = ks_from_defining_vector(dv)
    closing = vs[0]
    for x in vs[1:]:
        closing = closing + x
    if not closing.is_zero():
        raise TnError("arm sum must vanish")
    partial = v
    for i in range(N):
        if not (ws[i] - partial - vs[i].scale(ks[i])).is_zero():
            raise TnError(f"laminate relation fails at index {i + 1}")
        partial = partial + vs[i]
    ts, _ = t_vectors(dv)
    residuals = []
    partial = v
    for i in range(N):
        acc = ws[0].scale(ts[i][0])
        for j in range(1, N):
            acc = acc + ws[j].scale(ts[i][j])
        residuals.append(acc - partial)
        partial = partial + vs[i]
    return residuals


# -- random data ----------------------------------------------------------

def _random_nonzero_vector(k: int, rng: random.Random, span: int = 3) -> RatMatrix:
    while True:
        vals = [rng.randint(-span, span) for _ in range(k)]
        if any(vals):
            return RatMatrix.column(vals)


def closing_rank_one_arms(n: int, m: int, N: int, rng: random.Random):
    """Rank-one arms C_i = u_i (x) n_i with sum C_i = 0 and all u_i, n_i
    nonzero.  Directions are drawn first; the u_i coordinate slices are
    sampled from the exact kernel of the direction matrix, which is forced
    to be nontrivial by redrawing dependent directions when N <= m.
    """
    for _ in range(200):
        dirs = [_random_nonzero_vector(m, rng) for _ in range(N)]
        if N <= m:
            # force a dependency so the kernel is nontrivial
            base = dirs[: N - 1]
            combo = RatMatrix.zero(m, 1)
            coeffs = [rng.randint(-2, 2) for _ in range(N - 1)]
            for c, d in zip(coeffs, base):
                combo = combo + d.scale(c)
            if combo.is_zero():
                continue
            dirs[-1] = combo
        D = RatMatrix(m, N, tuple(dirs[j].entry(i, 0)
                                  for i in range(m) for j in range(N)))
        kernel = nullspace(D)
        if not kernel:
            continue
        for _ in range(20):
            us = []
            rowsets = [[rng.randint(-2, 2) for _ in kernel] for _ in range(n)]
            ok = True
            for j in range(N):
                col = [sum(rowsets[p][t] * kernel[t].entry(j, 0)
                           for t in range(len(kernel))) for p in range(n)]
                if not any(col):
                    ok = False
                    break
                us.append(RatMatrix.column(col))
            if ok:
                from tncheck.linalg import outer
                arms = [outer(us[j], dirs[j]) for j in range(N)]
                return arms, us, dirs
    raise TnError("could not draw closing rank-one arms; reseed")


def random_k(rng: random.Random) -> Fraction:
    """A coefficient in (1, 4] with a small denominator."""
    den = rng.randint(1, 3)
    num = rng.randint(1, 3 * den)
    return 1 + Fraction(num, den)


def random_tn(n: int, m: int, N: int, rng: random.Random) -> TNConfig:
    """A random nondegenerate configuration with distinct points."""
    for _ in range(100):
        arms, _, _ = closing_rank_one_arms(n, m, N, rng)
        ks = tuple(random_k(rng) for _ in range(N))
        P = RatMatrix.from_rows([[rng.randint(-3, 3) for _ in range(m)]
                                 for _ in range(n)])
        cfg = TNConfig(P, tuple(arms), ks)
        points = points_from_config(cfg)
        if all(points[i] != points[j]
               for i in range(N) for j in range(i + 1, N)):
            return cfg
    raise TnError("could not draw a configuration with distinct points; reseed")
