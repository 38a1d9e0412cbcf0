"""Strictly polyconvex energy families and the inclusion-set inequalities.

An energy is f(X) = g(Phi(X)) where Phi stacks the entries of X and the
determinants of all its minors of order >= 2 (fixed ordering: order, then
row set, then column set, lexicographically).  Built-in families:

* ``quadratic``      f = |X|^2 / 2                      exact rationals
* ``quad_minors``    f = eps |X|^2 + sum alpha_Z det(X^Z)^2, eps > 0,
                     alpha_Z >= 0                       exact rationals
* ``area``           f = sqrt(1 + |Phi(X)|^2)           float only
* ``custom``         user-supplied g on the minor vector, float only,
                     strict convexity sampled at construction

Gradients always go through the cofactor chain rule
Df = D_x g + sum_Z d_Z g . embedded cof(X^Z)^T, so the exact families give
exact matrices and the float families match finite differences.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from tncheck.linalg import (
    MultiIndex,
    RatMatrix,
    all_minor_indices,
    cof,
    det,
    embed_cof_bar,
    minor_extract,
    rat,
    rat_str,
)
from tncheck.tn import TNConfig, TnError, defining_vector_from_ks, points_from_config, t_vectors


class EnergyError(ValueError):
    pass


def phi(X: RatMatrix) -> Tuple[Fraction, ...]:
    """Minor vector: entries of X (row-major) followed by the minor
    determinants in the fixed ordering."""
    tail = tuple(det(minor_extract(X, Z)) for Z in all_minor_indices(*X.shape))
    return tuple(X.entries) + tail


# -- float minor helpers (shared with the varifold module) -----------------

def float_minor_det(Xb: np.ndarray, Z: MultiIndex) -> np.ndarray:
    """det(X^Z) for a batch (..., n, m)."""
    rows = [i - 1 for i in Z.I]
    cols = [j - 1 for j in Z.J]
    sub = Xb[..., rows, :][..., :, cols]
    return np.linalg.det(sub)


def _float_cof(sub: np.ndarray) -> np.ndarray:
    """Cofactor matrix (adjugate) of a batch (..., r, r), entry (i, j) the
    signed complementary determinant for (j, i); robust at singular points."""
    r = sub.shape[-1]
    if r == 1:
        return np.ones_like(sub)
    out = np.empty_like(sub)
    idx = list(range(r))
    for drow in range(r):
        keep_r = [i for i in idx if i != drow]
        for dcol in range(r):
            keep_c = [j for j in idx if j != dcol]
            minor = sub[..., keep_r, :][..., :, keep_c]
            sign = 1.0 if (drow + dcol) % 2 == 0 else -1.0
            out[..., dcol, drow] = sign * np.linalg.det(minor)
    return out


def float_cof_embed(Xb: np.ndarray, Z: MultiIndex) -> np.ndarray:
    """Embedded cof(X^Z)^T for a batch: zero off the selected rows and
    columns."""
    rows = [i - 1 for i in Z.I]
    cols = [j - 1 for j in Z.J]
    sub = Xb[..., rows, :][..., :, cols]
    coft = np.swapaxes(_float_cof(sub), -1, -2)
    out = np.zeros_like(Xb)
    for a, i in enumerate(rows):
        for b, j in enumerate(cols):
            out[..., i, j] = coft[..., a, b]
    return out


# -- energy families --------------------------------------------------------

@dataclass(frozen=True)
class QuadraticEnergy:
    """f = |X|^2 / 2; the strictly convex baseline with no minor terms."""

    n: int
    m: int
    family = "quadratic"
    exact = True

    def value(self, X: RatMatrix) -> Fraction:
        return X.norm_sq() / 2

    def d_x(self, X: RatMatrix) -> RatMatrix:
        return X

    def d_minors(self, X: RatMatrix) -> Dict[MultiIndex, Fraction]:
        return {}

    def g_eval(self, vec: Sequence[Fraction]):
        head = vec[: self.n * self.m]
        val = sum((x * x for x in head), Fraction(0)) / 2
        grad = tuple(head) + (Fraction(0),) * (len(vec) - len(head))
        return val, grad

    def fvalue(self, Xb: np.ndarray) -> np.ndarray:
        return 0.5 * np.sum(np.asarray(Xb) ** 2, axis=(-2, -1))

    def fgrad(self, Xb: np.ndarray) -> np.ndarray:
        return np.asarray(Xb, dtype=float).copy()

    def to_json(self):
        return {"family": "quadratic", "shape": [self.n, self.m]}


@dataclass(frozen=True)
class QuadMinorsEnergy:
    """f = eps |X|^2 + sum_Z alpha_Z det(X^Z)^2 with eps > 0, alpha_Z >= 0."""

    n: int
    m: int
    epsilon: Fraction
    alpha: Tuple[Tuple[MultiIndex, Fraction], ...]
    family = "quad_minors"
    exact = True

    def __post_init__(self):
        eps = rat(self.epsilon)
        if eps <= 0:
            raise EnergyError("epsilon must be positive")
        valid = set(all_minor_indices(self.n, self.m))
        pairs = []
        for Z, a in self.alpha:
            a = rat(a)
            if Z not in valid:
                raise EnergyError(f"minor {Z.key()} invalid for shape "
                                  f"({self.n}, {self.m})")
            if a < 0:
                raise EnergyError("alpha weights must be nonnegative")
            pairs.append((Z, a))
        pairs.sort(key=lambda p: (p[0].order, p[0].I, p[0].J))
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "alpha", tuple(pairs))

    def value(self, X: RatMatrix) -> Fraction:
        v = self.epsilon * X.norm_sq()
        for Z, a in self.alpha:
            if a:
                v += a * det(minor_extract(X, Z)) ** 2
        return v

    def d_x(self, X: RatMatrix) -> RatMatrix:
        return X.scale(2 * self.epsilon)

    def d_minors(self, X: RatMatrix) -> Dict[MultiIndex, Fraction]:
        return {Z: 2 * a * det(minor_extract(X, Z))
                for Z, a in self.alpha if a}

    def g_eval(self, vec: Sequence[Fraction]):
        head = vec[: self.n * self.m]
        tail = vec[self.n * self.m:]
        zs = all_minor_indices(self.n, self.m)
        weights = dict(self.alpha)
        val = self.epsilon * sum((x * x for x in head), Fraction(0))
        gtail = []
        for Z, z in zip(zs, tail):
            a = weights.get(Z, Fraction(0))
            val += a * z * z
            gtail.append(2 * a * z)
        grad = tuple(2 * self.epsilon * x for x in head) + tuple(gtail)
        return val, grad

    def fvalue(self, Xb: np.ndarray) -> np.ndarray:
        Xb = np.asarray(Xb, dtype=float)
        v = float(self.epsilon) * np.sum(Xb ** 2, axis=(-2, -1))
        for Z, a in self.alpha:
            if a:
                v = v + float(a) * float_minor_det(Xb, Z) ** 2
        return v

    def fgrad(self, Xb: np.ndarray) -> np.ndarray:
        Xb = np.asarray(Xb, dtype=float)
        g = 2.0 * float(self.epsilon) * Xb
        for Z, a in self.alpha:
            if a:
                w = 2.0 * float(a) * float_minor_det(Xb, Z)
                g = g + w[..., None, None] * float_cof_embed(Xb, Z)
        return g

    def to_json(self):
        return {"family": "quad_minors", "shape": [self.n, self.m],
                "epsilon": rat_str(self.epsilon),
                "alpha": {Z.key(): rat_str(a) for Z, a in self.alpha}}


@dataclass(frozen=True)
class AreaEnergy:
    """The area integrand sqrt(1 + |Phi(X)|^2); float mode only."""

    n: int
    m: int
    family = "area"
    exact = False

    def value(self, X: RatMatrix) -> Fraction:
        raise EnergyError("the area integrand has no exact rational mode")

    def fvalue(self, Xb: np.ndarray) -> np.ndarray:
        Xb = np.asarray(Xb, dtype=float)
        s = 1.0 + np.sum(Xb ** 2, axis=(-2, -1))
        for Z in all_minor_indices(self.n, self.m):
            s = s + float_minor_det(Xb, Z) ** 2
        return np.sqrt(s)

    def fgrad(self, Xb: np.ndarray) -> np.ndarray:
        Xb = np.asarray(Xb, dtype=float)
        num = Xb.copy()
        for Z in all_minor_indices(self.n, self.m):
            d = float_minor_det(Xb, Z)
            num = num + d[..., None, None] * float_cof_embed(Xb, Z)
        return num / self.fvalue(Xb)[..., None, None]

    def g_eval(self, vec):
        v = np.array([float(x) for x in vec])
        val = float(np.sqrt(1.0 + v @ v))
        return val, tuple(x / val for x in v)

    def to_json(self):
        return {"family": "area", "shape": [self.n, self.m]}


class CustomEnergy:
    """User-supplied g on the minor vector (float mode).

    ``g`` maps a float minor vector to a value, ``g_grad`` to its gradient.
    Strict convexity is sampled at construction: random midpoint tests on
    pairs of minor vectors; a failed sample rejects the energy.  The
    observed minimal gap is recorded (`strictness_gap`), no threshold is
    asserted.
    """

    family = "custom"
    exact = False

    def __init__(self, n: int, m: int, g: Callable, g_grad: Callable,
                 rng: Optional[random.Random] = None, trials: int = 10_000,
                 span: float = 2.0):
        self.n = n
        self.m = m
        self._g = g
        self._g_grad = g_grad
        dim = n * m + len(all_minor_indices(n, m))
        rng = rng or random.Random(0)
        min_gap = None
        for _ in range(trials):
            a = np.array([rng.uniform(-span, span) for _ in range(dim)])
            b = np.array([rng.uniform(-span, span) for _ in range(dim)])
            if not np.any(a != b):
                continue
            gap = 0.5 * (g(a) + g(b)) - g(0.5 * (a + b))
            if gap <= 0:
                raise EnergyError("sampled strict convexity failed for custom g")
            min_gap = gap if min_gap is None else min(min_gap, gap)
        self.strictness_gap = min_gap

    def value(self, X):
        raise EnergyError("custom energies have no exact rational mode")

    def _phi_np(self, Xb: np.ndarray) -> np.ndarray:
        Xb = np.asarray(Xb, dtype=float)
        head = Xb.reshape(Xb.shape[:-2] + (self.n * self.m,))
        tails = [float_minor_det(Xb, Z)[..., None]
                 for Z in all_minor_indices(self.n, self.m)]
        return np.concatenate([head] + tails, axis=-1)

    def fvalue(self, Xb: np.ndarray) -> np.ndarray:
        vec = self._phi_np(Xb)
        if vec.ndim == 1:
            return self._g(vec)
        return np.array([self._g(v) for v in vec.reshape(-1, vec.shape[-1])]).reshape(vec.shape[:-1])

    def fgrad(self, Xb: np.ndarray) -> np.ndarray:
        Xb = np.asarray(Xb, dtype=float)
        single = Xb.ndim == 2
        if single:
            Xb = Xb[None]
        vec = self._phi_np(Xb)
        grads = np.array([self._g_grad(v) for v in vec.reshape(-1, vec.shape[-1])])
        grads = grads.reshape(vec.shape)
        head = grads[..., : self.n * self.m].reshape(Xb.shape)
        out = head.copy()
        for t, Z in enumerate(all_minor_indices(self.n, self.m)):
            w = grads[..., self.n * self.m + t]
            out = out + w[..., None, None] * float_cof_embed(Xb, Z)
        return out[0] if single else out

    def g_eval(self, vec):
        v = np.array([float(x) for x in vec])
        return self._g(v), tuple(self._g_grad(v))


def parse_energy(doc) -> object:
    """Energy from its JSON description ({'family': ..., 'shape': [n, m], ...})."""
    family = doc.get("family")
    n, m = doc["shape"]
    if family == "quadratic":
        return QuadraticEnergy(n, m)
    if family in ("quad_minors", "quadratic-plus-minor-squares"):
        alpha = tuple((MultiIndex.from_key(k), rat(v))
                      for k, v in sorted(doc.get("alpha", {}).items()))
        return QuadMinorsEnergy(n, m, rat(doc.get("epsilon", "1")), alpha)
    if family == "area":
        return AreaEnergy(n, m)
    raise EnergyError(f"unknown energy family {family!r}")


# -- operations -------------------------------------------------------------

def grad_f(E, X):
    """Cofactor chain rule Df = D_x g + sum_Z d_Z . embedded cof(X^Z)^T.

    Exact for the rational families on RatMatrix input; float otherwise
    (numpy input always takes the float path).
    """
    if isinstance(X, RatMatrix):
        if not E.exact:
            raise EnergyError(f"family {E.family} evaluates in float mode only")
        out = E.d_x(X)
        for Z, w in E.d_minors(X).items():
            if w:
                out = out + embed_cof_bar(X, Z).scale(w)
        return out
    return E.fgrad(np.asarray(X, dtype=float))


@dataclass(frozen=True)
class InclusionPoint:
    """Stacked element (X, Df(X), X^T Df(X) - f(X) id) with cost f(X)."""

    X: RatMatrix
    Y: RatMatrix
    Zb: RatMatrix
    c: Fraction

    def consistency_residual(self) -> RatMatrix:
        """Zb + c id - X^T Y; zero by construction."""
        m = self.X.cols
        return self.Zb + RatMatrix.identity(m).scale(self.c) - self.X.T @ self.Y

    def to_json(self):
        return {"X": self.X.to_json(), "Y": self.Y.to_json(),
                "Z": self.Zb.to_json(), "c": rat_str(self.c)}


def inclusion_point(E, X: RatMatrix) -> InclusionPoint:
    Y = grad_f(E, X)
    c = E.value(X)
    m = X.cols
    Zb = X.T @ Y - RatMatrix.identity(m).scale(c)
    return InclusionPoint(X, Y, Zb, c)


def strict_gap(E, Xi: RatMatrix, Xj: RatMatrix):
    """g(Phi(X_j)) - g(Phi(X_i)) - <Dg(Phi(X_i)), Phi(X_j) - Phi(X_i)>;
    strictly positive for strictly convex g and distinct arguments."""
    if Xi == Xj:
        raise EnergyError("strict gap requires distinct arguments")
    pi, pj = phi(Xi), phi(Xj)
    vi, gi = E.g_eval(pi)
    vj, _ = E.g_eval(pj)
    if E.exact:
        pairing = sum((g * (b - a) for g, a, b in zip(gi, pi, pj)), Fraction(0))
        return vj - vi - pairing
    pairing = sum(float(g) * (float(b) - float(a))
                  for g, a, b in zip(gi, pi, pj))
    return vj - vi - pairing


def finalemdim_residual(E, points: Sequence[RatMatrix], i: int, j: int) -> Fraction:
    """Left side of the inclusion-set inequality for the pair (i, j),
    1-based: c_i - c_j + <Y_i, X_j - X_i>
    - sum_Z d^i_Z (<cof(X_i^Z)^T, X_j^Z - X_i^Z> - det X_j^Z + det X_i^Z).
    Strictly negative when the points lie in the inclusion set of a
    strictly polyconvex energy."""
    if i == j:
        raise EnergyError("residual requires distinct indices")
    Xi, Xj = points[i - 1], points[j - 1]
    ci, cj = E.value(Xi), E.value(Xj)
    Yi = grad_f(E, Xi)
    res = ci - cj + Yi.inner(Xj - Xi)
    for Z, w in E.d_minors(Xi).items():
        if not w:
            continue
        mi, mj = minor_extract(Xi, Z), minor_extract(Xj, Z)
        res -= w * (cof(mi).T.inner(mj - mi) - det(mj) + det(mi))
    return res


def fzero_identity(cfg: TNConfig, Z: MultiIndex) -> Tuple[Fraction, ...]:
    """Exact residuals, one per i, of the minor cancellation
    sum_j t^i_j (<cof(X_i^Z)^T, X_j^Z - X_i^Z> - det X_j^Z + det X_i^Z) = 0.
    Independent of the energy; zero for every configuration."""
    points = points_from_config(cfg)
    ts, _ = t_vectors(defining_vector_from_ks(cfg.ks))
    minors = [minor_extract(X, Z) for X in points]
    dets = [det(M) for M in minors]
    out = []
    for i in range(cfg.N):
        cof_t = cof(minors[i]).T
        acc = Fraction(0)
        for j in range(cfg.N):
            acc += ts[i][j] * (cof_t.inner(minors[j] - minors[i])
                               - dets[j] + dets[i])
        out.append(acc)
    return tuple(out)


def nu_vector(E, cfg: TNConfig) -> Tuple[Fraction, ...]:
    """nu_i = -(c_i - sum_j t^i_j c_j - k_i <Y_i, C_i>); all positive when
    the configuration's inclusion points lie in the inclusion set of a
    strictly polyconvex energy."""
    points = points_from_config(cfg)
    ts, _ = t_vectors(defining_vector_from_ks(cfg.ks))
    cs = [E.value(X) for X in points]
    out = []
    for i in range(cfg.N):
        Yi = grad_f(E, points[i])
        s = sum((ts[i][j] * cs[j] for j in range(cfg.N)), Fraction(0))
        out.append(-(cs[i] - s - cfg.ks[i] * Yi.inner(cfg.arms[i])))
    return tuple(out)
