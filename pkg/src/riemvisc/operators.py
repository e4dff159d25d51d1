"""Catalog of degenerate elliptic operators F(x, r, zeta, A) with checks.

Operators evaluate on frame components: ``zeta`` as an n-vector and ``A``
as a symmetric n x n matrix in the canonical frame of the base point.
Structural claims (degenerate ellipticity, properness, the strong
monotonicity constant gamma, translation invariance, continuity moduli)
are declared flags; the ``*_check`` and ``*_estimate`` sweeps in this
module probe them empirically.  Estimated moduli are never certificates;
pass thresholds belong to the test configuration, not the library.

Note on the positive determinant: ``detplus`` is the literal product of
the nonnegative eigenvalues (empty product = 1).  That function is not
monotone in the semidefinite order, so the shipped ``neg_detplus``
operator is built on ``detplus_pospart`` (the product of eigenvalue
positive parts), which is monotone and keeps the operator genuinely
degenerate elliptic.  See README for the full discussion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import PreconditionError
from .manifolds import Euclidean, Manifold, Point, SymBilinear, TangentVector

_NEG_INF = -math.inf
_POS_INF = math.inf


# --------------------------------------------------------------------- #
# scalar coefficient fields
# --------------------------------------------------------------------- #

class ScalarField:
    """A scalar coefficient on the manifold, evaluable per point or per batch."""

    def __init__(self, fn: Callable[[Point], float], name: str = "field",
                 constant_value: float | None = None, minimum: float | None = None):
        self._fn = fn
        self.name = name
        self.constant_value = constant_value
        self.minimum = minimum if minimum is not None else constant_value

    @classmethod
    def constant(cls, c: float) -> "ScalarField":
        c = float(c)
        return cls(lambda p: c, f"const:{c}", constant_value=c)

    @classmethod
    def coordinate(cls, axis: int) -> "ScalarField":
        return cls(lambda p: float(p.coords[axis]), f"coord:{axis}")

    @classmethod
    def parse(cls, spec) -> "ScalarField":
        """Accepts a number, 'const:<c>', 'coord:<i>', 'zero', or a ScalarField."""
        if isinstance(spec, ScalarField):
            return spec
        if isinstance(spec, (int, float)):
            return cls.constant(float(spec))
        if isinstance(spec, str):
            if spec == "zero":
                return cls.constant(0.0)
            kind, _, arg = spec.partition(":")
            if kind == "const":
                return cls.constant(float(arg))
            if kind == "coord":
                return cls.coordinate(int(arg))
        raise ValueError(f"cannot parse scalar field spec {spec!r}")

    def __call__(self, p: Point) -> float:
        return float(self._fn(p))

    def values(self, points: Sequence[Point]) -> np.ndarray:
        if self.constant_value is not None:
            return np.full(len(points), self.constant_value)
        return np.array([self._fn(p) for p in points])


# --------------------------------------------------------------------- #
# operator type
# --------------------------------------------------------------------- #

@dataclass(frozen=True)
class OperatorSpec:
    """An evaluable F(x, r, zeta, A) with declared structural flags."""

    name: str
    fn: Callable[[Point, float, np.ndarray, np.ndarray], float]
    degenerate_elliptic: bool = False
    proper: bool = False
    gamma: float = 0.0
    x_dependent: bool = False
    r_domain: tuple[float, float] = (_NEG_INF, _POS_INF)
    modulus_note: str | None = None
    batch: Callable | None = field(default=None, repr=False)
    context_builder: Callable | None = field(default=None, repr=False)

    def point_eval(self, x: Point, r: float, zeta: np.ndarray, a: np.ndarray) -> float:
        lo, hi = self.r_domain
        if not (lo <= r <= hi):
            raise PreconditionError(
                f"{self.name}: r={r} outside the operator domain [{lo}, {hi}]"
            )
        return float(self.fn(x, r, np.asarray(zeta, float), np.asarray(a, float)))

    def make_context(self, points: Sequence[Point]):
        if self.context_builder is not None:
            return self.context_builder(points)
        return {"points": list(points)}

    def eval_batch(self, ctx, rs: np.ndarray, zetas: np.ndarray, amats: np.ndarray) -> np.ndarray:
        lo, hi = self.r_domain
        if rs.min() < lo or rs.max() > hi:
            raise PreconditionError(f"{self.name}: r values escape [{lo}, {hi}]")
        if self.batch is not None:
            return self.batch(ctx, rs, zetas, amats)
        pts = ctx["points"]
        return np.array(
            [self.fn(p, r, z, a) for p, r, z, a in zip(pts, rs, zetas, amats)]
        )


def evaluate(
    F: OperatorSpec, m: Manifold, x: Point, r: float, zeta: TangentVector, a: SymBilinear
) -> float:
    """Evaluate F on tangent-space objects, checking base points."""
    m._check_based(x, zeta)
    m._check_based(x, a)
    return F.point_eval(x, r, m.frame_components(x, zeta), a.matrix)


# --------------------------------------------------------------------- #
# matrix functions
# --------------------------------------------------------------------- #

def detplus(a) -> float:
    """Product of the nonnegative eigenvalues; empty product is 1.

    This is the literal convention (chosen for multiplicativity); it is
    *not* monotone in the semidefinite order, see module docstring.
    """
    mat = a.matrix if isinstance(a, SymBilinear) else np.asarray(a, float)
    eig = np.linalg.eigvalsh(mat)
    keep = eig[eig >= 0.0]
    return float(np.prod(keep)) if keep.size else 1.0


def detplus_pospart(a) -> float:
    """Product of the eigenvalue positive parts max(lambda, 0); monotone."""
    mat = a.matrix if isinstance(a, SymBilinear) else np.asarray(a, float)
    return float(np.prod(np.maximum(np.linalg.eigvalsh(mat), 0.0)))


# --------------------------------------------------------------------- #
# builders
# --------------------------------------------------------------------- #

def neg_trace() -> OperatorSpec:
    """F = -trace(A): degenerate elliptic and translation invariant."""
    return OperatorSpec(
        "neg_trace",
        lambda x, r, z, a: -float(np.trace(a)),
        degenerate_elliptic=True,
        proper=True,
        batch=lambda ctx, rs, zs, As: -np.einsum("nii->n", As),
    )


def neg_detplus() -> OperatorSpec:
    """F = -detplus_pospart(A); the monotone positive-part product."""
    def batch(ctx, rs, zs, As):
        return -np.prod(np.maximum(np.linalg.eigvalsh(As), 0.0), axis=1)

    return OperatorSpec(
        "neg_detplus",
        lambda x, r, z, a: -detplus_pospart(a),
        degenerate_elliptic=True,
        proper=True,
        batch=batch,
    )


def neg_min_eigenvalue() -> OperatorSpec:
    def batch(ctx, rs, zs, As):
        return -np.linalg.eigvalsh(As)[:, 0]

    return OperatorSpec(
        "neg_min_eigenvalue",
        lambda x, r, z, a: -float(np.linalg.eigvalsh(a)[0]),
        degenerate_elliptic=True,
        proper=True,
        batch=batch,
    )


def constant(c: float) -> OperatorSpec:
    c = float(c)
    return OperatorSpec(
        f"const({c})",
        lambda x, r, z, a: c,
        degenerate_elliptic=True,
        proper=True,
        batch=lambda ctx, rs, zs, As: np.full(rs.shape, c),
    )


def scalar_term(coeff=1.0) -> OperatorSpec:
    """F = c(x) r; proper (with gamma = min c) when the coefficient is >= 0."""
    fld = ScalarField.parse(coeff)
    gamma = fld.minimum if fld.minimum is not None else 0.0

    def context_builder(points):
        return {"coeff": fld.values(points)}

    return OperatorSpec(
        f"scalar_term({fld.name})",
        lambda x, r, z, a: fld(x) * r,
        degenerate_elliptic=True,
        proper=gamma >= 0.0,
        gamma=max(gamma, 0.0),
        x_dependent=fld.constant_value is None,
        batch=lambda ctx, rs, zs, As: ctx["coeff"] * rs,
        context_builder=context_builder,
    )


def source(fld) -> OperatorSpec:
    """F = -f(x): a source term for equations of the form u + G = f + ..."""
    fld = ScalarField.parse(fld)

    def context_builder(points):
        return {"coeff": fld.values(points)}

    return OperatorSpec(
        f"source({fld.name})",
        lambda x, r, z, a: -fld(x),
        degenerate_elliptic=True,
        proper=True,
        x_dependent=fld.constant_value is None,
        batch=lambda ctx, rs, zs, As: -ctx["coeff"],
        context_builder=context_builder,
    )


def _combined_context(ops):
    def context_builder(points):
        return {"children": [op.make_context(points) for op in ops]}

    return context_builder


def _combined_batch(ops, reduce_fn):
    def batch(ctx, rs, zs, As):
        vals = [
            op.eval_batch(c, rs, zs, As) for op, c in zip(ops, ctx["children"])
        ]
        return reduce_fn(np.stack(vals))

    return batch


def sum_of(*ops: OperatorSpec, weights: Sequence[float] | None = None) -> OperatorSpec:
    """Weighted (nonnegative weights) sum of operators."""
    w = np.ones(len(ops)) if weights is None else np.asarray(weights, float)
    if np.any(w < 0):
        raise ValueError("sum combinator needs nonnegative weights")
    name = "+".join(op.name for op in ops)
    return OperatorSpec(
        f"sum({name})",
        lambda x, r, z, a: float(
            sum(wi * op.fn(x, r, z, a) for wi, op in zip(w, ops))
        ),
        degenerate_elliptic=all(op.degenerate_elliptic for op in ops),
        proper=all(op.proper for op in ops),
        gamma=float(np.dot(w, [op.gamma for op in ops])),
        x_dependent=any(op.x_dependent for op in ops),
        r_domain=(
            max(op.r_domain[0] for op in ops),
            min(op.r_domain[1] for op in ops),
        ),
        batch=_combined_batch(ops, lambda v: np.einsum("k,kn->n", w, v)),
        context_builder=_combined_context(ops),
    )


def _minmax_of(kind, ops):
    reduce_point = max if kind == "max" else min
    reduce_vec = (lambda v: v.max(axis=0)) if kind == "max" else (lambda v: v.min(axis=0))
    name = ",".join(op.name for op in ops)
    return OperatorSpec(
        f"{kind}({name})",
        lambda x, r, z, a: float(reduce_point(op.fn(x, r, z, a) for op in ops)),
        degenerate_elliptic=all(op.degenerate_elliptic for op in ops),
        proper=all(op.proper for op in ops),
        gamma=float(min(op.gamma for op in ops)),
        x_dependent=any(op.x_dependent for op in ops),
        r_domain=(
            max(op.r_domain[0] for op in ops),
            min(op.r_domain[1] for op in ops),
        ),
        batch=_combined_batch(ops, reduce_vec),
        context_builder=_combined_context(ops),
    )


def max_of(*ops: OperatorSpec) -> OperatorSpec:
    return _minmax_of("max", ops)


def min_of(*ops: OperatorSpec) -> OperatorSpec:
    return _minmax_of("min", ops)


def compose(outer: Callable[[float], float], op: OperatorSpec,
            nondecreasing: bool = True, name: str | None = None,
            outer_vec: Callable | None = None) -> OperatorSpec:
    """outer(F(...)); flags survive only for nondecreasing outer maps."""
    keep = bool(nondecreasing)
    return OperatorSpec(
        name or f"compose({op.name})",
        lambda x, r, z, a: float(outer(op.fn(x, r, z, a))),
        degenerate_elliptic=op.degenerate_elliptic and keep,
        proper=op.proper and keep,
        x_dependent=op.x_dependent,
        r_domain=op.r_domain,
        batch=(
            None
            if op.batch is None
            else (lambda ctx, rs, zs, As: (outer_vec or np.vectorize(outer))(
                op.eval_batch(ctx, rs, zs, As)
            ))
        ),
        context_builder=op.context_builder,
    )


def example_5_3(f, g, p: int = 1, q: int = 0, r_exp: int = 1, k: int = 0) -> OperatorSpec:
    """max{r - lmin(A)|z|^p - (tr A)^(2q+1)|z|^r - detplus_pospart(A)^(2k+1) f(x)^2, r - g(x)}.

    A strongly monotone, degenerate elliptic, eigenvalue-built operator;
    finite for continuous f, g on compact models.
    """
    f = ScalarField.parse(f)
    g = ScalarField.parse(g)

    def fn(x, r, z, a):
        nz = float(np.linalg.norm(z))
        lmin = float(np.linalg.eigvalsh(a)[0])
        tr = float(np.trace(a))
        first = (
            r
            - lmin * nz**p
            - tr ** (2 * q + 1) * nz**r_exp
            - detplus_pospart(a) ** (2 * k + 1) * f(x) ** 2
        )
        return float(max(first, r - g(x)))

    def context_builder(points):
        return {"f": f.values(points), "g": g.values(points)}

    def batch(ctx, rs, zs, As):
        nz = np.linalg.norm(zs, axis=1)
        eig = np.linalg.eigvalsh(As)
        lmin = eig[:, 0]
        tr = np.einsum("nii->n", As)
        dplus = np.prod(np.maximum(eig, 0.0), axis=1)
        first = (
            rs
            - lmin * nz**p
            - tr ** (2 * q + 1) * nz**r_exp
            - dplus ** (2 * k + 1) * ctx["f"] ** 2
        )
        return np.maximum(first, rs - ctx["g"])

    return OperatorSpec(
        "example_5_3",
        fn,
        degenerate_elliptic=True,
        proper=True,
        gamma=1.0,
        x_dependent=True,
        batch=batch,
        context_builder=context_builder,
    )


def yamabe(n: int, s_field, s_prime: float) -> OperatorSpec:
    """Conformal scalar-curvature operator S(x) r - S' r^((n+2)/(n-2)) - c_n tr(A).

    ``c_n = 4 (n - 1)/(n - 2)``.  For everywhere positive S and S' <= 0
    the operator is strongly monotone on r >= 0 with gamma = min S.  When
    the exponent is not an integer, negative r is outside the domain.
    """
    if n < 3:
        raise ValueError("the conformal exponent needs n >= 3")
    s_field = ScalarField.parse(s_field)
    s_prime = float(s_prime)
    coeff = 4.0 * (n - 1) / (n - 2)
    exponent = (n + 2) / (n - 2)
    integer_exp = abs(exponent - round(exponent)) < 1e-12
    r_domain = (_NEG_INF, _POS_INF) if integer_exp else (0.0, _POS_INF)
    if integer_exp:
        exponent = int(round(exponent))
    smin = s_field.minimum
    gamma = max(smin, 0.0) if (smin is not None and s_prime <= 0.0) else 0.0

    def fn(x, r, z, a):
        return s_field(x) * r - s_prime * r**exponent - coeff * float(np.trace(a))

    def context_builder(points):
        return {"s": s_field.values(points)}

    def batch(ctx, rs, zs, As):
        return ctx["s"] * rs - s_prime * rs**exponent - coeff * np.einsum("nii->n", As)

    return OperatorSpec(
        f"yamabe(n={n},S={s_field.name},S'={s_prime})",
        fn,
        degenerate_elliptic=True,
        proper=smin is not None and smin >= 0.0 and s_prime <= 0.0,
        gamma=gamma,
        x_dependent=s_field.constant_value is None,
        r_domain=r_domain,
        batch=batch,
        context_builder=context_builder,
    )


def from_config(cfg: dict) -> OperatorSpec:
    """Build a cataloged operator from a JSON description.

    Examples: ``{"op": "neg_trace"}``, ``{"op": "yamabe", "n": 3,
    "S": "const:6", "S_prime": -1}``, ``{"op": "sum", "terms": [...]}``,
    ``{"op": "source", "field": "coord:2"}``.
    """
    kind = cfg["op"]
    if kind == "neg_trace":
        return neg_trace()
    if kind == "neg_detplus":
        return neg_detplus()
    if kind == "neg_min_eigenvalue":
        return neg_min_eigenvalue()
    if kind == "const":
        return constant(cfg["value"])
    if kind == "scalar_term":
        return scalar_term(cfg.get("coeff", 1.0))
    if kind == "source":
        return source(cfg["field"])
    if kind == "sum":
        return sum_of(*[from_config(t) for t in cfg["terms"]],
                      weights=cfg.get("weights"))
    if kind == "max":
        return max_of(*[from_config(t) for t in cfg["terms"]])
    if kind == "min":
        return min_of(*[from_config(t) for t in cfg["terms"]])
    if kind == "example_5_3":
        return example_5_3(cfg.get("f", 0.0), cfg.get("g", 0.0),
                           p=cfg.get("p", 1), q=cfg.get("q", 0),
                           r_exp=cfg.get("r_exp", 1), k=cfg.get("k", 0))
    if kind == "yamabe":
        return yamabe(int(cfg["n"]), cfg["S"], float(cfg["S_prime"]))
    raise ValueError(f"unknown operator kind {kind!r}")


# --------------------------------------------------------------------- #
# structural checks
# --------------------------------------------------------------------- #

@dataclass(frozen=True)
class CheckReport:
    name: str
    model: dict
    samples: int
    max_violation: float
    tolerance: float
    passed: bool
    extra: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "model": self.model,
            "samples": self.samples,
            "max_violation": self.max_violation,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }
        if self.extra:
            out.update(self.extra)
        return out


def _default_model(model):
    return model if model is not None else Euclidean(2)


def _clip_r_range(F, r_range):
    lo = max(r_range[0], F.r_domain[0])
    hi = min(r_range[1], F.r_domain[1])
    if not lo < hi:
        raise PreconditionError("r_range does not intersect the operator domain")
    return lo, hi


def _random_sym(rng, n, scale=1.5):
    raw = rng.standard_normal((n, n)) * scale
    return 0.5 * (raw + raw.T)


def ellipticity_check(
    F: OperatorSpec,
    n_samples: int = 10_000,
    model: Manifold | None = None,
    r_range: tuple[float, float] = (-2.0, 2.0),
    seed: int = 0,
    tolerance: float = 1e-10,
) -> CheckReport:
    """Sample A <= B = A + psd and report max F(..., B) - F(..., A)."""
    m = _default_model(model)
    lo, hi = _clip_r_range(F, r_range)
    rng = np.random.default_rng(seed)
    n = m.dim
    worst = 0.0
    witness = None
    for _ in range(n_samples):
        x = m.random_point(rng)
        r = rng.uniform(lo, hi)
        z = rng.standard_normal(n) * 2.0
        a = _random_sym(rng, n)
        w = rng.standard_normal((n, n)) * rng.uniform(0.1, 1.0)
        b = a + w @ w.T
        gap = F.point_eval(x, r, z, b) - F.point_eval(x, r, z, a)
        if gap > worst:
            worst = gap
            witness = {"r": r, "A_eigs": np.linalg.eigvalsh(a).tolist()}
    return CheckReport(
        f"ellipticity:{F.name}", m.config(), n_samples, worst, tolerance,
        worst <= tolerance, {"witness": witness} if worst > tolerance else None,
    )


def monotonicity_estimate(
    F: OperatorSpec,
    r_range: tuple[float, float],
    n_samples: int = 2000,
    model: Manifold | None = None,
    seed: int = 0,
) -> tuple[float, CheckReport]:
    """gamma-hat: min difference quotient of F in r over sampled states."""
    m = _default_model(model)
    lo, hi = _clip_r_range(F, r_range)
    rng = np.random.default_rng(seed)
    n = m.dim
    gamma_hat = math.inf
    for _ in range(n_samples):
        x = m.random_point(rng)
        r, s = sorted(rng.uniform(lo, hi, size=2))
        if r == s:
            continue
        z = rng.standard_normal(n) * 2.0
        a = _random_sym(rng, n)
        quot = (F.point_eval(x, s, z, a) - F.point_eval(x, r, z, a)) / (s - r)
        gamma_hat = min(gamma_hat, quot)
    report = CheckReport(
        f"monotonicity:{F.name}", m.config(), n_samples, 0.0, 0.0, True,
        {"gamma_hat": gamma_hat, "r_range": [lo, hi]},
    )
    return float(gamma_hat), report


def _transport_state(m, x, y, z_comps, a_mat):
    zeta = m.tangent_from_frame(x, z_comps)
    moved_z = m.frame_components(y, m.parallel_transport(x, y, zeta))
    moved_a = m.parallel_transport_bilinear(x, y, m.bilinear(x, a_mat)).matrix
    return moved_z, moved_a


def _random_nearby_pair(m, rng, max_dist=1.0, min_dist=1e-3):
    x = m.random_point(rng)
    cap = m.injectivity_radius(x)
    hi = min(max_dist, 0.9 * cap) if math.isfinite(cap) else max_dist
    d = m.random_tangent(rng, x)
    nd = m.norm(x, d)
    ell = rng.uniform(min(min_dist, hi), hi)
    y = m.exp(x, TangentVector(x, d.components * (ell / nd)))
    return x, y, ell


def invariance_check(
    F: OperatorSpec,
    m: Manifold,
    n_samples: int = 1000,
    seed: int = 0,
    tolerance: float = 1e-9,
    r_range: tuple[float, float] = (-2.0, 2.0),
) -> CheckReport:
    """Max |F(r, L zeta, L A) - F(r, zeta, A)| over transported samples."""
    if F.x_dependent:
        raise PreconditionError("invariance check applies to x-independent operators")
    lo, hi = _clip_r_range(F, r_range)
    rng = np.random.default_rng(seed)
    n = m.dim
    worst = 0.0
    for _ in range(n_samples):
        x, y, _ = _random_nearby_pair(m, rng)
        r = rng.uniform(lo, hi)
        z = rng.standard_normal(n) * 2.0
        a = _random_sym(rng, n)
        moved_z, moved_a = _transport_state(m, x, y, z, a)
        worst = max(
            worst,
            abs(F.point_eval(y, r, moved_z, moved_a) - F.point_eval(x, r, z, a)),
        )
    return CheckReport(
        f"invariance:{F.name}", m.config(), n_samples, worst, tolerance,
        worst <= tolerance,
    )


@dataclass(frozen=True)
class ModulusTable:
    name: str
    bins: np.ndarray
    values: np.ndarray
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "bins": self.bins.tolist(),
            "values": self.values.tolist(),
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def intrinsic_modulus_estimate(
    F: OperatorSpec,
    m: Manifold,
    bins: Sequence[float] = (0.01, 0.05, 0.1, 0.2, 0.5, 1.0),
    n_samples: int = 4000,
    seed: int = 0,
    r_range: tuple[float, float] = (-2.0, 2.0),
    tolerance: float = 1e-6,
) -> ModulusTable:
    """Empirical modulus sup F(y, r, eta, Q) - F(x, r, L_yx eta, L_yx Q) per bin.

    The table is made nondecreasing in the bin upper edge; PASS means the
    smallest bin stays below the tolerance.
    """
    bins = np.asarray(sorted(bins), float)
    lo, hi = _clip_r_range(F, r_range)
    rng = np.random.default_rng(seed)
    n = m.dim
    table = np.zeros(len(bins))
    # stratified over bins so the smallest distances are actually exercised
    for trial in range(n_samples):
        idx = trial % len(bins)
        lo_edge = 0.0 if idx == 0 else float(bins[idx - 1])
        x, y, dist = _random_nearby_pair(
            m, rng, max_dist=float(bins[idx]), min_dist=lo_edge
        )
        r = rng.uniform(lo, hi)
        eta = rng.standard_normal(n) * 2.0
        q = _random_sym(rng, n)
        back_z, back_q = _transport_state(m, y, x, eta, q)
        val = F.point_eval(y, r, eta, q) - F.point_eval(x, r, back_z, back_q)
        idx = int(np.searchsorted(bins, dist))
        if idx < len(bins):
            table[idx] = max(table[idx], val)
    table = np.maximum.accumulate(table)
    return ModulusTable(
        f"intrinsic_modulus:{F.name}", bins, table, tolerance,
        bool(table[0] <= tolerance),
    )


@dataclass(frozen=True)
class TwoFlatTable:
    name: str
    deltas: np.ndarray
    d_bins: np.ndarray
    values: np.ndarray
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "deltas": self.deltas.tolist(),
            "d_bins": self.d_bins.tolist(),
            "values": self.values.tolist(),
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def twoflat_modulus_estimate(
    F: OperatorSpec,
    m: Manifold,
    deltas: Sequence[float] = (1e-8, 1e-6, 1e-4, 1e-2, 1e-1),
    d_bins: Sequence[float] = (0.05, 0.2, 0.5, 1.0),
    n_samples: int = 4000,
    seed: int = 0,
    r_range: tuple[float, float] = (-2.0, 2.0),
    tolerance: float = 1e-6,
) -> TwoFlatTable:
    """Empirical sup of F(y, r, L zeta, Q) - F(x, r, zeta, P) over candidate
    pairs built with P - L_yx Q <= delta I, reported per (delta, distance).

    The two arguments are tabulated separately; PASS means the corner cell
    (smallest delta, smallest distance) stays below tolerance.
    """
    deltas = np.asarray(sorted(deltas), float)
    d_bins = np.asarray(sorted(d_bins), float)
    lo, hi = _clip_r_range(F, r_range)
    rng = np.random.default_rng(seed)
    n = m.dim
    table = np.full((len(deltas), len(d_bins)), -math.inf)
    for trial in range(n_samples):
        delta = deltas[trial % len(deltas)]
        x, y, dist = _random_nearby_pair(m, rng, max_dist=float(d_bins[-1]))
        r = rng.uniform(lo, hi)
        z = rng.standard_normal(n) * 2.0
        q = _random_sym(rng, n)
        _, back_q = _transport_state(m, y, x, np.zeros(n), q)
        bump = _random_sym(rng, n, scale=1.0)
        bump -= (np.max(np.linalg.eigvalsh(bump)) - delta * rng.uniform(0.2, 1.0)) * np.eye(n)
        p = back_q + bump
        moved_z, _ = _transport_state(m, x, y, z, np.zeros((n, n)))
        val = F.point_eval(y, r, moved_z, q) - F.point_eval(x, r, z, p)
        di = int(np.searchsorted(d_bins, dist))
        de = int(np.searchsorted(deltas, delta))
        if di < len(d_bins):
            table[de, di] = max(table[de, di], val)
    table = np.where(np.isfinite(table), table, 0.0)
    table = np.maximum.accumulate(np.maximum.accumulate(table, axis=0), axis=1)
    return TwoFlatTable(
        f"twoflat_modulus:{F.name}", deltas, d_bins, table, tolerance,
        bool(table[0, 0] <= tolerance),
    )
