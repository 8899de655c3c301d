"""Metric structure and Hodge duality.

Conventions (also echoed in every CLI report):

* Minkowski scenarios use the mostly-plus signature diag(-1, 1, 1, 1)
  with time first; the determinant sign is declared, then checked
  numerically at the sampling box center, never inferred symbolically.
* hodge raises all indices with g^{-1}, contracts against the
  Levi-Civita symbol, and scales by sqrt|det g|; the involution
  **a = s * (-1)^(p(n-p)) a fixes every sign (s = declared det sign).
* codifferential: delta a = s * (-1)^(n(p+1)+1) * d * a.
* electromagnetic 2-form: F = (E1 dx + E2 dy + E3 dz)^dt
  + B1 dy^dz + B2 dz^dx + B3 dx^dy, units c = 1; with it dF = 0 encodes
  Faraday plus no-monopoles and d*F = *J encodes Gauss plus Ampere.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations
from math import isqrt
from typing import Sequence

from .errors import (
    ChartError,
    ChartMismatchError,
    DegreeError,
    DomainError,
    MetricValidationError,
    SingularMetricError,
)
from ._linalg import as_matrix, mat_det, mat_inverse
from .exterior import Form, _merge_sign, ext_d, linear_combine
from .symbolic import (
    DEFAULT_POLICY,
    Chart,
    Expr,
    Mul,
    Rat,
    SamplingPolicy,
    ZERO,
    ZeroVerdict,
    _as_base_exp,
    _coeff_monomial,
    add,
    eval_at,
    func,
    interpretation_table,
    is_zero,
    mul,
    neg,
    pow_,
    simplify,
)

__all__ = [
    "Metric",
    "hodge",
    "codifferential",
    "build_em_form",
    "maxwell_residual",
    "euclidean_metric",
    "minkowski_metric",
]


def _sqrt_positive(e: Expr) -> Expr:
    """sqrt of an expression declared positive; halves even monomial
    exponents (a(t)^6 -> a(t)^3), otherwise keeps an opaque sqrt node."""
    e = simplify(e)
    coeff, mono = _coeff_monomial(e)
    if coeff > 0:
        num, den = coeff.numerator, coeff.denominator
        rn, rd = isqrt(num), isqrt(den)
        if rn * rn == num and rd * rd == den:
            if isinstance(mono, Mul):
                raw = [f for f in mono.factors if not isinstance(f, Rat)]
            elif isinstance(mono, Rat):
                raw = []
            else:
                raw = [mono]
            halved = []
            for f in raw:
                b, k = _as_base_exp(f)
                if k % 2:
                    break
                halved.append(pow_(b, k // 2))
            else:
                return mul(Rat(Fraction(rn, rd)), *halved)
    return func("sqrt", e)


class Metric:
    """Symmetric Expr matrix with declared determinant sign.

    Construction simplifies entries, checks symmetry structurally,
    computes and caches the inverse, rejects identically singular
    matrices, and (unless validate=False) confirms g*g^-1 = I and the
    declared sign of det g at the sampling box center.
    """

    def __init__(self, chart: Chart, g: Sequence[Sequence[Expr]], det_sign: int,
                 policy: SamplingPolicy = DEFAULT_POLICY, validate: bool = True):
        if det_sign not in (1, -1):
            raise MetricValidationError("det_sign must be +1 or -1")
        n = chart.dim
        if len(g) != n:
            raise ChartError(f"metric must be {n}x{n} for this chart")
        self.chart = chart
        self.g = as_matrix(g)
        self.det_sign = det_sign
        for i in range(n):
            for j in range(i + 1, n):
                if self.g[i][j] != self.g[j][i]:
                    raise MetricValidationError(
                        f"metric not symmetric at ({i},{j})"
                    )
        self.det = mat_det(self.g)
        if is_zero(self.det, policy) is ZeroVerdict.ZERO:
            raise SingularMetricError("metric determinant is identically zero")
        self.inverse = mat_inverse(self.g, self.det)
        self.sqrt_abs_det = _sqrt_positive(mul(Rat(det_sign), self.det))
        if validate:
            self._check_inverse(policy)
            self._check_det_sign(policy)

    def _check_inverse(self, policy: SamplingPolicy):
        n = self.chart.dim
        for i in range(n):
            for j in range(n):
                entry = add(
                    *(mul(self.g[i][k], self.inverse[k][j]) for k in range(n))
                )
                target = Rat(1) if i == j else ZERO
                if is_zero(add(entry, neg(target)), policy) is not ZeroVerdict.ZERO:
                    raise MetricValidationError(
                        f"g * g^-1 != identity at ({i},{j})"
                    )

    def _check_det_sign(self, policy: SamplingPolicy):
        lo, hi = policy.box
        center = (lo + hi) / 2.0
        names = sorted(_matrix_symbols(self.g))
        fns = interpretation_table(self.det, policy)
        rng = random.Random(policy.seed)
        env = {n: center for n in names}
        for attempt in range(policy.max_redraws + 1):
            try:
                v = eval_at(self.det, env, fns)
            except DomainError:
                v = 0.0
            if abs(v) > policy.singular_guard:
                break
            env = {n: rng.uniform(lo, hi) for n in names}
        else:
            raise MetricValidationError("could not sample a nonsingular point")
        if (v > 0) != (self.det_sign > 0):
            raise MetricValidationError(
                f"declared det_sign {self.det_sign} contradicts det at sample"
            )


def _matrix_symbols(m) -> set[str]:
    from .symbolic import free_symbols

    out: set[str] = set()
    for row in m:
        for e in row:
            out |= free_symbols(e)
    return out


def euclidean_metric(chart: Chart) -> Metric:
    n = chart.dim
    rows = [[Rat(1) if i == j else ZERO for j in range(n)] for i in range(n)]
    return Metric(chart, rows, det_sign=1, validate=False)


def minkowski_metric(chart: Chart) -> Metric:
    """diag(-1, 1, ..., 1) with the first coordinate timelike."""
    n = chart.dim
    rows = [
        [
            (Rat(-1) if i == 0 else Rat(1)) if i == j else ZERO
            for j in range(n)
        ]
        for i in range(n)
    ]
    return Metric(chart, rows, det_sign=-1, validate=False)


def _raised_component(a: Form, idx: tuple[int, ...], ginv) -> Expr:
    """a^I by the compound-matrix rule: sum over increasing J of
    det[g^{I_r J_s}] * a_J."""
    if not idx:
        return a.get(())
    parts = []
    for Jidx, comp in a.components.items():
        sub = tuple(
            tuple(ginv[i][j] for j in Jidx) for i in idx
        )
        d = mat_det(sub)
        if d == ZERO:
            continue
        parts.append(mul(d, comp))
    return add(*parts)


def hodge(a: Form, g: Metric) -> Form:
    """Hodge dual; degree p -> n - p."""
    if a.chart != g.chart:
        raise ChartMismatchError("form and metric live on different charts")
    n = g.chart.dim
    p = a.degree
    comps: dict[tuple[int, ...], list[Expr]] = {}
    full = set(range(n))
    for idx in combinations(range(n), p):
        up = _raised_component(a, idx, g.inverse)
        if up == ZERO:
            continue
        comp_idx = tuple(sorted(full - set(idx)))
        sign = _merge_sign(idx, comp_idx)
        comps.setdefault(comp_idx, []).append(
            mul(Rat(sign), g.sqrt_abs_det, up)
        )
    return Form(g.chart, n - p, {k: add(*v) for k, v in comps.items()})


def codifferential(a: Form, g: Metric) -> Form:
    """delta a = s * (-1)^(n(p+1)+1) * d * a; zero on scalars."""
    n = g.chart.dim
    p = a.degree
    if p == 0:
        return Form.zero(g.chart, 0)
    sign = g.det_sign * (-1) ** (n * (p + 1) + 1)
    return linear_combine([Rat(sign)], [hodge(ext_d(hodge(a, g)), g)])


def build_em_form(E: Sequence[Expr], B: Sequence[Expr], chart: Chart) -> Form:
    """Electromagnetic 2-form from E and B on a 4-dim chart, time first."""
    if chart.dim != 4:
        raise ChartError("electromagnetic form needs a 4-dimensional chart")
    if len(E) != 3 or len(B) != 3:
        raise DegreeError("E and B each need three components")
    comps = {
        (0, 1): neg(E[0]),
        (0, 2): neg(E[1]),
        (0, 3): neg(E[2]),
        (2, 3): B[0],
        (1, 3): neg(B[1]),
        (1, 2): B[2],
    }
    return Form(chart, 2, comps)


def maxwell_residual(F: Form, J: Form, g: Metric) -> tuple[Form, Form]:
    """(dF, d*F - *J); both vanish exactly when the scenario satisfies
    the source convention d*F = *J."""
    if F.chart != g.chart or J.chart != g.chart:
        raise ChartMismatchError("F, J, metric must share one chart")
    if g.chart.dim != 4:
        raise ChartError("Maxwell residuals need a 4-dimensional chart")
    if F.degree != 2:
        raise DegreeError("F must have degree 2")
    if J.degree != 1:
        raise DegreeError("J must have degree 1")
    first = ext_d(F)
    second = linear_combine(
        [Rat(1), Rat(-1)], [ext_d(hodge(F, g)), hodge(J, g)]
    )
    return first, second
