"""Connections, torsion, the evolutionary-form commutator, and the
curvature stack up to the Einstein tensor and its divergence.

Index conventions (normative for every identity tested here):

* Gamma^sigma_{alpha beta}: sigma upper, alpha first lower, beta second
  lower; alpha is the differentiation index, so the covariant derivative
  of a 1-form reads A_{beta;alpha} = d_alpha A_beta
  - Gamma^sigma_{alpha beta} A_sigma.
* torsion T^sigma_{alpha beta} = Gamma^sigma_{alpha beta}
  - Gamma^sigma_{beta alpha}.
* R^rho_{sigma mu nu} = d_mu Gamma^rho_{nu sigma}
  - d_nu Gamma^rho_{mu sigma} + Gamma^rho_{mu lam} Gamma^lam_{nu sigma}
  - Gamma^rho_{nu lam} Gamma^lam_{mu sigma}; on the unit 2-sphere this
  makes R^theta_{phi theta phi} = +sin(theta)^2.

Connections may be nonsymmetric everywhere except christoffel output; no
metric-compatibility constraint is imposed on user-supplied coefficients.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ChartMismatchError, DegreeError
from .exterior import Form
from .geometry import Metric
from .symbolic import (
    Chart,
    Expr,
    Rat,
    ZERO,
    add,
    diff,
    mul,
    neg,
    simplify,
)

__all__ = [
    "Connection",
    "Tensor",
    "christoffel",
    "torsion",
    "covariant_derivative_1form",
    "evolutionary_commutator",
    "riemann",
    "ricci_and_scalar",
    "einstein_tensor",
    "bianchi_residual",
]


def _nested_shape_ok(data, dims: int, n: int) -> bool:
    if dims == 0:
        return isinstance(data, Expr)
    return len(data) == n and all(_nested_shape_ok(d, dims - 1, n) for d in data)


def _simplify_nested(data, dims: int):
    if dims == 0:
        return simplify(data)
    return tuple(_simplify_nested(d, dims - 1) for d in data)


class Tensor:
    """Componentwise tensor container with declared index variance.

    `variance` is a string of 'u'/'l' per slot, e.g. "ull" for
    T^sigma_{alpha beta}.  Components are simplified on construction.
    """

    def __init__(self, chart: Chart, variance: str, comps):
        rank = len(variance)
        if any(v not in "ul" for v in variance):
            raise ValueError("variance must use only 'u' and 'l'")
        if not _nested_shape_ok(comps, rank, chart.dim):
            raise DegreeError(
                f"component array must be {chart.dim}^{rank} of Expr"
            )
        self.chart = chart
        self.variance = variance
        self.comps = _simplify_nested(comps, rank)

    @property
    def rank(self) -> int:
        return len(self.variance)

    def comp(self, *idx: int) -> Expr:
        out = self.comps
        for i in idx:
            out = out[i]
        return out

    def __eq__(self, other):
        return (
            isinstance(other, Tensor)
            and self.chart == other.chart
            and self.variance == other.variance
            and self.comps == other.comps
        )

    def nonzero(self) -> dict[tuple[int, ...], Expr]:
        """Sorted map of nonzero components (zero components omitted)."""
        out: dict[tuple[int, ...], Expr] = {}

        def walk(node, prefix):
            if isinstance(node, tuple):
                for i, child in enumerate(node):
                    walk(child, prefix + (i,))
            elif node != ZERO:
                out[prefix] = node

        walk(self.comps, ())
        return dict(sorted(out.items()))


class Connection:
    """n^3 coefficients Gamma^sigma_{alpha beta}, possibly nonsymmetric."""

    def __init__(self, chart: Chart, gamma):
        if not _nested_shape_ok(gamma, 3, chart.dim):
            raise DegreeError(
                f"connection needs a {chart.dim}^3 array of Expr"
            )
        self.chart = chart
        self.gamma = _simplify_nested(gamma, 3)

    @classmethod
    def zero(cls, chart: Chart) -> "Connection":
        n = chart.dim
        z = tuple(tuple(tuple(ZERO for _ in range(n)) for _ in range(n))
                  for _ in range(n))
        return cls(chart, z)


def christoffel(g: Metric) -> Connection:
    """Levi-Civita coefficients of a nonsingular metric; symmetric in the
    lower pair by construction."""
    chart = g.chart
    n = chart.dim
    names = chart.names
    half = Rat(Fraction(1, 2))
    gamma = []
    for s in range(n):
        plane = []
        for a in range(n):
            row = []
            for b in range(n):
                parts = []
                for r in range(n):
                    if g.inverse[s][r] == ZERO:
                        continue
                    bracket = add(
                        diff(g.g[r][b], names[a]),
                        diff(g.g[r][a], names[b]),
                        neg(diff(g.g[a][b], names[r])),
                    )
                    parts.append(mul(g.inverse[s][r], bracket))
                row.append(mul(half, add(*parts)))
            plane.append(tuple(row))
        gamma.append(tuple(plane))
    return Connection(chart, tuple(gamma))


def torsion(c: Connection) -> Tensor:
    """T^sigma_{alpha beta} = Gamma^sigma_{alpha beta}
    - Gamma^sigma_{beta alpha}; identically zero for christoffel output."""
    n = c.chart.dim
    comps = tuple(
        tuple(
            tuple(add(c.gamma[s][a][b], neg(c.gamma[s][b][a])) for b in range(n))
            for a in range(n)
        )
        for s in range(n)
    )
    return Tensor(c.chart, "ull", comps)


def _form_components_as_vector(a: Form) -> tuple[Expr, ...]:
    return tuple(a.get((i,)) for i in range(a.chart.dim))


def covariant_derivative_1form(a: Form, c: Connection) -> Tensor:
    """Matrix A_{beta;alpha} indexed [alpha][beta]."""
    if a.chart != c.chart:
        raise ChartMismatchError("form and connection charts differ")
    if a.degree != 1:
        raise DegreeError("covariant derivative here takes a 1-form")
    n = a.chart.dim
    names = a.chart.names
    A = _form_components_as_vector(a)
    comps = tuple(
        tuple(
            add(
                diff(A[b], names[al]),
                neg(add(*(mul(c.gamma[s][al][b], A[s]) for s in range(n)))),
            )
            for b in range(n)
        )
        for al in range(n)
    )
    return Tensor(a.chart, "ll", comps)


def evolutionary_commutator(a: Form, c: Connection) -> Form:
    """2-form K with K_{alpha beta} = (d_alpha A_beta - d_beta A_alpha)
    + (Gamma^sigma_{beta alpha} - Gamma^sigma_{alpha beta}) A_sigma.

    For symmetric connections this is exactly ext_d(a); nonsymmetric
    connectedness contributes the torsion term that obstructs closure.
    """
    if a.chart != c.chart:
        raise ChartMismatchError("form and connection charts differ")
    if a.degree != 1:
        raise DegreeError("the evolutionary commutator takes a 1-form")
    n = a.chart.dim
    names = a.chart.names
    A = _form_components_as_vector(a)
    comps = {}
    for al in range(n):
        for be in range(al + 1, n):
            curl = add(diff(A[be], names[al]), neg(diff(A[al], names[be])))
            tors = add(
                *(
                    mul(add(c.gamma[s][be][al], neg(c.gamma[s][al][be])), A[s])
                    for s in range(n)
                )
            )
            comps[(al, be)] = add(curl, tors)
    return Form(a.chart, 2, comps)


def riemann(c: Connection) -> Tensor:
    """Curvature R^rho_{sigma mu nu} of a (possibly nonsymmetric)
    connection; antisymmetric in mu, nu."""
    n = c.chart.dim
    names = c.chart.names
    G = c.gamma
    out = []
    for r in range(n):
        by_sigma = []
        for s in range(n):
            by_mu = []
            for m in range(n):
                row = []
                for v in range(n):
                    parts = [
                        diff(G[r][v][s], names[m]),
                        neg(diff(G[r][m][s], names[v])),
                    ]
                    for lam in range(n):
                        parts.append(mul(G[r][m][lam], G[lam][v][s]))
                        parts.append(neg(mul(G[r][v][lam], G[lam][m][s])))
                    row.append(add(*parts))
                by_mu.append(tuple(row))
            by_sigma.append(tuple(by_mu))
        out.append(tuple(by_sigma))
    return Tensor(c.chart, "ulll", tuple(out))


def ricci_and_scalar(R4: Tensor, g: Metric) -> tuple[Tensor, Expr]:
    """R_{mu nu} = R^rho_{mu rho nu} and R = g^{mu nu} R_{mu nu}."""
    if R4.chart != g.chart:
        raise ChartMismatchError("curvature and metric charts differ")
    n = g.chart.dim
    ricci = tuple(
        tuple(
            add(*(R4.comp(r, m, r, v) for r in range(n))) for v in range(n)
        )
        for m in range(n)
    )
    ricci_t = Tensor(g.chart, "ll", ricci)
    scalar = simplify(
        add(
            *(
                mul(g.inverse[m][v], ricci_t.comp(m, v))
                for m in range(n)
                for v in range(n)
            )
        )
    )
    return ricci_t, scalar


def einstein_tensor(g: Metric) -> Tensor:
    """G_{mu nu} = R_{mu nu} - (1/2) g_{mu nu} R through the full
    christoffel -> riemann -> ricci pipeline."""
    ricci, scalar = ricci_and_scalar(riemann(christoffel(g)), g)
    n = g.chart.dim
    half = Rat(Fraction(1, 2))
    comps = tuple(
        tuple(
            add(ricci.comp(m, v), neg(mul(half, g.g[m][v], scalar)))
            for v in range(n)
        )
        for m in range(n)
    )
    return Tensor(g.chart, "ll", comps)


def bianchi_residual(g: Metric) -> list[Expr]:
    """Contracted Bianchi residual, one expression per lower index:
    div G_nu = g^{mu rho} (d_rho G_{mu nu} - Gamma^lam_{rho mu} G_{lam nu}
    - Gamma^lam_{rho nu} G_{mu lam}); expected componentwise zero."""
    chart = g.chart
    n = chart.dim
    names = chart.names
    G = einstein_tensor(g)
    gamma = christoffel(g).gamma
    out = []
    for v in range(n):
        parts = []
        for m in range(n):
            for r in range(n):
                if g.inverse[m][r] == ZERO:
                    continue
                inner = [diff(G.comp(m, v), names[r])]
                for lam in range(n):
                    inner.append(neg(mul(gamma[lam][r][m], G.comp(lam, v))))
                    inner.append(neg(mul(gamma[lam][r][v], G.comp(m, lam))))
                parts.append(mul(g.inverse[m][r], add(*inner)))
        out.append(simplify(add(*parts)))
    return out
