"""Skew-symmetric differential forms over a single chart.

Components are stored only at strictly increasing multi-indices; all sign
bookkeeping happens when operations assemble results, so two forms are
equal exactly when their component maps match.  The closure classifier
separates Closed / Exact / NonClosed and, for closed forms, attempts an
explicit potential that is re-verified before being reported.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Mapping, Sequence

from .errors import ChartMismatchError, DegreeError, DomainError
from .symbolic import (
    DEFAULT_POLICY,
    Chart,
    Expr,
    Rat,
    SamplingPolicy,
    Sym,
    ZERO,
    ZeroVerdict,
    add,
    diff,
    is_zero,
    mul,
    pow_,
    simplify,
    substitute,
    to_text,
)
from ._antideriv import antiderivative

__all__ = [
    "Form",
    "VectorField",
    "SubmanifoldMap",
    "ClosureStatus",
    "ClosureReport",
    "dcoord",
    "wedge",
    "ext_d",
    "linear_combine",
    "pullback",
    "interior_product",
    "classify_closure",
    "form_to_text",
]


class Form:
    """Degree-p skew-symmetric form: increasing index tuple -> Expr.

    Components are simplified on construction and zeros dropped, so the
    empty map is the zero form.  Degree 0 stores its single expression at
    the empty tuple.  Instances are immutable by convention.
    """

    def __init__(self, chart: Chart, degree: int,
                 components: Mapping[Sequence[int], Expr] | None = None,
                 top_degree: bool = False):
        n = chart.dim
        if not 0 <= degree <= n:
            raise DegreeError(f"degree {degree} out of range for dim {n}")
        comps: dict[tuple[int, ...], Expr] = {}
        for raw_idx, e in (components or {}).items():
            idx = tuple(raw_idx)
            if len(idx) != degree:
                raise DegreeError(f"index {idx} has length != degree {degree}")
            if any(not 0 <= i < n for i in idx):
                raise DegreeError(f"index {idx} out of range for dim {n}")
            if any(idx[k] >= idx[k + 1] for k in range(len(idx) - 1)):
                raise DegreeError(f"index {idx} is not strictly increasing")
            s = simplify(e)
            if s != ZERO:
                comps[idx] = s
        self.chart = chart
        self.degree = degree
        self.components = comps
        self.top_degree = top_degree

    @classmethod
    def zero(cls, chart: Chart, degree: int, top_degree: bool = False) -> "Form":
        return cls(chart, degree, {}, top_degree=top_degree)

    @classmethod
    def scalar(cls, chart: Chart, e: Expr) -> "Form":
        return cls(chart, 0, {(): e})

    def get(self, idx: Sequence[int]) -> Expr:
        return self.components.get(tuple(idx), ZERO)

    @property
    def is_zero_form(self) -> bool:
        return not self.components

    def __eq__(self, other):
        return (
            isinstance(other, Form)
            and self.chart == other.chart
            and self.degree == other.degree
            and self.components == other.components
        )

    def __repr__(self):
        return f"<Form deg={self.degree} {form_to_text(self)}>"


def dcoord(chart: Chart, i: int) -> Form:
    """The coordinate differential dx^i as a 1-form."""
    return Form(chart, 1, {(i,): Rat(1)})


def form_to_text(f: Form) -> str:
    if f.degree == 0:
        return to_text(f.get(()))
    if not f.components:
        return "0"
    parts = []
    for idx in sorted(f.components):
        basis = "^".join(f"d{f.chart.names[i]}" for i in idx)
        parts.append(f"({to_text(f.components[idx])}) {basis}")
    return " + ".join(parts)


@dataclass(frozen=True)
class VectorField:
    """Contravariant components, one Expr per chart coordinate."""

    chart: Chart
    components: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.components) != self.chart.dim:
            raise DegreeError("vector field needs one component per coordinate")


@dataclass(frozen=True)
class SubmanifoldMap:
    """Parameterized map u -> x(u) from a source chart into a target chart.

    Models the integrable structure (pseudostructure) on which inexact
    closed forms are realized; supplied by the user, never searched for.
    """

    source: Chart
    target: Chart
    exprs: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.exprs) != self.target.dim:
            raise DegreeError("map needs one expression per target coordinate")

    @classmethod
    def identity(cls, chart: Chart) -> "SubmanifoldMap":
        return cls(chart, chart, tuple(Sym(n) for n in chart.names))


def _require_same_chart(a_chart: Chart, b_chart: Chart):
    if a_chart != b_chart:
        raise ChartMismatchError(
            f"charts differ: {a_chart.names} vs {b_chart.names}"
        )


def _merge_sign(left: tuple[int, ...], right: tuple[int, ...]) -> int:
    """Parity of sorting the concatenation of two increasing tuples."""
    inversions = 0
    for i in left:
        for j in right:
            if j < i:
                inversions += 1
    return -1 if inversions % 2 else 1


def wedge(a: Form, b: Form) -> Form:
    """Graded-commutative exterior product."""
    _require_same_chart(a.chart, b.chart)
    n = a.chart.dim
    degree = a.degree + b.degree
    if degree > n:
        return Form.zero(a.chart, n, top_degree=True)
    acc: dict[tuple[int, ...], list[Expr]] = {}
    for idx_a, ca in a.components.items():
        set_a = set(idx_a)
        for idx_b, cb in b.components.items():
            if set_a & set(idx_b):
                continue
            sign = _merge_sign(idx_a, idx_b)
            key = tuple(sorted(idx_a + idx_b))
            acc.setdefault(key, []).append(mul(Rat(sign), ca, cb))
    return Form(a.chart, degree, {k: add(*v) for k, v in acc.items()})


def ext_d(a: Form) -> Form:
    """Exterior derivative; at top degree returns the flagged zero form."""
    n = a.chart.dim
    if a.degree == n:
        return Form.zero(a.chart, n, top_degree=True)
    names = a.chart.names
    acc: dict[tuple[int, ...], list[Expr]] = {}
    for idx, c in a.components.items():
        for j in range(n):
            if j in idx:
                continue
            dc = diff(c, names[j])
            if dc == ZERO:
                continue
            pos = sum(1 for i in idx if i < j)
            sign = -1 if pos % 2 else 1
            key = tuple(sorted(idx + (j,)))
            acc.setdefault(key, []).append(mul(Rat(sign), dc))
    return Form(a.chart, a.degree + 1, {k: add(*v) for k, v in acc.items()})


def linear_combine(coeffs: Sequence[Expr], forms: Sequence[Form]) -> Form:
    """Componentwise sum of coefficient-scaled forms of equal degree."""
    if len(coeffs) != len(forms):
        raise DegreeError("need one coefficient per form")
    if not forms:
        raise DegreeError("need at least one form")
    chart, degree = forms[0].chart, forms[0].degree
    for f in forms[1:]:
        _require_same_chart(chart, f.chart)
        if f.degree != degree:
            raise DegreeError("forms must share a degree")
    acc: dict[tuple[int, ...], list[Expr]] = {}
    for c, f in zip(coeffs, forms):
        for idx, comp in f.components.items():
            acc.setdefault(idx, []).append(mul(c, comp))
    return Form(chart, degree, {k: add(*v) for k, v in acc.items()})


def pullback(phi: SubmanifoldMap, a: Form) -> Form:
    """Pull a form on the target chart back along the map."""
    _require_same_chart(phi.target, a.chart)
    src = phi.source
    k = src.dim
    if a.degree > k:
        return Form.zero(src, k, top_degree=True)
    subs_map = {phi.target.names[i]: phi.exprs[i] for i in range(phi.target.dim)}
    if a.degree == 0:
        return Form.scalar(src, substitute(a.get(()), subs_map))
    pulled_d = [
        Form(src, 1, {(j,): diff(phi.exprs[i], src.names[j]) for j in range(k)})
        for i in range(phi.target.dim)
    ]
    acc: dict[tuple[int, ...], list[Expr]] = {}
    for idx, c in a.components.items():
        term = Form.scalar(src, substitute(c, subs_map))
        for i in idx:
            term = wedge(term, pulled_d[i])
        for key, comp in term.components.items():
            acc.setdefault(key, []).append(comp)
    return Form(src, a.degree, {k2: add(*v) for k2, v in acc.items()})


def interior_product(v: VectorField, a: Form) -> Form:
    """Contraction of the first slot with a vector field."""
    _require_same_chart(v.chart, a.chart)
    if a.degree < 1:
        raise DegreeError("interior product needs degree >= 1")
    acc: dict[tuple[int, ...], list[Expr]] = {}
    for idx, c in a.components.items():
        for pos, i in enumerate(idx):
            sign = -1 if pos % 2 else 1
            key = idx[:pos] + idx[pos + 1 :]
            acc.setdefault(key, []).append(mul(Rat(sign), v.components[i], c))
    return Form(a.chart, a.degree - 1, {k: add(*v2) for k, v2 in acc.items()})


# ---------------------------------------------------------------------------
# Closure classification
# ---------------------------------------------------------------------------


class ClosureStatus(Enum):
    CLOSED = "Closed"
    EXACT = "Exact"
    NONCLOSED = "NonClosed"


@dataclass(frozen=True)
class ClosureReport:
    status: ClosureStatus
    d_form: Form
    potential: Form | None = None
    commutator: dict | None = None
    uncertain: bool = False


def _axis_potential(a: Form, base: int) -> Expr | None:
    """Potential of a closed 1-form by iterated segment integration from
    the base point (base, ..., base); None when the antiderivative table
    cannot integrate a component."""
    names = a.chart.names
    s = "_s_"
    base_e = Rat(base)
    parts = []
    for i, name in enumerate(names):
        comp = a.get((i,))
        if comp == ZERO:
            continue
        frozen = {names[j]: base_e for j in range(i + 1, len(names))}
        frozen[name] = Sym(s)
        integrand = substitute(comp, frozen)
        anti = antiderivative(integrand, s)
        if anti is None:
            return None
        try:
            upper = substitute(anti, {s: Sym(name)})
            lower = substitute(anti, {s: base_e})
        except DomainError:
            return None
        parts.append(add(upper, mul(Rat(-1), lower)))
    return add(*parts)


def _homotopy_potential(a: Form) -> Form | None:
    """Scaling-homotopy potential about the origin for degree >= 2."""
    chart = a.chart
    n = chart.dim
    p = a.degree
    t = "_t_"
    scale = {name: mul(Sym(t), Sym(name)) for name in chart.names}
    comps: dict[tuple[int, ...], Expr] = {}
    for J in combinations(range(n), p - 1):
        parts = []
        for i in range(n):
            if i in J:
                continue
            K = tuple(sorted(J + (i,)))
            comp = a.get(K)
            if comp == ZERO:
                continue
            pos = K.index(i)
            sign = -1 if pos % 2 else 1
            integrand = mul(pow_(Sym(t), p - 1), substitute(comp, scale))
            anti = antiderivative(integrand, t)
            if anti is None:
                return None
            try:
                value = add(
                    substitute(anti, {t: Rat(1)}),
                    mul(Rat(-1), substitute(anti, {t: Rat(0)})),
                )
            except DomainError:
                return None
            parts.append(mul(Rat(sign), Sym(chart.names[i]), value))
        if parts:
            comps[J] = add(*parts)
    return Form(chart, p - 1, comps)


def _verified(potential: Form, a: Form, policy: SamplingPolicy) -> bool:
    residual = linear_combine([Rat(1), Rat(-1)], [ext_d(potential), a])
    return all(
        is_zero(c, policy) is ZeroVerdict.ZERO for c in residual.components.values()
    )


def _find_potential(a: Form, policy: SamplingPolicy) -> Form | None:
    p = a.degree
    if p == 0:
        return None
    if a.is_zero_form:
        return Form.zero(a.chart, p - 1)
    if p == 1:
        for base in (0, 1):
            psi = _axis_potential(a, base)
            if psi is None:
                continue
            candidate = Form.scalar(a.chart, psi)
            if _verified(candidate, a, policy):
                return candidate
        return None
    candidate = _homotopy_potential(a)
    if candidate is not None and _verified(candidate, a, policy):
        return candidate
    return None


def classify_closure(a: Form, policy: SamplingPolicy = DEFAULT_POLICY) -> ClosureReport:
    """Closed / Exact / NonClosed classification of a form.

    Exactness is only reported with a potential that has been rebuilt
    through ext_d and re-verified; when the integration table cannot
    produce one, the honest answer is Closed with no potential.  Unknown
    zero-tests degrade the verdict to NonClosed with `uncertain` set.
    """
    d = ext_d(a)
    verdicts = {idx: is_zero(c, policy) for idx, c in d.components.items()}
    nonzero = {idx: d.components[idx] for idx, v in verdicts.items()
               if v is not ZeroVerdict.ZERO}
    uncertain = any(v is ZeroVerdict.UNKNOWN for v in verdicts.values())
    if nonzero:
        return ClosureReport(
            ClosureStatus.NONCLOSED, d, commutator=nonzero, uncertain=uncertain
        )
    potential = _find_potential(a, policy)
    if potential is not None:
        return ClosureReport(ClosureStatus.EXACT, d, potential=potential)
    return ClosureReport(ClosureStatus.CLOSED, d)
