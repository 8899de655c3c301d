"""Batch front-end: `exformal run <file>` plus `table` and `check-expr`.

Scenario files are UTF-8 JSON with keys chart, params, metric, connection,
forms, maps, vectors, tasks (see README for the schema).  Reports are
byte-identical for identical (file, seed, version) triples: no wall-clock
content is emitted and JSON is dumped with sorted keys.  Exit codes:
0 all task verdicts in {Pass, Closed, Exact, Value}; 1 any Fail/NonClosed
(or Unknown under --strict); 2 input errors (missing file, JSON or
expression ParseError, unresolved names).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import __version__
from .catalog import (
    ENGINE_CONVENTIONS,
    correspondence_table,
    verify_einstein,
    verify_hamiltonian,
    verify_maxwell,
)
from .connection import (
    Connection,
    bianchi_residual,
    christoffel,
    covariant_derivative_1form,
    einstein_tensor,
    evolutionary_commutator,
    ricci_and_scalar,
    riemann,
    torsion,
)
from .errors import (
    DegenerateLagrangianError,
    ExformalError,
    ExprSyntaxError,
    NotVerifiableError,
    PatternMismatchError,
    ScenarioError,
    UnknownSymbolError,
)
from .exterior import (
    Form,
    SubmanifoldMap,
    VectorField,
    classify_closure,
    ext_d,
    form_to_text,
    interior_product,
    linear_combine,
    pullback,
    wedge,
)
from .geometry import Metric, build_em_form, codifferential, hodge, maxwell_residual
from .symbolic import (
    DEFAULT_POLICY,
    Chart,
    ZERO,
    ZeroVerdict,
    diff,
    eval_at,
    is_zero,
    parse_expr,
    simplify,
    to_text,
)
from .transform import (
    HamiltonianSystem,
    QuadraticLagrangian,
    hamilton_flow_check,
    integrating_factor,
    inverse_legendre,
    jacobian_degeneracy,
    legendre,
    poincare_cartan,
    poisson_bracket,
)

__all__ = ["main", "run_scenario", "ENGINE_OPS"]


# ---------------------------------------------------------------------------
# Scenario loading
# ---------------------------------------------------------------------------


@dataclass
class ScenarioContext:
    chart: Chart
    params: tuple[str, ...]
    metric: Metric | None = None
    connection: Connection | None = None
    forms: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)
    vectors: dict = field(default_factory=dict)
    tasks: list = field(default_factory=list)


def _parse_in(ctx_chart: Chart, params, text: str, where: str):
    if not isinstance(text, str):
        raise ScenarioError(f"{where}: expected an expression string")
    try:
        return parse_expr(text, ctx_chart, params)
    except ExprSyntaxError as e:
        raise ScenarioError(
            f"{where}: syntax error at position {e.position} of {text!r}"
        ) from e
    except UnknownSymbolError as e:
        raise ScenarioError(
            f"{where}: unknown symbol '{e.name}' in {text!r}"
        ) from e


def _component_key(raw: str, degree: int, where: str) -> tuple[int, ...]:
    raw = raw.strip()
    if degree == 0:
        if raw not in ("", "()"):
            raise ScenarioError(f"{where}: degree-0 component key must be empty")
        return ()
    try:
        idx = tuple(int(p) for p in raw.split(","))
    except ValueError:
        raise ScenarioError(
            f"{where}: bad component key {raw!r} (want comma-separated ints)"
        ) from None
    return idx


def load_scenario(data: dict) -> ScenarioContext:
    if not isinstance(data, dict):
        raise ScenarioError("scenario root must be a JSON object")
    if "chart" not in data:
        raise ScenarioError("scenario needs a 'chart' list")
    try:
        chart = Chart(data["chart"])
    except (ValueError, TypeError) as e:
        raise ScenarioError(f"bad chart: {e}") from e
    params = tuple(data.get("params", ()))
    ctx = ScenarioContext(chart=chart, params=params)

    if "metric" in data:
        m = data["metric"]
        rows = [
            [_parse_in(chart, params, e, f"metric[{i}][{j}]")
             for j, e in enumerate(row)]
            for i, row in enumerate(m.get("matrix", []))
        ]
        try:
            ctx.metric = Metric(chart, rows, int(m.get("det_sign", 1)))
        except ExformalError as e:
            raise ScenarioError(f"metric: {e}") from e

    if "connection" in data:
        gamma = [
            [
                [
                    _parse_in(chart, params, e, f"connection[{s}][{a}][{b}]")
                    for b, e in enumerate(row)
                ]
                for a, row in enumerate(plane)
            ]
            for s, plane in enumerate(data["connection"])
        ]
        try:
            ctx.connection = Connection(chart, gamma)
        except ExformalError as e:
            raise ScenarioError(f"connection: {e}") from e

    for name, spec in data.get("forms", {}).items():
        degree = spec.get("degree")
        if not isinstance(degree, int):
            raise ScenarioError(f"form '{name}': integer 'degree' required")
        comps = {}
        for key, text in spec.get("components", {}).items():
            idx = _component_key(key, degree, f"form '{name}' component {key!r}")
            comps[idx] = _parse_in(
                chart, params, text, f"form '{name}' component {key!r}"
            )
        try:
            ctx.forms[name] = Form(chart, degree, comps)
        except ExformalError as e:
            raise ScenarioError(f"form '{name}': {e}") from e

    for name, spec in data.get("maps", {}).items():
        try:
            source = Chart(spec["source"])
        except (KeyError, ValueError, TypeError) as e:
            raise ScenarioError(f"map '{name}': bad source chart: {e}") from e
        exprs = tuple(
            _parse_in(source, params, t, f"map '{name}' expr[{i}]")
            for i, t in enumerate(spec.get("exprs", ()))
        )
        try:
            ctx.maps[name] = SubmanifoldMap(source, chart, exprs)
        except ExformalError as e:
            raise ScenarioError(f"map '{name}': {e}") from e

    for name, comps in data.get("vectors", {}).items():
        exprs = tuple(
            _parse_in(chart, params, t, f"vector '{name}' comp[{i}]")
            for i, t in enumerate(comps)
        )
        try:
            ctx.vectors[name] = VectorField(chart, exprs)
        except ExformalError as e:
            raise ScenarioError(f"vector '{name}': {e}") from e

    tasks = data.get("tasks", [])
    if not isinstance(tasks, list):
        raise ScenarioError("'tasks' must be a list")
    ctx.tasks = tasks
    return ctx


# ---------------------------------------------------------------------------
# Task handlers
# ---------------------------------------------------------------------------


@dataclass
class TaskOutcome:
    outcome: str                 # Pass/Fail/Unknown/Closed/Exact/NonClosed/Value
    expectable: str              # the string an "expect" field matches
    values: dict = field(default_factory=dict)
    details: list = field(default_factory=list)


def _need(ctx, task, key, kind):
    name = task.get(key)
    table = getattr(ctx, kind)
    if name is None:
        raise ScenarioError(f"op '{task['op']}': missing '{key}'")
    if name not in table:
        raise ScenarioError(
            f"op '{task['op']}': unresolved {kind[:-1]} name '{name}'"
        )
    return table[name]


def _need_metric(ctx, task) -> Metric:
    if ctx.metric is None:
        raise ScenarioError(f"op '{task['op']}' needs a 'metric' section")
    return ctx.metric


def _need_connection(ctx, task) -> Connection:
    if ctx.connection is None:
        raise ScenarioError(f"op '{task['op']}' needs a 'connection' section")
    return ctx.connection


def _expr_arg(ctx, task, key="expr"):
    if key not in task:
        raise ScenarioError(f"op '{task['op']}': missing '{key}'")
    return _parse_in(ctx.chart, ctx.params, task[key], f"op '{task['op']}' {key}")


def _value(values: dict, expectable: str | None = None) -> TaskOutcome:
    exp = expectable if expectable is not None else values.get("result", "")
    return TaskOutcome("Value", exp, values)


def _tri_outcome(verdicts) -> str:
    vs = list(verdicts)
    if any(v is ZeroVerdict.NONZERO for v in vs):
        return "Fail"
    if any(v is ZeroVerdict.UNKNOWN for v in vs):
        return "Unknown"
    return "Pass"


def _form_values(f: Form, key="result") -> dict:
    return {key: form_to_text(f)}


def _nonzero_text(t) -> str:
    nz = t.nonzero()
    return "; ".join(f"{idx}={to_text(c)}" for idx, c in nz.items()) or "0"


def _op_parse_expr(ctx, task, policy):
    e = _expr_arg(ctx, task)
    return _value({"result": to_text(e)})


def _op_diff(ctx, task, policy):
    e = _expr_arg(ctx, task)
    by = task.get("by")
    if by is None:
        raise ScenarioError("op 'diff': missing 'by'")
    return _value({"result": to_text(diff(e, by))})


def _op_simplify(ctx, task, policy):
    return _value({"result": to_text(simplify(_expr_arg(ctx, task)))})


def _op_eval_at(ctx, task, policy):
    e = _expr_arg(ctx, task)
    at = task.get("at")
    if not isinstance(at, dict):
        raise ScenarioError("op 'eval_at': missing 'at' assignment object")
    v = eval_at(e, {k: float(x) for k, x in at.items()})
    return _value({"result": repr(v)})


def _op_is_zero(ctx, task, policy):
    v = is_zero(_expr_arg(ctx, task), policy)
    return _value({"verdict": v.value}, expectable=v.value)


def _op_wedge(ctx, task, policy):
    a = _need(ctx, task, "a", "forms")
    b = _need(ctx, task, "b", "forms")
    return _value(_form_values(wedge(a, b)))


def _op_ext_d(ctx, task, policy):
    return _value(_form_values(ext_d(_need(ctx, task, "form", "forms"))))


def _op_linear_combine(ctx, task, policy):
    coeffs = [
        _parse_in(ctx.chart, ctx.params, t, "op 'linear_combine' coeff")
        for t in task.get("coeffs", ())
    ]
    names = task.get("forms", ())
    forms = []
    for n in names:
        if n not in ctx.forms:
            raise ScenarioError(f"op 'linear_combine': unresolved form '{n}'")
        forms.append(ctx.forms[n])
    return _value(_form_values(linear_combine(coeffs, forms)))


def _op_pullback(ctx, task, policy):
    phi = _need(ctx, task, "map", "maps")
    a = _need(ctx, task, "form", "forms")
    return _value(_form_values(pullback(phi, a)))


def _op_interior_product(ctx, task, policy):
    v = _need(ctx, task, "vector", "vectors")
    a = _need(ctx, task, "form", "forms")
    return _value(_form_values(interior_product(v, a)))


def _op_classify_closure(ctx, task, policy):
    rep = classify_closure(_need(ctx, task, "form", "forms"), policy)
    values = {"status": rep.status.value}
    if rep.potential is not None:
        values["potential"] = form_to_text(rep.potential)
    if rep.commutator:
        values["commutator"] = "; ".join(
            f"{idx}={to_text(c)}" for idx, c in sorted(rep.commutator.items())
        )
    if rep.uncertain:
        values["uncertain"] = "true"
    return TaskOutcome(rep.status.value, rep.status.value, values)


def _op_hodge(ctx, task, policy):
    g = _need_metric(ctx, task)
    return _value(_form_values(hodge(_need(ctx, task, "form", "forms"), g)))


def _op_codifferential(ctx, task, policy):
    g = _need_metric(ctx, task)
    return _value(
        _form_values(codifferential(_need(ctx, task, "form", "forms"), g))
    )


def _em_fields(ctx, task, key, count):
    raw = task.get(key)
    if not isinstance(raw, list) or len(raw) != count:
        raise ScenarioError(f"op '{task['op']}': '{key}' needs {count} entries")
    return [
        _parse_in(ctx.chart, ctx.params, t, f"op '{task['op']}' {key}[{i}]")
        for i, t in enumerate(raw)
    ]


def _op_build_em_form(ctx, task, policy):
    E = _em_fields(ctx, task, "E", 3)
    B = _em_fields(ctx, task, "B", 3)
    text = form_to_text(build_em_form(E, B, ctx.chart))
    return _value({"F": text}, expectable=text)


def _op_maxwell_residual(ctx, task, policy):
    g = _need_metric(ctx, task)
    F = _need(ctx, task, "form", "forms")
    if "current" in task:
        J = _need(ctx, task, "current", "forms")
    else:
        J = Form.zero(ctx.chart, 1)
    r1, r2 = maxwell_residual(F, J, g)
    verdicts = [is_zero(c, policy) for c in r1.components.values()]
    verdicts += [is_zero(c, policy) for c in r2.components.values()]
    return TaskOutcome(
        _tri_outcome(verdicts),
        _tri_outcome(verdicts),
        {"dF": form_to_text(r1), "dstarF_minus_starJ": form_to_text(r2)},
    )


def _op_christoffel(ctx, task, policy):
    c = christoffel(_need_metric(ctx, task))
    n = ctx.chart.dim
    nz = {
        (s, a, b): c.gamma[s][a][b]
        for s in range(n)
        for a in range(n)
        for b in range(n)
        if c.gamma[s][a][b] != ZERO
    }
    text = "; ".join(f"{k}={to_text(v)}" for k, v in sorted(nz.items())) or "0"
    return _value({"nonzero": text}, expectable=text)


def _op_torsion(ctx, task, policy):
    t = torsion(_need_connection(ctx, task))
    return _value({"nonzero": _nonzero_text(t)}, expectable=_nonzero_text(t))


def _op_covariant_derivative_1form(ctx, task, policy):
    c = _need_connection(ctx, task)
    a = _need(ctx, task, "form", "forms")
    t = covariant_derivative_1form(a, c)
    return _value({"nonzero": _nonzero_text(t)}, expectable=_nonzero_text(t))


def _op_evolutionary_commutator(ctx, task, policy):
    c = _need_connection(ctx, task)
    a = _need(ctx, task, "form", "forms")
    return _value(_form_values(evolutionary_commutator(a, c)))


def _op_riemann(ctx, task, policy):
    c = (
        _need_connection(ctx, task)
        if ctx.connection is not None
        else christoffel(_need_metric(ctx, task))
    )
    t = riemann(c)
    return _value({"nonzero": _nonzero_text(t)}, expectable=_nonzero_text(t))


def _op_ricci_and_scalar(ctx, task, policy):
    g = _need_metric(ctx, task)
    ric, scal = ricci_and_scalar(riemann(christoffel(g)), g)
    return _value(
        {"ricci_nonzero": _nonzero_text(ric), "scalar": to_text(scal)},
        expectable=to_text(scal),
    )


def _op_einstein_tensor(ctx, task, policy):
    g = _need_metric(ctx, task)
    t = einstein_tensor(g)
    return _value({"nonzero": _nonzero_text(t)}, expectable=_nonzero_text(t))


def _op_bianchi_residual(ctx, task, policy):
    g = _need_metric(ctx, task)
    res = bianchi_residual(g)
    verdicts = [is_zero(e, policy) for e in res]
    text = "; ".join(
        f"{ctx.chart.names[i]}={to_text(e)}" for i, e in enumerate(res)
    )
    return TaskOutcome(_tri_outcome(verdicts), _tri_outcome(verdicts),
                       {"residuals": text})


def _lagrangian_from_task(ctx, task) -> QuadraticLagrangian:
    q = task.get("q")
    v = task.get("v")
    if not q or not v:
        raise ScenarioError(f"op '{task['op']}': need 'q' and 'v' name lists")
    qchart = Chart(tuple(q))
    mass = [
        [
            _parse_in(qchart, ctx.params, e, f"op '{task['op']}' mass[{i}][{j}]")
            for j, e in enumerate(row)
        ]
        for i, row in enumerate(task.get("mass", ()))
    ]
    linear = [
        _parse_in(qchart, ctx.params, e, f"op '{task['op']}' linear[{i}]")
        for i, e in enumerate(task.get("linear", ["0"] * len(q)))
    ]
    potential = _parse_in(
        qchart, ctx.params, task.get("potential", "0"),
        f"op '{task['op']}' potential",
    )
    try:
        return QuadraticLagrangian(q, v, mass, linear, potential)
    except ExformalError as e:
        raise ScenarioError(f"op '{task['op']}': {e}") from e


def _op_legendre(ctx, task, policy):
    L = _lagrangian_from_task(ctx, task)
    try:
        H, rep = legendre(L, policy)
    except DegenerateLagrangianError as e:
        cls = e.report.classification.value
        return TaskOutcome("Value", cls,
                           {"degeneracy": cls, "error": str(e)})
    cls = rep.classification.value
    return _value(
        {
            "H": to_text(H.hamiltonian),
            "chart": ",".join(H.chart.names),
            "degeneracy": cls,
            "determinant": to_text(rep.determinant),
        },
        expectable=cls,
    )


def _op_inverse_legendre(ctx, task, policy):
    q = task.get("q")
    p = task.get("p")
    if not q or not p:
        raise ScenarioError("op 'inverse_legendre': need 'q' and 'p' lists")
    chart = Chart(tuple(q) + tuple(p))
    H = _parse_in(chart, ctx.params, task.get("hamiltonian", ""),
                  "op 'inverse_legendre' hamiltonian")
    try:
        L = inverse_legendre(HamiltonianSystem(chart, H), policy=policy)
    except PatternMismatchError:
        return TaskOutcome("Value", "PatternMismatch",
                           {"result": "PatternMismatch"})
    mass_text = "; ".join(
        f"({i},{j})={to_text(L.mass[i][j])}"
        for i in range(L.k)
        for j in range(L.k)
    )
    return _value(
        {
            "mass": mass_text,
            "linear": "; ".join(to_text(e) for e in L.linear),
            "potential": to_text(L.potential),
        },
        expectable="Quadratic",
    )


def _op_poisson_bracket(ctx, task, policy):
    f = _expr_arg(ctx, task, "f")
    g = _expr_arg(ctx, task, "g")
    try:
        out = poisson_bracket(f, g, ctx.chart)
    except ExformalError as e:
        raise ScenarioError(f"op 'poisson_bracket': {e}") from e
    return _value({"result": to_text(out)})


def _op_jacobian_degeneracy(ctx, task, policy):
    phi = _need(ctx, task, "map", "maps")
    try:
        rep = jacobian_degeneracy(phi, policy)
    except ExformalError as e:
        raise ScenarioError(f"op 'jacobian_degeneracy': {e}") from e
    cls = rep.classification.value
    return _value(
        {"determinant": to_text(rep.determinant), "classification": cls},
        expectable=cls,
    )


def _op_integrating_factor(ctx, task, policy):
    w = _need(ctx, task, "form", "forms")
    try:
        out = integrating_factor(w, policy)
    except NotVerifiableError as e:
        return TaskOutcome("Value", "not-verifiable",
                           {"found": "not-verifiable", "error": str(e)})
    except ExformalError as e:
        raise ScenarioError(f"op 'integrating_factor': {e}") from e
    if out is None:
        return TaskOutcome("Value", "absent", {"found": "absent"})
    mu, psi = out
    return TaskOutcome("Value", "found",
                       {"found": "found", "mu": to_text(mu),
                        "psi": to_text(psi)})


def _hamiltonian_system(ctx, task) -> HamiltonianSystem:
    H = _expr_arg(ctx, task, "hamiltonian")
    try:
        return HamiltonianSystem(ctx.chart, H)
    except ExformalError as e:
        raise ScenarioError(f"op '{task['op']}': {e}") from e


def _op_poincare_cartan(ctx, task, policy):
    sys_ = _hamiltonian_system(ctx, task)
    try:
        theta = poincare_cartan(sys_)
    except ExformalError as e:
        raise ScenarioError(f"op 'poincare_cartan': {e}") from e
    return _value({"theta": form_to_text(theta)},
                  expectable=form_to_text(theta))


def _op_hamilton_flow_check(ctx, task, policy):
    sys_ = _hamiltonian_system(ctx, task)
    try:
        fc = hamilton_flow_check(sys_, policy)
    except ExformalError as e:
        raise ScenarioError(f"op 'hamilton_flow_check': {e}") from e
    outcome = "Pass" if fc.passed else ("Unknown" if fc.uncertain else "Fail")
    return TaskOutcome(outcome, outcome,
                       {"residual": form_to_text(fc.residual)})


def _report_outcome(report) -> TaskOutcome:
    out = report.verdict.value
    values = dict(report.values)
    details = [
        f"{c.verdict.value}: {c.name} [{c.residual_summary}]"
        for c in report.checks
    ]
    details += [f"note: {n}" for n in report.notes]
    return TaskOutcome(out, out, values, details)


def _op_verify_maxwell(ctx, task, policy):
    g = _need_metric(ctx, task)
    E = _em_fields(ctx, task, "E", 3)
    B = _em_fields(ctx, task, "B", 3)
    J = _em_fields(ctx, task, "J", 4) if "J" in task else [
        _parse_in(ctx.chart, ctx.params, "0", "zero")
    ] * 4
    return _report_outcome(verify_maxwell(E, B, J, g, policy))


def _op_verify_hamiltonian(ctx, task, policy):
    k = task.get("k", 1)
    from .catalog import _canonical_chart

    chart = _canonical_chart(k)
    H = _parse_in(chart, ctx.params, task.get("hamiltonian", ""),
                  "op 'verify_hamiltonian' hamiltonian")
    return _report_outcome(
        verify_hamiltonian(H, k, corrupted=bool(task.get("corrupted", False)),
                           policy=policy)
    )


def _op_verify_einstein(ctx, task, policy):
    g = _need_metric(ctx, task)
    T = None
    if "T" in task:
        n = ctx.chart.dim
        rows = task["T"]
        if len(rows) != n:
            raise ScenarioError("op 'verify_einstein': T must be n x n")
        T = tuple(
            tuple(
                _parse_in(ctx.chart, ctx.params, e,
                          f"op 'verify_einstein' T[{i}][{j}]")
                for j, e in enumerate(row)
            )
            for i, row in enumerate(rows)
        )
    kappa = task.get("kappa", "kappa")
    return _report_outcome(verify_einstein(g, T, kappa, policy))


def _op_correspondence_table(ctx, task, policy):
    rows = correspondence_table()
    values = {
        f"k={e.degree}": f"{e.family} | {e.interaction} | "
                         f"{e.verifiability.value}"
                         + (f" | verifier={e.verifier_id}" if e.verifier_id else "")
        for e in rows
    }
    return _value(values, expectable=str(len(rows)))


OPS = {
    "parse_expr": _op_parse_expr,
    "diff": _op_diff,
    "simplify": _op_simplify,
    "eval_at": _op_eval_at,
    "is_zero": _op_is_zero,
    "wedge": _op_wedge,
    "ext_d": _op_ext_d,
    "linear_combine": _op_linear_combine,
    "pullback": _op_pullback,
    "interior_product": _op_interior_product,
    "classify_closure": _op_classify_closure,
    "hodge": _op_hodge,
    "codifferential": _op_codifferential,
    "build_em_form": _op_build_em_form,
    "maxwell_residual": _op_maxwell_residual,
    "christoffel": _op_christoffel,
    "torsion": _op_torsion,
    "covariant_derivative_1form": _op_covariant_derivative_1form,
    "evolutionary_commutator": _op_evolutionary_commutator,
    "riemann": _op_riemann,
    "ricci_and_scalar": _op_ricci_and_scalar,
    "einstein_tensor": _op_einstein_tensor,
    "bianchi_residual": _op_bianchi_residual,
    "legendre": _op_legendre,
    "inverse_legendre": _op_inverse_legendre,
    "poisson_bracket": _op_poisson_bracket,
    "jacobian_degeneracy": _op_jacobian_degeneracy,
    "integrating_factor": _op_integrating_factor,
    "poincare_cartan": _op_poincare_cartan,
    "hamilton_flow_check": _op_hamilton_flow_check,
    "verify_maxwell": _op_verify_maxwell,
    "verify_hamiltonian": _op_verify_hamiltonian,
    "verify_einstein": _op_verify_einstein,
    "correspondence_table": _op_correspondence_table,
}

ENGINE_OPS = tuple(sorted(OPS))

_OK_VERDICTS = frozenset({"Pass", "Closed", "Exact", "Value"})
_FAIL_VERDICTS = frozenset({"Fail", "NonClosed"})


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


def _run_task(ctx: ScenarioContext, index: int, task, seed: int) -> dict:
    if not isinstance(task, dict) or "op" not in task:
        raise ScenarioError(f"task[{index}]: needs an 'op' field")
    op = task["op"]
    handler = OPS.get(op)
    if handler is None:
        raise ScenarioError(f"task[{index}]: unknown op '{op}'")
    policy = DEFAULT_POLICY.with_seed(seed + index)
    out = handler(ctx, task, policy)
    verdict = out.outcome
    expect = task.get("expect")
    if expect is None:
        failed = verdict in _FAIL_VERDICTS
        unknown = verdict == "Unknown"
    elif str(expect) == out.expectable:
        # a matched expectation is a success even for NonClosed/Fail
        if verdict == "Value":
            verdict = "Pass"
        failed = False
        unknown = False
    else:
        verdict = "Fail"
        out.details.append(f"expected {expect!r}, got {out.expectable!r}")
        failed = True
        unknown = False
    return {
        "index": index,
        "op": op,
        "verdict": verdict,
        "failed": failed,
        "unknown": unknown,
        "values": out.values,
        "details": out.details,
    }


def run_scenario(path: str, seed: int = 0, strict: bool = False,
                 parallel: bool = False) -> tuple[int, dict]:
    """Execute a scenario file; returns (exit_code, report dict)."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    ctx = load_scenario(data)

    if parallel:
        with ThreadPoolExecutor() as pool:
            futures = [
                pool.submit(_run_task, ctx, i, t, seed)
                for i, t in enumerate(ctx.tasks)
            ]
            task_reports = [f.result() for f in futures]
    else:
        task_reports = [
            _run_task(ctx, i, t, seed) for i, t in enumerate(ctx.tasks)
        ]

    failed = 0
    unknown = 0
    for r in task_reports:
        failed += 1 if r.pop("failed") else 0
        unknown += 1 if r.pop("unknown") else 0
    report = {
        "version": __version__,
        "file": os.path.basename(path),
        "seed": seed,
        "strict": strict,
        "conventions": dict(ENGINE_CONVENTIONS),
        "tasks": task_reports,
        "summary": {
            "tasks": len(task_reports),
            "failed": failed,
            "unknown": unknown,
        },
    }
    code = 0
    if failed or (strict and unknown):
        code = 1
    return code, report


def _emit_text(report: dict, out) -> None:
    w = out.write
    w(f"exformal {report['version']} run report\n")
    w(f"file: {report['file']}\n")
    w(f"seed: {report['seed']}\n")
    w("conventions:\n")
    for k in sorted(report["conventions"]):
        w(f"  {k}: {report['conventions'][k]}\n")
    for t in report["tasks"]:
        w(f"task[{t['index']}] op={t['op']} verdict={t['verdict']}\n")
        for k in sorted(t["values"]):
            w(f"  {k}: {t['values'][k]}\n")
        for d in t["details"]:
            w(f"  - {d}\n")
    s = report["summary"]
    w(f"summary: {s['tasks']} tasks, {s['failed']} failed, "
      f"{s['unknown']} unknown\n")


def _emit_json(report: dict, out) -> None:
    out.write(json.dumps(report, sort_keys=True, indent=2))
    out.write("\n")


def _cmd_run(args) -> int:
    try:
        code, report = run_scenario(
            args.file, seed=args.seed, strict=args.strict,
            parallel=args.parallel,
        )
    except FileNotFoundError:
        print(f"error: file not found: {args.file}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as e:
        print(
            f"error: ParseError in {args.file}: line {e.lineno} "
            f"column {e.colno}: {e.msg}",
            file=sys.stderr,
        )
        return 2
    except ScenarioError as e:
        print(f"error: ValidationError in {args.file}: {e}", file=sys.stderr)
        return 2
    except ExformalError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    if args.format == "json":
        _emit_json(report, sys.stdout)
    else:
        _emit_text(report, sys.stdout)
    return code


def _cmd_table(args) -> int:
    rows = correspondence_table()
    if args.format == "json":
        payload = [
            {
                "degree": e.degree,
                "family": e.family,
                "interaction": e.interaction,
                "verifiability": e.verifiability.value,
                "verifier_id": e.verifier_id,
                "note": e.note,
            }
            for e in rows
        ]
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        for e in rows:
            verifier = e.verifier_id or "-"
            print(f"k={e.degree}  interaction={e.interaction:16s} "
                  f"{e.verifiability.value:10s} verifier={verifier}")
            print(f"      {e.family}")
            if e.note:
                print(f"      note: {e.note}")
    return 0


def _cmd_check_expr(args) -> int:
    chart_names = [s for s in args.chart.split(",") if s]
    params = [s for s in args.params.split(",") if s] if args.params else []
    try:
        chart = Chart(chart_names)
        e = parse_expr(args.expr, chart, params)
    except ExprSyntaxError as err:
        print(f"error: SyntaxError at position {err.position}: {err}",
              file=sys.stderr)
        if err.expected:
            print(f"  expected: {', '.join(err.expected)}", file=sys.stderr)
        return 2
    except UnknownSymbolError as err:
        print(f"error: UnknownSymbol: {err}", file=sys.stderr)
        return 2
    except (ValueError, ExformalError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(to_text(simplify(e)))
    return 0


def _env_seed() -> int:
    raw = os.environ.get("EXFORMAL_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="exformal",
        description="Symbolic exterior-calculus verification engine",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="execute a JSON scenario file")
    p_run.add_argument("file")
    p_run.add_argument("--seed", type=int, default=_env_seed(),
                       help="sampling seed (env EXFORMAL_SEED)")
    p_run.add_argument("--format", choices=("text", "json"), default="text")
    p_run.add_argument("--strict", action="store_true",
                       help="treat Unknown verdicts as failures")
    p_run.add_argument("--parallel", action="store_true",
                       help="run independent tasks concurrently")
    p_run.set_defaults(fn=_cmd_run)

    p_table = subs.add_parser("table", help="print the correspondence table")
    p_table.add_argument("--format", choices=("text", "json"), default="text")
    p_table.set_defaults(fn=_cmd_table)

    p_check = subs.add_parser("check-expr",
                              help="parse an expression, echo canonical form")
    p_check.add_argument("expr")
    p_check.add_argument("--chart", required=True,
                         help="comma-separated coordinate names")
    p_check.add_argument("--params", default="",
                         help="comma-separated parameter names")
    p_check.set_defaults(fn=_cmd_check_expr)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
