"""Named verifiers for the degree-k correspondences.

Degree 1 (Hamiltonian), degree 2 (Maxwell), and degree 3 (Einstein) ship
machine checks; degree 0 (wave-function / bra-ket operators) is carried
as metadata only, since there is no formula to compute.  Every verifier
has a bundled reference scenario expected to Pass and a falsification
control expected to Fail, so zero-residual checks cannot pass vacuously.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

from .connection import bianchi_residual, christoffel, einstein_tensor, torsion
from .errors import ChartError
from .exterior import Form, VectorField, ext_d, form_to_text, interior_product
from .geometry import Metric, build_em_form, maxwell_residual, minkowski_metric
from .symbolic import (
    DEFAULT_POLICY,
    Chart,
    Expr,
    ONE,
    Rat,
    SamplingPolicy,
    Sym,
    ZERO,
    ZeroVerdict,
    add,
    diff,
    is_zero,
    mul,
    parse_expr,
    simplify,
    sub,
    to_text,
)
from .transform import (
    HamiltonianSystem,
    hamilton_flow_check,
    poincare_cartan,
    poisson_bracket,
)

__all__ = [
    "Verdict",
    "CheckResult",
    "VerificationReport",
    "CorrespondenceEntry",
    "Verifiability",
    "ENGINE_CONVENTIONS",
    "correspondence_table",
    "verify_maxwell",
    "verify_hamiltonian",
    "verify_einstein",
    "reference_report",
    "control_report",
    "VERIFIER_IDS",
]


ENGINE_CONVENTIONS = {
    "signature": "mostly-plus; Minkowski diag(-1,1,1,1) with time first",
    "hodge": "*a raises indices with g^-1, contracts Levi-Civita, scales by "
             "sqrt|det g|; **a = det_sign*(-1)^(p(n-p)) a",
    "codifferential": "delta = det_sign*(-1)^(n(p+1)+1) * d *",
    "em_form": "F = (E1 dx + E2 dy + E3 dz)^dt + B1 dy^dz + B2 dz^dx "
               "+ B3 dx^dy (c = 1); dF=0 is Faraday+no-monopole, "
               "d*F = *J is Gauss+Ampere with J contravariant (rho, J^i)",
    "gamma_index": "A_{beta;alpha} = d_alpha A_beta "
                   "- Gamma^sigma_{alpha beta} A_sigma",
    "riemann_sign": "R^rho_{sigma mu nu} = d_mu Gamma^rho_{nu sigma} "
                    "- d_nu Gamma^rho_{mu sigma} + GG - GG; unit 2-sphere "
                    "R^theta_{phi theta phi} = +sin(theta)^2",
}


class Verdict(Enum):
    PASS = "Pass"
    FAIL = "Fail"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual_summary: str
    verdict: Verdict


@dataclass
class VerificationReport:
    scenario: str
    checks: list[CheckResult] = field(default_factory=list)
    conventions: dict = field(default_factory=lambda: dict(ENGINE_CONVENTIONS))
    values: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    timing: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.verdict is Verdict.PASS for c in self.checks)

    @property
    def verdict(self) -> Verdict:
        if any(c.verdict is Verdict.FAIL for c in self.checks):
            return Verdict.FAIL
        if any(c.verdict is Verdict.UNKNOWN for c in self.checks):
            return Verdict.UNKNOWN
        return Verdict.PASS


def _residual_check(name: str, residuals: dict, policy: SamplingPolicy
                    ) -> CheckResult:
    """Verdict from a {label: Expr} residual map: Pass iff all ZERO."""
    bad = []
    verdict = Verdict.PASS
    for label in sorted(residuals, key=str):
        v = is_zero(residuals[label], policy)
        if v is ZeroVerdict.NONZERO:
            verdict = Verdict.FAIL
            bad.append(f"{label}={to_text(simplify(residuals[label]))}")
        elif v is ZeroVerdict.UNKNOWN and verdict is not Verdict.FAIL:
            verdict = Verdict.UNKNOWN
            bad.append(f"{label}=Unknown")
    summary = "all residuals zero" if not bad else "; ".join(bad)
    return CheckResult(name, summary, verdict)


def _form_residuals(f: Form) -> dict:
    return {idx: c for idx, c in sorted(f.components.items())} or {}


# ---------------------------------------------------------------------------
# Degree 2: Maxwell
# ---------------------------------------------------------------------------


def verify_maxwell(E: Sequence[Expr], B: Sequence[Expr], J: Sequence[Expr],
                   metric: Metric, policy: SamplingPolicy = DEFAULT_POLICY,
                   scenario: str = "maxwell") -> VerificationReport:
    """Check dF = 0, d*F = *J, and the Poynting energy balance.

    J carries contravariant current components (rho, J^1, J^2, J^3); it
    is lowered with the metric before dualizing.
    """
    t0 = time.perf_counter()
    chart = metric.chart
    if chart.dim != 4:
        raise ChartError("Maxwell verification needs a 4-dimensional chart")
    if len(J) != 4:
        raise ChartError("current needs four components (rho, J^i)")
    F = build_em_form(E, B, chart)
    j_low = [
        add(*(mul(metric.g[m][v], J[v]) for v in range(4))) for m in range(4)
    ]
    j_form = Form(chart, 1, {(m,): j_low[m] for m in range(4)})
    r1, r2 = maxwell_residual(F, j_form, metric)

    tname = chart.names[0]
    space = chart.names[1:]
    e_sq = add(*(mul(E[i], E[i]) for i in range(3)))
    b_sq = add(*(mul(B[i], B[i]) for i in range(3)))
    u = mul(Rat(Fraction(1, 2)), add(e_sq, b_sq))
    poynting = (
        sub(mul(E[1], B[2]), mul(E[2], B[1])),
        sub(mul(E[2], B[0]), mul(E[0], B[2])),
        sub(mul(E[0], B[1]), mul(E[1], B[0])),
    )
    balance = add(
        diff(u, tname),
        *(diff(poynting[i], space[i]) for i in range(3)),
        *(mul(E[i], J[1 + i]) for i in range(3)),
    )

    report = VerificationReport(scenario=scenario)
    report.checks.append(
        _residual_check("dF = 0 (Faraday + no monopoles)",
                        _form_residuals(r1), policy)
    )
    report.checks.append(
        _residual_check("d*F = *J (Gauss + Ampere)",
                        _form_residuals(r2), policy)
    )
    report.checks.append(
        _residual_check("energy balance d_t u + div(ExB) + E.J = 0",
                        {"scalar": balance}, policy)
    )
    report.values["F"] = form_to_text(F)
    report.timing = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# Degree 1: Hamiltonian
# ---------------------------------------------------------------------------


def _canonical_chart(k: int) -> Chart:
    if k == 1:
        return Chart(("t", "q", "p"))
    return Chart(
        ("t",)
        + tuple(f"q{i + 1}" for i in range(k))
        + tuple(f"p{i + 1}" for i in range(k))
    )


def verify_hamiltonian(H: Expr | HamiltonianSystem, k: int = 1,
                       corrupted: bool = False,
                       policy: SamplingPolicy = DEFAULT_POLICY,
                       scenario: str = "hamiltonian") -> VerificationReport:
    """Flow-kernel check for the canonical 1-form, plus d(d theta) = 0
    and {H, H} = 0 sanity.

    With corrupted=True the momentum equations get the wrong sign -- the
    bundled falsification control.
    """
    t0 = time.perf_counter()
    if isinstance(H, HamiltonianSystem):
        sys = H.with_time()
    else:
        sys = HamiltonianSystem(_canonical_chart(k), H)
    theta = poincare_cartan(sys)
    report = VerificationReport(scenario=scenario)

    if corrupted:
        ordered = (
            [ONE]
            + [diff(sys.hamiltonian, p) for p in sys.p_names]
            + [diff(sys.hamiltonian, q) for q in sys.q_names]
        )
        X = VectorField(sys.chart, tuple(ordered))
        residual = interior_product(X, ext_d(theta))
        report.checks.append(
            _residual_check("flow field lies in ker(d theta)",
                            _form_residuals(residual), policy)
        )
    else:
        fc = hamilton_flow_check(sys, policy)
        report.checks.append(
            _residual_check("flow field lies in ker(d theta)",
                            _form_residuals(fc.residual), policy)
        )
    dd = ext_d(ext_d(theta))
    report.checks.append(
        _residual_check("d(d theta) = 0", _form_residuals(dd), policy)
    )
    hh = poisson_bracket(sys.hamiltonian, sys.hamiltonian, sys.chart)
    report.checks.append(
        _residual_check("{H, H} = 0", {"bracket": hh}, policy)
    )
    report.values["theta"] = form_to_text(theta)
    report.timing = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# Degree 3: Einstein
# ---------------------------------------------------------------------------


def verify_einstein(g: Metric, T=None, kappa_name: str = "kappa",
                    policy: SamplingPolicy = DEFAULT_POLICY,
                    scenario: str = "einstein") -> VerificationReport:
    """Einstein tensor report: Bianchi residual, vanishing torsion of the
    Levi-Civita connection, and optionally G - kappa*T."""
    t0 = time.perf_counter()
    report = VerificationReport(scenario=scenario)
    n = g.chart.dim
    G = einstein_tensor(g)

    bianchi = {g.chart.names[v]: e for v, e in enumerate(bianchi_residual(g))}
    report.checks.append(
        _residual_check("contracted Bianchi identity div G = 0",
                        bianchi, policy)
    )
    tors = torsion(christoffel(g))
    report.checks.append(
        _residual_check("torsion(christoffel(g)) = 0", tors.nonzero() or {},
                        policy)
    )
    sym_residuals = {
        (m, v): sub(G.comp(m, v), G.comp(v, m))
        for m in range(n)
        for v in range(m + 1, n)
    }
    report.checks.append(
        _residual_check("G symmetry", sym_residuals, policy)
    )
    if T is not None:
        comps = T.comps if hasattr(T, "comps") else T
        kappa = Sym(kappa_name)
        residuals = {
            (m, v): sub(G.comp(m, v), mul(kappa, comps[m][v]))
            for m in range(n)
            for v in range(n)
        }
        report.checks.append(
            _residual_check(f"G - {kappa_name}*T = 0", residuals, policy)
        )
    gn = G.nonzero()
    report.values["G_nonzero"] = (
        "; ".join(f"{idx}={to_text(c)}" for idx, c in gn.items()) or "0"
    )
    if n == 2:
        report.notes.append(
            "dim-2 identity: R_{mu nu} = (1/2) g_{mu nu} R makes G vanish"
        )
    report.timing = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# Correspondence table and bundled scenarios
# ---------------------------------------------------------------------------


class Verifiability(Enum):
    METADATA = "Metadata"
    VERIFIABLE = "Verifiable"


@dataclass(frozen=True)
class CorrespondenceEntry:
    degree: int
    family: str
    interaction: str
    verifiability: Verifiability
    verifier_id: str | None = None
    note: str = ""


VERIFIER_IDS = ("hamiltonian", "maxwell", "einstein")


def correspondence_table() -> list[CorrespondenceEntry]:
    """The four degree-k rows; k = 0 carries no computable content."""
    return [
        CorrespondenceEntry(
            0,
            "quantum-mechanics wave function (Dirac bra-/ket- vectors, "
            "Schrodinger equation)",
            "strong",
            Verifiability.METADATA,
            None,
            "operators correspond to closed forms of zero degree; "
            "metadata only, no formula to check",
        ),
        CorrespondenceEntry(
            1,
            "Hamiltonian formalism (action-functional equation)",
            "weak",
            Verifiability.VERIFIABLE,
            "hamiltonian",
        ),
        CorrespondenceEntry(
            2,
            "Maxwell equations (electromagnetic field tensor)",
            "electromagnetic",
            Verifiability.VERIFIABLE,
            "maxwell",
        ),
        CorrespondenceEntry(
            3,
            "Einstein equation (tensors derived from degree-3 "
            "conservation-law forms)",
            "gravitational",
            Verifiability.VERIFIABLE,
            "einstein",
        ),
    ]


def _maxwell_scenario(control: bool, policy: SamplingPolicy
                      ) -> VerificationReport:
    chart = Chart(("t", "x", "y", "z"))
    g = minkowski_metric(chart)
    zero = ZERO
    if control:
        E = (Sym("x"), zero, zero)
        B = (zero, zero, zero)
        name = "maxwell/static-E-gauss-violation"
    else:
        f = parse_expr("f(z - t)", chart)
        E = (f, zero, zero)
        B = (zero, f, zero)
        name = "maxwell/vacuum-plane-wave"
    return verify_maxwell(E, B, (zero, zero, zero, zero), g, policy, name)


def _hamiltonian_scenario(control: bool, policy: SamplingPolicy
                          ) -> VerificationReport:
    chart = _canonical_chart(1)
    H = parse_expr("(p^2 + q^2)/2", chart)
    name = (
        "hamiltonian/harmonic-oscillator-corrupted-flow"
        if control
        else "hamiltonian/harmonic-oscillator"
    )
    return verify_hamiltonian(H, 1, corrupted=control, policy=policy,
                              scenario=name)


def _einstein_scenario(control: bool, policy: SamplingPolicy
                       ) -> VerificationReport:
    chart = Chart(("t", "x", "y", "z"))
    g = minkowski_metric(chart)
    if control:
        T = [[ZERO] * 4 for _ in range(4)]
        T[0][0] = ONE
        return verify_einstein(g, tuple(tuple(r) for r in T), policy=policy,
                               scenario="einstein/minkowski-with-dust-T")
    zeroT = tuple(tuple(ZERO for _ in range(4)) for _ in range(4))
    return verify_einstein(g, zeroT, policy=policy,
                           scenario="einstein/minkowski-vacuum")


_SCENARIOS = {
    "maxwell": _maxwell_scenario,
    "hamiltonian": _hamiltonian_scenario,
    "einstein": _einstein_scenario,
}


def reference_report(verifier_id: str,
                     policy: SamplingPolicy = DEFAULT_POLICY
                     ) -> VerificationReport:
    """Bundled scenario expected to Pass for the named verifier."""
    return _SCENARIOS[verifier_id](False, policy)


def control_report(verifier_id: str,
                   policy: SamplingPolicy = DEFAULT_POLICY
                   ) -> VerificationReport:
    """Bundled falsification control expected to Fail."""
    return _SCENARIOS[verifier_id](True, policy)
