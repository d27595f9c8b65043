"""Named checks over a metric pair, shared by the gallery self-test and the CLI.

Each check evaluates one identity and returns a Verdict; the anchor string
states the identity being tested.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .chart import TensorField, riemann, scalar_curvature
from .expr import Verdict, VerdictKind, combine
from . import projective as P


@dataclass(eq=False)
class PairContext:
    pair: P.MetricPair
    endomorphism: TensorField | None = None
    _solution: P.SolutionData | None = field(default=None, repr=False)

    @property
    def solution(self) -> P.SolutionData:
        if self._solution is None:
            self._solution = P.build_solution(self.pair)
        return self._solution


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    run: Callable[[PairContext, int], Verdict]
    needs_endomorphism: bool = False


def _tensor(fn):
    return lambda ctx, seed: fn(ctx).verdict(seed)


def _scalar(fn):
    return lambda ctx, seed: ctx.pair.chart.is_zero(fn(ctx), seed=seed)


def _endomorphism(ctx: PairContext) -> TensorField:
    return (ctx.solution.A - ctx.endomorphism).canonical()


def _round_trip(ctx: PairContext) -> TensorField:
    rebuilt = P.reconstruct_metric(ctx.pair.g, ctx.solution.A)
    return (rebuilt.as_tensor() - ctx.pair.gbar.as_tensor()).canonical()


CHECKS: dict[str, Check] = {
    c.name: c
    for c in [
        Check(
            "LC",
            "Levi-Civita relation gbar_{ij,k} = 2 gbar_ij phi_k + gbar_ik phi_j + gbar_jk phi_i",
            _tensor(lambda c: P.geodesic_equivalence_residual(c.pair)),
        ),
        Check(
            "sinjukov",
            "Sinjukov equation a_{ij,k} = lambda_i g_jk + lambda_j g_ik",
            _tensor(lambda c: P.sinjukov_residual(c.pair.g, c.solution)),
        ),
        Check(
            "integrability",
            "a_is R^s_jkl + a_sj R^s_ikl = lambda_{l,i} g_jk + lambda_{l,j} g_ik - lambda_{k,i} g_jl - lambda_{k,j} g_il",
            _tensor(lambda c: P.integrability_residual(c.pair.g, c.solution)),
        ),
        Check(
            "ricci-relation",
            "Rbar_ij = R_ij - (n-1)(phi_{i,j} - phi_i phi_j)",
            _tensor(lambda c: P.ricci_relation_residual(c.pair)),
        ),
        Check(
            "stress",
            "equality of Einstein tensors R_ij - R/2 g_ij",
            _tensor(lambda c: P.stress_residual(c.pair)),
        ),
        Check(
            "stress-phi-form",
            "phi_{i,j} - phi_i phi_j = R/(2(n-1)) g_ij - Rbar/(2(n-1)) gbar_ij",
            _tensor(lambda c: P.stress_residual_phi_form(c.pair)),
        ),
        Check(
            "vb",
            "lambda_{i,j} = mu g_ij + B a_ij with B = -R/(2(n-1))",
            lambda c, seed: P.check_vb(c.pair, seed),
        ),
        Check(
            "x-identity",
            "a_si X^s_jkl + a_sj X^s_ikl = 0 for the trace-adjusted curvature X",
            lambda c, seed: P.check_x_identity(c.pair.g, c.solution, seed),
        ),
        Check(
            "affine",
            "phi_i = 0 (affine equivalence)",
            _tensor(lambda c: P.phi_of_pair(c.pair)[1]),
        ),
        Check(
            "lambda-zero",
            "lambda_i = 0",
            _tensor(lambda c: c.solution.lam_i),
        ),
        Check(
            "round-trip",
            "gbar recovered from (g, A) by g(A^{-1} ., .)/|det A|",
            _tensor(_round_trip),
        ),
        Check(
            "endomorphism",
            "A computed from the pair equals the given endomorphism",
            _tensor(_endomorphism),
            needs_endomorphism=True,
        ),
        Check(
            "riemann-equal",
            "R^i_jkl(g) = R^i_jkl(gbar)",
            _tensor(lambda c: (riemann(c.pair.g) - riemann(c.pair.gbar)).canonical()),
        ),
        Check("scalar-g", "R(g) = 0", _scalar(lambda c: scalar_curvature(c.pair.g))),
        Check("scalar-gbar", "R(gbar) = 0", _scalar(lambda c: scalar_curvature(c.pair.gbar))),
        Check("flat-g", "R^i_jkl(g) = 0", _tensor(lambda c: riemann(c.pair.g))),
        Check("flat-gbar", "R^i_jkl(gbar) = 0", _tensor(lambda c: riemann(c.pair.gbar))),
    ]
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    anchor: str
    verdict: Verdict
    expected: VerdictKind | None

    @property
    def ok(self) -> bool:
        return self.expected is None or self.verdict.kind == self.expected


def run_checks(
    ctx: PairContext,
    names,
    expected: dict[str, VerdictKind] | None = None,
    seed: int = 0,
) -> list[CheckResult]:
    expected = expected or {}
    out = []
    for name in names:
        if name not in CHECKS:
            raise KeyError(f"unknown check {name!r}; choose from {sorted(CHECKS)}")
        check = CHECKS[name]
        if check.needs_endomorphism and ctx.endomorphism is None:
            raise ValueError(f"check {name!r} needs an endomorphism block")
        out.append(CheckResult(name, check.anchor, check.run(ctx, seed), expected.get(name)))
    return out


def overall(results: list[CheckResult]) -> Verdict:
    return combine(((k,), r.verdict) for k, r in enumerate(results))


__all__ = ["CHECKS", "Check", "CheckResult", "PairContext", "overall", "run_checks"]
