"""Seeded verification suites and defect probes.

Every suite draws trial ``t`` from ``numpy.random.default_rng([seed, t])``,
so a failure is replayed exactly from the (seed, trial) pair it records.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CongruenceViolation, CorankMismatch, IwasawaError
from .fplin import FpMatrix, fixed_space_dim, toeplitz_block
from .modules import (
    PresentedModule,
    char_invariants,
    coinvariant_exponent,
    conjugate,
    default_window,
    direct_sum,
    elementary,
    extension,
    growth_trace,
    ideal_syzygy,
    invariants_via_growth,
    mod_p_isomorphic_perturbation,
    random_distinguished,
    rank_estimate,
    same_mod_p,
    torsion_part,
    twist_module,
)
from .ring import RingParams

DEFAULT_PARAMS = RingParams(3, 6, 32)
TWIST_WINDOW = range(-5, 6)


@dataclass
class SuiteReport:
    suite: str
    seed: int
    trials: int
    params: RingParams
    passes: int = 0
    failures: list[dict] = field(default_factory=list)
    defect_table: list[dict] = field(default_factory=list)
    observations: list[dict] = field(default_factory=list)
    runtime: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def record(self, trial: int, checks: dict[str, bool], data: dict) -> None:
        failed = sorted(name for name, good in checks.items() if not good)
        if failed:
            self.failures.append({"trial": trial, "seed": [self.seed, trial], "failed": failed, "data": data})
        else:
            self.passes += 1

    def to_dict(self, include_runtime: bool = False) -> dict:
        out = {
            "suite": self.suite,
            "seed": self.seed,
            "trials": self.trials,
            "params": {"p": self.params.p, "N": self.params.N, "M": self.params.M, "u0": self.params.u0},
            "passes": self.passes,
            "failures": sorted(self.failures, key=lambda f: (f["seed"], f["failed"])),
            "defect_table": self.defect_table,
            "observations": self.observations,
            "ok": self.ok,
        }
        if include_runtime:
            out["runtime_s"] = round(self.runtime, 3)
        return out

    def to_json(self, include_runtime: bool = False) -> str:
        return json.dumps(self.to_dict(include_runtime), sort_keys=True, indent=2)


def _rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def _timed(fn: Callable[..., SuiteReport]) -> Callable[..., SuiteReport]:
    def wrapper(*args, **kwargs) -> SuiteReport:
        t0 = time.perf_counter()
        report = fn(*args, **kwargs)
        report.runtime = time.perf_counter() - t0
        return report

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def random_elementary(params: RingParams, rng: np.random.Generator, *, r_max=2, s_max=2, t_max=3,
                      a_max=2, d_max=8, torsion=False, nonzero=True) -> PresentedModule:
    r = 0 if torsion else int(rng.integers(0, r_max + 1))
    s = int(rng.integers(0, s_max + 1))
    t = int(rng.integers(0, t_max + 1))
    if nonzero and r + s + t == 0:
        t = 1
    a = [int(x) for x in rng.integers(1, min(a_max, params.N - 1) + 1, size=s)]
    F = [random_distinguished(params, rng, int(rng.integers(1, d_max + 1))) for _ in range(t)]
    return elementary(params, r, a, F)


def drop_free_generators(M: PresentedModule) -> tuple[PresentedModule, int]:
    """Remove generators that occur in no relation; each splits off a copy of Lambda."""
    keep = [i for i in range(M.g) if any(not rel[i].is_zero() for rel in M.relations)]
    rels = tuple(tuple(rel[i] for i in keep) for rel in M.relations)
    return PresentedModule(M.params, len(keep), rels), M.g - len(keep)


# -- additivity in short exact sequences ---------------------------------------

@_timed
def verify_additivity(trials: int, seed: int, params: RingParams = DEFAULT_PARAMS) -> SuiteReport:
    """mu and lambda are additive along 0 -> A -> B -> C -> 0 with A torsion."""
    report = SuiteReport("additivity", seed, trials, params)
    for trial in range(trials):
        rng = _rng(seed, trial)
        # total mu stays below N so det(B) is nonzero at working precision
        A = random_elementary(params, rng, s_max=1, t_max=2, d_max=4, torsion=True)
        C = random_elementary(params, rng, r_max=2, s_max=1, t_max=2, d_max=4)
        B = extension(A, C, rng)
        sA, sC = A.structure, C.structure
        checks: dict[str, bool] = {}
        data: dict = {"A": _shape(sA), "C": _shape(sC)}
        try:
            B_tor, free = drop_free_generators(B)
            C_tor, _ = drop_free_generators(C)
            cA, cB, cC = char_invariants(A), char_invariants(B_tor), char_invariants(C_tor)
            data["char"] = {"A": [cA.mu, cA.lam], "B": [cB.mu, cB.lam], "C": [cC.mu, cC.lam]}
            checks["char_mu_additive"] = cA.mu + cC.mu == cB.mu
            checks["char_lambda_additive"] = cA.lam + cC.lam == cB.lam
            checks["char_matches_structure"] = (cA.mu, cA.lam, cC.mu, cC.lam) == (sA.mu, sA.lam, sC.mu, sC.lam)
            checks["free_part_split"] = free == sC.rank
            gB = invariants_via_growth(B)
            data["growth_B"] = gB.to_dict()
            checks["growth_rank"] = gB.rank == sC.rank
            checks["growth_mu_additive"] = gB.mu == sA.mu + sC.mu
            if sA.mu == 0 and sC.mu == 0:
                checks["growth_lambda_additive"] = gB.lam == sA.lam + sC.lam
        except IwasawaError as exc:
            checks["no_error"] = False
            data["error"] = f"{type(exc).__name__}: {exc}"
        report.record(trial, checks, data)
    return report


def _shape(s) -> dict:
    return {"r": s.rank, "a": list(s.mu_exponents), "d": list(s.degrees)}


# -- growth laws for elementary modules ---------------------------------------

@_timed
def verify_growth(trials: int, seed: int, params: RingParams = DEFAULT_PARAMS,
                  n_max: int | None = None) -> SuiteReport:
    """Exact law e_n = (r+s)p^n + sum min(d_j, p^n), slope r+s, mu verdict s == 0."""
    report = SuiteReport("growth", seed, trials, params)
    p = params.p
    n_max = default_window(p) if n_max is None else n_max
    for trial in range(trials):
        rng = _rng(seed, trial)
        E = random_elementary(params, rng, r_max=2, s_max=2, t_max=3, d_max=8, nonzero=False)
        M = conjugate(E, rng) if rng.integers(0, 2) else E
        st = E.structure
        trace = growth_trace(M, n_max)
        expected = [st.exact_growth(p, n) for n in range(n_max + 1)]
        r_hat = rank_estimate(M)
        checks = {
            "exact_law": trace.exponents == expected,
            "slope_is_r_plus_s": trace.slope == st.rank + st.s,
            "rank_estimate": r_hat == st.rank,
            "mu_verdict": (trace.slope == r_hat) == (st.s == 0),
            "bounded_defect": all(0 <= e - (st.rank + st.s) * p**n <= st.lam for n, e in trace.entries),
        }
        if st.s == 0:
            checks["intercept_is_lambda"] = trace.intercept == st.lam
        report.record(trial, checks, {"structure": _shape(st), "trace": trace.exponents, "expected": expected})
    return report


# -- twist probe ----------------------------------------------------------------

@dataclass(frozen=True)
class ProbeInstance:
    """M inside N with finite cokernel C = Lambda/(p^a, X^b) (or C = 0).

    N is Lambda (when C != 0) plus an elementary module ``rest``.
    """

    label: str
    M: PresentedModule
    rest: PresentedModule
    finite: tuple[int, int] | None

    @property
    def rank(self) -> int:
        return self.rest.structure.rank + (1 if self.finite else 0)

    @property
    def lam(self) -> int:
        return self.rest.structure.lam


def mandatory_instance(params: RingParams) -> ProbeInstance:
    return ProbeInstance("ideal(p,X)", ideal_syzygy(params, 1, 1), elementary(params, 0), (1, 1))


def _gamma_n_operator(params: RingParams, i: int, n: int, size: int, sign: int = 1) -> FpMatrix:
    """Action of gamma^(p^n) on F_p[X]/(X^size) twisted by chi^i, reduced mod p."""
    p = params.p
    g = params.series([1, 1]) * pow(params.u0, sign * i, params.q)
    s = g ** (p**n)
    return FpMatrix(p, toeplitz_block(np.asarray(s.mod_p()), p, size))


def _hypotheses(inst: ProbeInstance, i: int, n: int) -> dict:
    """F_p fixed-space dimensions behind the vanishing hypotheses.

    Free summands of N/p are F_p[[X]], on which gamma_n - 1 = X^(p^n) (mod p)
    is injective, so only finite pieces contribute.
    """
    params = inst.M.params
    rest_fixed = sum(
        fixed_space_dim(_gamma_n_operator(params, i, n, d)) for d in inst.rest.structure.degrees
    )
    if inst.finite is None:
        return {"C_mod_p": 0, "C_p_torsion": 0, "C_over_C_p": 0, "M_mod_p_over_C_p": rest_fixed}
    a, b = inst.finite
    fixed_b = fixed_space_dim(_gamma_n_operator(params, i, n, b))
    return {
        "C_mod_p": fixed_b,
        "C_p_torsion": fixed_b,
        "C_over_C_p": fixed_b if a >= 2 else 0,
        "M_mod_p_over_C_p": rest_fixed,
    }


def _finite_balance(inst: ProbeInstance, n: int) -> tuple[int, int]:
    """(e((C[p])_{Gamma_n}), e((C/p)_{Gamma_n})); both pieces are F_p[X]/X^b."""
    if inst.finite is None:
        return 0, 0
    _, b = inst.finite
    T = _gamma_n_operator(inst.M.params, 0, n, b)
    coinv = T.rows - FpMatrix(T.p, T.entries - np.eye(T.rows, dtype=np.int64)).rank()
    return coinv, coinv


def probe_instances(params: RingParams, trials: int, seed: int) -> list[ProbeInstance]:
    out = [mandatory_instance(params)]
    for trial in range(trials):
        rng = _rng(seed, trial)
        rest = random_elementary(params, rng, r_max=1, s_max=0, t_max=2, d_max=6, nonzero=False)
        if trial % 3 == 2:
            out.append(ProbeInstance(f"elementary#{trial}", conjugate(rest, rng), rest, None))
            continue
        a = int(rng.integers(1, 3))
        b = int(rng.integers(1, 4))
        M = direct_sum(ideal_syzygy(params, a, b), rest)
        out.append(ProbeInstance(f"ideal(p^{a},X^{b})+elem#{trial}", M, rest, (a, b)))
    return out


@_timed
def probe_twist(trials: int, seed: int, params: RingParams = DEFAULT_PARAMS,
                n_max: int | None = None, sign: int = 1) -> SuiteReport:
    """Measure defect(n, i) = e((M(i)/p)_{Gamma_n}) - r p^n - lambda(M).

    The probe only measures; the three self-checks (C = 0 gives no defect,
    the mandatory instance has defect 1, defects do not depend on i) are
    properties of the computation, not of the proposition being probed.
    """
    report = SuiteReport("twist-probe", seed, trials, params)
    p = params.p
    n_max = default_window(p) if n_max is None else n_max
    ever_hold = False
    for idx, inst in enumerate(probe_instances(params, trials, seed)):
        degrees = inst.rest.structure.degrees
        n0 = next(n for n in range(n_max + 1) if p**n >= max(degrees, default=0))
        tor = torsion_part(inst.rest)
        lam_char = char_invariants(tor).lam if tor.g else 0
        checks = {"lambda_char_matches": lam_char == inst.lam}
        all_defects = []
        for n in range(n0, n_max + 1):
            defects = []
            for i in TWIST_WINDOW:
                e = coinvariant_exponent(twist_module(inst.M, i, sign), n)
                defects.append(e - inst.rank * p**n - lam_char)
            hyp = _hypotheses(inst, TWIST_WINDOW[0], n)
            hyp_all = [_hypotheses(inst, i, n) for i in TWIST_WINDOW]
            holds = [all(v == 0 for v in h.values()) for h in hyp_all]
            ever_hold |= any(holds)
            cp, cmodp = _finite_balance(inst, n)
            c_fixed = hyp["C_p_torsion"]
            report.defect_table.append({
                "instance": inst.label,
                "n": n,
                "r": inst.rank,
                "lambda": lam_char,
                "defects_by_i": defects,
                "i_independent": len(set(defects)) == 1,
                "vanishing_hypotheses_hold": any(holds),
                "fixed_dims": hyp,
                "e_C_p_coinv": cp,
                "e_C_mod_p_coinv": cmodp,
                "defect_equals_C_p_fixed_dim": set(defects) == {c_fixed},
            })
            all_defects.extend(defects)
            checks[f"i_independent_n{n}"] = len(set(defects)) == 1
            checks[f"finite_balance_n{n}"] = cp == cmodp
        if inst.finite is None:
            checks["zero_defect_when_C_zero"] = set(all_defects) == {0}
        if idx == 0:
            checks["mandatory_rank_1"] = rank_estimate(inst.M) == 1
            checks["mandatory_defect_1"] = set(all_defects) == {1}
        report.record(idx, checks, {"instance": inst.label})
    report.observations.append({
        "claim": "twisted coinvariants recover r*p^n + lambda",
        "reproduced_on_mandatory_instance": all(
            set(row["defects_by_i"]) == {0} for row in report.defect_table if row["instance"] == "ideal(p,X)"
        ),
        "vanishing_hypotheses_ever_hold_with_C_nonzero": any(
            row["vanishing_hypotheses_hold"] for row in report.defect_table
            if not row["instance"].startswith("elementary")
        ),
        "vanishing_hypotheses_ever_hold": ever_hold,
    })
    return report


# -- congruence transfer --------------------------------------------------------

@_timed
def verify_congruence_transfer(trials: int, seed: int, params: RingParams = DEFAULT_PARAMS) -> SuiteReport:
    """Mod-p congruent square presentations share mu-vanishing and, if mu = 0, lambda."""
    report = SuiteReport("congruence", seed, trials, params)
    for trial in range(trials):
        rng = _rng(seed, trial)
        A = conjugate(random_elementary(params, rng, s_max=2, t_max=3, d_max=6, torsion=True), rng)
        for attempt in range(8):
            B = mod_p_isomorphic_perturbation(A, [seed, trial, attempt])
            if not char_invariants_or_none(B) is None:
                break
        else:
            report.record(trial, {"found_equal_rank_partner": False}, {})
            continue
        cA, cB = char_invariants(A), char_invariants(B)
        checks = {
            "mod_p_identical": same_mod_p(A, B),
            "mu_vanishing_equivalent": (cA.mu == 0) == (cB.mu == 0),
        }
        if cA.mu == 0:
            checks["lambda_equal"] = cA.lam == cB.lam
        free = elementary(params, 1)
        FA, FB = direct_sum(free, A), direct_sum(free, B)
        tA, tB = growth_trace(FA), growth_trace(FB)
        checks["rank1_traces_equal"] = tA.entries == tB.entries
        if cA.mu == 0:
            gA, gB = invariants_via_growth(FA), invariants_via_growth(FB)
            checks["rank1_lambda_equal"] = gA.lam == gB.lam == cA.lam
        report.record(trial, checks, {"A": [cA.mu, cA.lam], "B": [cB.mu, cB.lam], "attempt": attempt})
    return report


def char_invariants_or_none(M: PresentedModule):
    try:
        return char_invariants(M)
    except IwasawaError:
        return None


# -- synthetic Selmer skeletons ----------------------------------------------

@dataclass(frozen=True)
class SelmerSkeleton:
    """Non-primitive dual Selmer module plus the local data dropped from it.

    ``local_lambdas`` holds lambda(H_v) for v in Sigma_0; each H_v is
    cotorsion with mu = 0, so dropping the conditions changes lambda by
    delta = sum(local_lambdas) and leaves mu alone.
    """

    label: str
    S_nonprimitive: PresentedModule
    local_lambdas: dict[str, int]
    expected_corank: int
    ck_lambda: int | None = None

    def __post_init__(self):
        if self.expected_corank not in (0, 1):
            raise ValueError("expected_corank must be 0 or 1")
        if any((not isinstance(v, int)) or v < 0 for v in self.local_lambdas.values()):
            raise ValueError("local lambdas must be non-negative integers")
        if self.ck_lambda is not None and self.ck_lambda < 0:
            raise ValueError("ck_lambda must be non-negative")

    @property
    def delta(self) -> int:
        return sum(self.local_lambdas.values())


def delta_identities(lam_S_f: int, delta_f: int, lam_S_g: int, delta_g: int,
                     ck_f: int | None = None, ck_g: int | None = None) -> dict:
    """Pure bookkeeping from lambda_L + delta = lambda(S) and lambda_L = lambda + lambda(ck).

    Reports the difference of lambda_L values against both orientations of
    the comparison formula; only the orientation implied by those two
    identities is expected to hold in general.
    """
    lam_L_f = lam_S_f - delta_f
    lam_L_g = lam_S_g - delta_g
    diff = lam_L_f - lam_L_g
    out = {
        "lambda_S": [lam_S_f, lam_S_g],
        "delta": [delta_f, delta_g],
        "lambda_L": [lam_L_f, lam_L_g],
        "difference": diff,
        "proof_orientation": delta_g - delta_f,
        "stated_orientation": delta_f - delta_g,
        "proof_orientation_holds": diff == delta_g - delta_f,
        "stated_orientation_holds": diff == delta_f - delta_g,
        "nonnegative": lam_L_f >= 0 and lam_L_g >= 0,
    }
    if ck_f is not None and ck_g is not None:
        lam_f, lam_g = lam_L_f - ck_f, lam_L_g - ck_g
        gdiff = lam_f - lam_g
        out.update({
            "ck_lambda": [ck_f, ck_g],
            "lambda_ck_adjusted": [lam_f, lam_g],
            "ck_adjusted_difference": gdiff,
            "ck_adjusted_proof_orientation": (delta_g + ck_g) - (delta_f + ck_f),
            "ck_adjusted_stated_orientation": (delta_f + ck_f) - (delta_g + ck_g),
            "ck_adjusted_proof_orientation_holds": gdiff == (delta_g + ck_g) - (delta_f + ck_f),
            "ck_adjusted_stated_orientation_holds": gdiff == (delta_f + ck_f) - (delta_g + ck_g),
            "ck_adjusted_nonnegative": lam_f >= 0 and lam_g >= 0,
        })
    return out


def skeleton_lambda(sk: SelmerSkeleton) -> tuple[int | None, dict]:
    """lambda(S) from the growth route at the declared corank, with the report."""
    rep = invariants_via_growth(sk.S_nonprimitive)
    info = rep.to_dict()
    if rep.rank != sk.expected_corank or not rep.mu_vanishes:
        return None, info
    return rep.lam, info


def assemble_delta(f: SelmerSkeleton, g: SelmerSkeleton, report: SuiteReport | None = None,
                   trial: int = 0) -> SuiteReport:
    if f.expected_corank != g.expected_corank:
        raise CorankMismatch(f"{f.expected_corank} != {g.expected_corank}")
    if not same_mod_p(f.S_nonprimitive, g.S_nonprimitive):
        raise CongruenceViolation(f"{f.label} and {g.label} differ mod p")
    if report is None:
        report = SuiteReport("delta", 0, 1, f.S_nonprimitive.params)
    lam_f, info_f = skeleton_lambda(f)
    lam_g, info_g = skeleton_lambda(g)
    # dropping Sigma_0 conditions adds cotorsion mu = 0 pieces: mu unchanged
    mu_verdict = {
        "mu_S_vanishes": [info_f["mu_vanishes"], info_g["mu_vanishes"]],
        "mu_Sel_equals_mu_S": True,
    }
    data = {"f": f.label, "g": g.label, "mu_transfer": mu_verdict}
    checks = {
        "corank_f": info_f["rank"] == f.expected_corank,
        "corank_g": info_g["rank"] == g.expected_corank,
        "mu_vanishing_transfers": info_f["mu_vanishes"] == info_g["mu_vanishes"],
    }
    if lam_f is None or lam_g is None:
        data["skipped"] = "mu != 0 or corank mismatch: lambda comparison not applicable"
        report.observations.append({"trial": trial, "skipped": data["skipped"]})
        report.record(trial, checks, data)
        return report
    ident = delta_identities(lam_f, f.delta, lam_g, g.delta, f.ck_lambda, g.ck_lambda)
    data["identities"] = ident
    checks["lambda_S_equal"] = lam_f == lam_g
    checks["proof_orientation"] = ident["proof_orientation_holds"]
    checks["lambda_L_nonnegative"] = ident["nonnegative"]
    if "ck_adjusted_difference" in ident:
        checks["ck_adjusted_balance"] = ident["ck_adjusted_proof_orientation_holds"]
        checks["ck_adjusted_nonnegative"] = ident["ck_adjusted_nonnegative"]
    report.record(trial, checks, data)
    if not ident["stated_orientation_holds"]:
        report.observations.append({
            "trial": trial,
            "sign_discrepancy": "difference matches delta_g - delta_f, not delta_f - delta_g",
            "difference": ident["difference"],
            "stated_orientation": ident["stated_orientation"],
        })
    return report


def random_skeleton_pair(params: RingParams, rng: np.random.Generator, trial_seed) -> tuple[SelmerSkeleton, SelmerSkeleton]:
    corank = int(rng.integers(0, 2))
    tors = random_elementary(params, rng, s_max=0, t_max=2, d_max=5, torsion=True, nonzero=False)
    S_f = conjugate(direct_sum(elementary(params, corank), tors), rng)
    S_g = mod_p_isomorphic_perturbation(S_f, trial_seed)
    lam_S = tors.structure.lam

    def local(prefix: str) -> dict[str, int]:
        k = int(rng.integers(0, 3))
        vals = [int(x) for x in rng.integers(0, 3, size=k)]
        while sum(vals) > lam_S and vals:
            vals[vals.index(max(vals))] -= 1
        return {f"{prefix}{j}": v for j, v in enumerate(vals)}

    loc_f, loc_g = local("v"), local("v")
    ck_f = int(rng.integers(0, lam_S - sum(loc_f.values()) + 1))
    ck_g = int(rng.integers(0, lam_S - sum(loc_g.values()) + 1))
    f = SelmerSkeleton("f", S_f, loc_f, corank, ck_f)
    g = SelmerSkeleton("g", S_g, loc_g, corank, ck_g)
    return f, g


@_timed
def verify_delta(trials: int, seed: int, params: RingParams = DEFAULT_PARAMS) -> SuiteReport:
    report = SuiteReport("delta", seed, trials, params)
    for trial in range(trials):
        rng = _rng(seed, trial)
        f, g = random_skeleton_pair(params, rng, [seed, trial, 1])
        assemble_delta(f, g, report, trial)
    return report


SUITES: dict[str, Callable[..., SuiteReport]] = {
    "additivity": verify_additivity,
    "growth": verify_growth,
    "twist-probe": probe_twist,
    "congruence": verify_congruence_transfer,
    "delta": verify_delta,
}

# probe suites report measurements; they never fail the run
PROBE_SUITES = {"twist-probe"}


def run_suite(name: str, trials: int, seed: int, params: RingParams = DEFAULT_PARAMS) -> SuiteReport:
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}") from None
    return fn(trials, seed, params)
