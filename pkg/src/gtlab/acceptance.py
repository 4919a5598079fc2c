"""The acceptance suite: ten quantitative criteria over the whole stack.

Each criterion is a deterministic check with pinned grids, seeds, trial
counts, and tolerances; together they gate a release.  They are exposed
both to pytest (tests/test_acceptance.py) and to the CLI ``accept``
command, which prints one PASS/FAIL line per criterion.

Criterion 7 asserts that the dilution channel needs at least as many
tests as the additive channel at equal noise parameter.  The exact
mutual-information formulas (and the simulator) say otherwise at the
pinned parameter points: at p = 1/K the dilution channel thins effective
participation but keeps test outcomes near-balanced, while additive
false alarms at the same rate destroy most of the information carried
by negative tests.  The criterion is kept as stated and is expected
to fail; see the README for the analysis.
"""

from __future__ import annotations

import math
import os
import tempfile
import time
from dataclasses import dataclass

from .bounds import (
    achievable_tests,
    fano_lower_bound,
    gallager_e0,
    mi_bruteforce,
    mi_closed_form,
    pei_upper_bound,
)
from .model import NoiseModel, generate_codebook
from .montecarlo import (
    empirical_pei_profile,
    estimate_average_error,
    estimate_partial_error,
    estimate_worstcase_error,
    find_minimal_t,
)

# shared grids
_MI_KS = range(2, 11)


def _channel_grid() -> list[NoiseModel]:
    return (
        [NoiseModel.noise_free()]
        + [NoiseModel.additive(q) for q in (0.1, 0.3, 0.7)]
        + [NoiseModel.dilution(u) for u in (0.1, 0.3, 0.7)]
    )


def _p_values(k: int) -> tuple[float, ...]:
    return (0.1, 1.0 / k, 0.5)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  criterion {self.number:2d}  {self.name}: {self.detail}"


def _grid_for_target(bound: float) -> list[int]:
    """Probe grid bracketing the empirical minimal T, scaled off the analytic bound."""
    factors = (1 / 3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0)
    return sorted({max(1, int(round(bound * f))) for f in factors})


def _minimal_t(n_items: int, k: int, noise: NoiseModel, target: float,
               trials: int, seed: int) -> int:
    p = 1.0 / k
    bound = achievable_tests(n_items, k, p, noise).bound_tests
    result = find_minimal_t(
        n_items, k, p, noise, target, trials, _grid_for_target(bound), seed, refine_to=2
    )
    if not result.attained:
        raise AssertionError(
            f"target {target} unattained for N={n_items} K={k} {noise.describe()}"
        )
    return result.t_star


def criterion_1() -> tuple[bool, str]:
    """Closed-form mutual information matches the brute-force oracle to 1e-9."""
    worst = 0.0
    count = 0
    for k in _MI_KS:
        for i in range(1, k + 1):
            for p in _p_values(k):
                for channel in _channel_grid():
                    gap = abs(mi_closed_form(k, i, p, channel) - mi_bruteforce(k, i, p, channel))
                    worst = max(worst, gap)
                    count += 1
    return worst <= 1e-9, f"worst |closed - oracle| = {worst:.2e} over {count} configs (tol 1e-9)"


def criterion_2() -> tuple[bool, str]:
    """Finite-difference slope of E0 at rho=0 matches the mutual information."""
    delta = 1e-5
    worst = 0.0
    count = 0
    for k in range(2, 9):
        for i in range(1, k + 1):
            for p in _p_values(k):
                for channel in _channel_grid():
                    mi = mi_closed_form(k, i, p, channel)
                    slope = gallager_e0(k, i, p, channel, delta) / delta
                    worst = max(worst, abs(slope - mi) / mi)
                    count += 1
    return worst <= 1e-3, f"worst relative error = {worst:.2e} over {count} configs (tol 1e-3)"


def criterion_3() -> tuple[bool, str]:
    """Empirical per-overlap error rates stay below the analytic upper bound."""
    n_items, k, p, trials, seed = 30, 3, 1.0 / 3.0, 5000, 42
    violations = []
    worst_margin = -math.inf
    for channel in (NoiseModel.noise_free(), NoiseModel.additive(0.1)):
        for n_tests in (50, 100, 150):
            profile = empirical_pei_profile(n_items, k, n_tests, p, channel, trials, seed)
            for i, p_hat in profile:
                if i == 0:
                    continue
                bound = pei_upper_bound(n_items, k, i, n_tests, p, channel)
                sigma = math.sqrt(p_hat * (1.0 - p_hat) / trials)
                margin = p_hat - (bound + 3.0 * sigma)
                worst_margin = max(worst_margin, margin)
                if margin > 0:
                    violations.append((channel.describe(), n_tests, i, p_hat, bound))
    detail = f"worst p_hat - (bound + 3 sigma) = {worst_margin:.2e}; violations: {len(violations)}"
    return not violations, detail


def criterion_4() -> tuple[bool, str]:
    """Fano lower bound never exceeds the achievable bound on the grid."""
    violations = 0
    count = 0
    configs = [(30, k) for k in (2, 3)] + [(n, k) for n in (100, 1000) for k in _MI_KS]
    for n_items, k in configs:
        for p in _p_values(k):
            for channel in _channel_grid():
                fano = fano_lower_bound(n_items, k, p, channel).bound_tests
                achievable = achievable_tests(n_items, k, p, channel).bound_tests
                count += 1
                violations += not (fano <= achievable)
    return violations == 0, f"{violations} violations over {count} configs"


def criterion_5() -> tuple[bool, str]:
    """Noise-free minimal T grows like K log N."""
    noise = NoiseModel.noise_free()
    trials, target = 2000, 0.1
    t_64 = _minimal_t(64, 2, noise, target, trials, seed=701)
    t_256 = _minimal_t(256, 2, noise, target, trials, seed=702)
    t_k4 = _minimal_t(64, 4, noise, target, trials, seed=703)
    ratio = t_256 / t_64
    ok = 1.0 <= ratio <= 1.9 and t_k4 > t_64
    return ok, (
        f"t*(256,2)={t_256}, t*(64,2)={t_64}, ratio={ratio:.3f} (need [1.0,1.9]); "
        f"t*(64,4)={t_k4} > t*(64,2): {t_k4 > t_64}"
    )


def criterion_6() -> tuple[bool, str]:
    """Additive noise degrades the minimal T like 1/(1-q)."""
    trials, target = 2000, 0.1
    t_stars = [
        _minimal_t(64, 2, NoiseModel.additive(q), target, trials, seed=801)
        for q in (0.0, 0.25, 0.5)
    ]
    ratio = t_stars[2] / t_stars[0]
    nondecreasing = t_stars[0] <= t_stars[1] <= t_stars[2]
    ok = nondecreasing and 1.3 <= ratio <= 3.5
    return ok, (
        f"t* over q in (0, 0.25, 0.5) = {t_stars}, nondecreasing: {nondecreasing}, "
        f"t*(0.5)/t*(0) = {ratio:.3f} (need [1.3,3.5])"
    )


def criterion_7() -> tuple[bool, str]:
    """Dilution at parameter v needs at least as many tests as additive at v.

    Kept as stated even though the exact information quantities order
    the other way at these parameter points, so this criterion is
    expected to fail (see module docstring)."""
    trials, target = 2000, 0.1
    empirical_parts = []
    empirical_ok = True
    for v in (0.25, 0.5):
        t_dil = _minimal_t(64, 2, NoiseModel.dilution(v), target, trials, seed=901)
        t_add = _minimal_t(64, 2, NoiseModel.additive(v), target, trials, seed=901)
        empirical_ok &= t_dil >= t_add
        empirical_parts.append(f"v={v}: t*(dil)={t_dil} vs t*(add)={t_add}")

    analytic_violations = 0
    analytic_count = 0
    configs = [(1000, k) for k in (5, 10)] + [(64, 2)]
    for n_items, k in configs:
        for v in (0.1, 0.25, 0.3, 0.5):
            dil = achievable_tests(n_items, k, 1.0 / k, NoiseModel.dilution(v)).bound_tests
            add = achievable_tests(n_items, k, 1.0 / k, NoiseModel.additive(v)).bound_tests
            analytic_count += 1
            analytic_violations += not (dil >= add)
    ok = empirical_ok and analytic_violations == 0
    return ok, (
        "; ".join(empirical_parts)
        + f"; analytic achievable(dil) >= achievable(add): "
        f"{analytic_count - analytic_violations}/{analytic_count} configs"
    )


def criterion_8() -> tuple[bool, str]:
    """Partial reconstruction errs strictly less than exact recovery."""
    n_items, k, p = 24, 4, 0.25
    noise = NoiseModel.noise_free()
    trials, seed = 1500, 11

    # locate a T with average error near 0.3 (monotone bisection, then local scan)
    lo, hi = 1, 200
    t_mid = None
    for _ in range(12):
        mid = (lo + hi) // 2
        p_hat = estimate_average_error(n_items, k, mid, p, noise, trials, seed).p_hat
        if 0.25 <= p_hat <= 0.35:
            t_mid = mid
            break
        if p_hat > 0.3:
            lo = mid
        else:
            hi = mid
    if t_mid is None:
        return False, "no T with average error in [0.25, 0.35] found"
    average = estimate_average_error(n_items, k, t_mid, p, noise, trials, seed).p_hat
    partials = [
        estimate_partial_error(n_items, k, t_mid, p, noise, alpha, trials, seed).p_hat
        for alpha in (0.25, 0.5, 0.75)
    ]
    nonincreasing = partials[0] >= partials[1] >= partials[2]
    ok = partials[1] < average and nonincreasing
    return ok, (
        f"T={t_mid}: average={average:.3f}, partial(0.25,0.5,0.75)="
        f"{[round(v, 4) for v in partials]}, partial(0.5) < average: {partials[1] < average}, "
        f"nonincreasing: {nonincreasing}"
    )


def criterion_9() -> tuple[bool, str]:
    """Worst-case error over all truth sets is exact and two-valued."""
    noise = NoiseModel.noise_free()
    exact = True
    zero_fraction = 0
    for seed in range(20):
        codebook = generate_codebook(10, 96, 0.5, seed)
        estimate = estimate_worstcase_error(codebook, 2, noise, 1)
        exact &= estimate.p_hat in (0.0, 1.0)
        zero_fraction += estimate.p_hat == 0.0
    return exact, (
        f"lambda_max in {{0,1}} for all seeds: {exact}; "
        f"perfect codebooks: {zero_fraction}/20 seeds (reported, not asserted)"
    )


def criterion_10() -> tuple[bool, str]:
    """CSV output is byte-identical across reruns and thread counts."""
    import contextlib
    import io

    from .cli import main as cli_main

    with tempfile.TemporaryDirectory() as tmp:
        outputs = []
        for name, threads in (("a", 1), ("b", 1), ("c", 4)):
            path = os.path.join(tmp, f"{name}.csv")
            with contextlib.redirect_stdout(io.StringIO()):
                code = cli_main([
                    "estimate", "--model", "additive", "--q", "0.2",
                    "-N", "40", "-K", "2", "-T", "120",
                    "--trials", "2000", "--seed", "1", "--threads", str(threads),
                    "--out", path,
                ])
            if code != 0:
                return False, f"estimate exited {code}"
            with open(path, "rb") as handle:
                outputs.append(handle.read())
    identical = outputs[0] == outputs[1] == outputs[2]
    return identical, f"3 runs (threads 1,1,4) byte-identical: {identical}"


CRITERIA = [
    (1, "oracle equivalence", criterion_1),
    (2, "exponent slope identity", criterion_2),
    (3, "per-overlap bound dominance", criterion_3),
    (4, "fano below achievable", criterion_4),
    (5, "noise-free scaling", criterion_5),
    (6, "additive degradation", criterion_6),
    (7, "dilution vs additive severity", criterion_7),
    (8, "partial reconstruction", criterion_8),
    (9, "worst-case exactness", criterion_9),
    (10, "determinism", criterion_10),
]


def run_criterion(number: int) -> CriterionResult:
    for num, name, check in CRITERIA:
        if num == number:
            start = time.time()
            passed, detail = check()
            return CriterionResult(num, name, passed, detail, time.time() - start)
    raise ValueError(f"no acceptance criterion numbered {number}")


def run_criteria(numbers=None, log=None) -> list[CriterionResult]:
    selected = [num for num, _, _ in CRITERIA] if numbers is None else list(numbers)
    results = []
    for number in selected:
        result = run_criterion(number)
        results.append(result)
        if log is not None:
            log(result.line())
    return results
