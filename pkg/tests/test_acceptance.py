"""Acceptance criteria 1-14, one PASS/FAIL line each.

The suites are run once at full scale (default configuration and seed) and
cached; criterion 14 reruns every suite and compares the timing-free JSON.
Run ``python3 tests/test_acceptance.py`` to get the lines without pytest.
"""

import time

import numpy as np
import pytest

from undirectify import GraphDistribution, rng
from undirectify.exact import tv_distance, witness_events
from undirectify.suites import SUITES, run_suite

RESULTS: dict[int, tuple[bool, str]] = {}
_REPORTS: dict = {}


def _suite(name):
    if name not in _REPORTS:
        _REPORTS[name] = run_suite(name)
    return _REPORTS[name]


def _checks(name, *statistics):
    return [c for c in _suite(name).checks if c.statistic in statistics]


def _all_pass(checks) -> bool:
    return bool(checks) and all(c.passed for c in checks)


def _record(k: int, ok: bool, detail: str) -> None:
    RESULTS[k] = (ok, detail)
    print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def criterion_1():
    rep = _suite("gilbert-phi")
    tvs = _checks("gilbert-phi", "gilbert-identity-tv")
    worst = max(c.estimate for c in tvs)
    ok = _all_pass(tvs) and len(tvs) == 18 and rep.elapsed < 10
    return ok, f"18 (n,p) cells, max TV {worst:.1e}, {rep.elapsed:.1f}s"


def criterion_2():
    rep = _suite("iag-ieg-exact")
    tvs = _checks("iag-ieg-exact", "exact-iag-ieg-tv")
    xi = _checks("iag-ieg-exact", "exact-coupling-xi-zero")
    ok = _all_pass(tvs) and _all_pass(xi) and len(tvs) == 40 and rep.elapsed < 30
    return ok, (f"{len(tvs)} instances, max TV {max(c.estimate for c in tvs):.1e}, "
                f"max xi {max(c.estimate for c in xi):.0f} over {xi[0].replicates} reps each, {rep.elapsed:.1f}s")


def criterion_3():
    checks = _checks("gilbert-phi", "event-transfer") + _checks("iag-ieg-exact", "event-transfer")
    events = {c.details["event"] for c in checks}
    ok = _all_pass(checks) and len(events) == 8
    return ok, f"{len(checks)} (distribution, event) pairs over {len(events)} events, max gap {max(c.estimate for c in checks):.1e}"


def criterion_4():
    g = rng.generator(rng.split(rng.DEFAULT_SEED, 4))
    worst = 0.0
    for _ in range(100):
        a = GraphDistribution(3, "graph", g.dirichlet(np.ones(8)))
        b = GraphDistribution(3, "graph", g.dirichlet(np.ones(8)))
        worst = max(worst, abs(witness_events(a, b)[2] - tv_distance(a, b)))
    return worst <= 1e-12, f"100 Dirichlet pairs at n=3, max |gap - TV| {worst:.1e}"


def criterion_5():
    rep = _suite("iag-ieg-approx")
    checks = _checks("iag-ieg-approx", "xi-mean-vs-exact", "xi-mean-vs-bound", "xi2-zero")
    exact = checks[0].details
    ok = _all_pass(checks) and len(checks) == 3 and rep.elapsed < 60
    return ok, (f"mean xi {exact['mean']:.5f} vs {exact['exact']:.5f} (3SE {checks[0].slack:.5f}), "
                f"bound {checks[1].bound:.2f}, max xi2 {checks[2].estimate:.0f}, {rep.elapsed:.1f}s")


def criterion_6():
    checks = _checks("iag-ieg-approx", "chernoff-xi")
    ok = _all_pass(checks) and {c.details["omega"] for c in checks} == {1.0, 5.0}
    return ok, ", ".join(f"omega={c.details['omega']:g}: {c.estimate:.2e} <= {c.bound:.2e}+{c.slack:.1e}"
                         for c in checks) + f" over {checks[0].replicates} reps"


def criterion_7():
    checks = _checks("asrg-esrg", "coupled-graph-marginal", "coupled-digraph-marginal")
    ok = _all_pass(checks) and len(checks) == 2
    return ok, ", ".join(f"{c.statistic} p={c.estimate:.3f}" for c in checks) + f" over {checks[0].replicates} reps"


def criterion_8():
    hard = _checks("asrg-esrg", "psi-increments-binary", "psi-increments-rule-iii", "psi-final-equals-xi1")
    cells = _checks("asrg-esrg", "psi-increment-cell")
    ok = _all_pass(hard) and len(hard) == 3 and _all_pass(cells)
    return ok, f"increments binary and equal to rule III in every replicate, {len(cells)} cells within bound"


def criterion_9():
    checks = _checks("asrg-esrg", "psi-tail")
    ok = _all_pass(checks) and {c.details["r"] for c in checks} == {1.0, 2.0}
    return ok, ", ".join(f"r={c.details['r']:g}: {c.estimate:.4f} <= {c.bound:.4f}" for c in checks)


def criterion_10():
    drift = _checks("martingale", "supermartingale-drift")
    recompute = _checks("martingale", "recompute-consistency")
    ok = _all_pass(drift) and _all_pass(recompute)
    return ok, (f"drift {drift[0].estimate:.4f} <= 3SE {drift[0].slack:.4f}, "
                f"recompute max diff {recompute[0].estimate:.1e}")


def criterion_11():
    half = _checks("growth-bound", "headline-half-chain")
    m2f = _checks("growth-bound", "headline-m2-over-f")
    corrected = _checks("growth-bound", "corrected-chain", "corrected-2m2-over-f")
    bad = [c for c in half + m2f if not c.passed]
    ok = _all_pass(half) and _all_pass(m2f)
    return ok, (f"{len(bad)}/{len(half) + len(m2f)} stated-chain checks fail (e.g. m=1, f=100: 1/99 > 1/198); "
                f"corrected chain m^2/(f-m) <= 2m^2/f holds in {sum(c.passed for c in corrected)}/{len(corrected)}")


def criterion_12():
    kernel = _checks("cci-bounds", "kernel-bound")
    freq = _checks("cci-bounds", "mass-bound-frequency")
    cheb = _checks("cci-bounds", "chebyshev-not-a")
    four = _checks("cci-bounds", "mass-bound-on-a-factor-4")
    bad = [c.details["instance"] for c in freq if not c.passed]
    ok = _all_pass(kernel) and _all_pass(freq) and _all_pass(cheb)
    return ok, (f"kernel {sum(c.passed for c in kernel)}/100, frequency inclusion {100 - len(bad)}/100 "
                f"(fails at instances {bad}), Chebyshev {sum(c.passed for c in cheb)}/100, "
                f"4/(n q_min)^2 on A {sum(c.passed for c in four)}/100")


def criterion_13():
    checks = _checks("monotonicity", "lifted-monotonicity")
    ok = _all_pass(checks)
    return ok, f"{len(checks)} monotone events x {checks[0].replicates} subset pairs, violations {sum(c.estimate for c in checks):.0f}"


def criterion_14():
    start = time.perf_counter()
    differing = []
    for name in SUITES:
        first = _suite(name).to_json(timing=False)
        if run_suite(name).to_json(timing=False) != first:
            differing.append(name)
    return not differing, (f"{len(SUITES)} suites rerun at full scale with the default seed, "
                           f"differing: {differing or 'none'}, {time.perf_counter() - start:.0f}s")


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 15)}
# These two fail as stated; see the README section on known failures.
KNOWN_FAILURES = {
    11: "the stated growth chain drops a factor of 2 in the Bernoulli step",
    12: "the stated mass bound drops a factor of 4, so its event is not contained in not-A",
}


def _run(k: int) -> bool:
    ok, detail = CRITERIA[k]()
    _record(k, ok, detail)
    return ok


@pytest.mark.slow
@pytest.mark.parametrize("k", [pytest.param(k, marks=pytest.mark.xfail(strict=True, reason=KNOWN_FAILURES[k]))
                               if k in KNOWN_FAILURES else k for k in CRITERIA])
def test_criterion(k):
    assert _run(k), RESULTS[k][1]


if __name__ == "__main__":
    for k in CRITERIA:
        _run(k)
