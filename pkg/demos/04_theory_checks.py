"""Run the executable theory checks and print their report rows.

Each suite turns one guarantee into a measured number with an explicit
threshold. The full set also ships as CLI commands, e.g.
`frtci check lemma1 --out results/`. Two fast suites here; the Monte Carlo
size suites (lemma1-3) take seconds to tens of seconds each.
"""
from frtci.validation import run_suite

for suite in ("theorem1", "prop1"):
    print(f"--- {suite}")
    for row in run_suite(suite):
        status = "pass" if row.passed else "FAIL"
        print(f"[{status}] {row.metric}: {row.value:g} {row.comparison} "
              f"{row.threshold:g}")
