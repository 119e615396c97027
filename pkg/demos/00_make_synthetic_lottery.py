"""Regenerate the bundled synthetic lottery survey fixture.

The repository ships data/lottery_synthetic.csv so every demo and test runs
offline. This script rebuilds it bit-for-bit from its pinned seed; run it
after changing the generator in frtci.datasets, never to "refresh" data.
"""
from pathlib import Path

from frtci.datasets import write_lottery_survey_csv

ROOT = Path(__file__).resolve().parents[1]

target = ROOT / "data" / "lottery_synthetic.csv"
total = write_lottery_survey_csv(target)
print(f"wrote {total} rows (10 deliberately incomplete) to {target}")
