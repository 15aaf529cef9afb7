"""A small seeded campaign followed by a scaling fit and a CSV export.

Records land in a JSON-lines file one trial at a time, so rerunning the
script only fills in missing trials. The same steps are available as
``unsampling run``, ``unsampling fit`` and ``unsampling export``.
"""

import tempfile
from pathlib import Path

from unsampling.cli import export, fit_scaling, run_campaign
from unsampling.protocols import VquConfig

work = Path(tempfile.mkdtemp(prefix="unsampling-demo-"))
records = work / "records.jsonl"
config = VquConfig()

list(run_campaign("optical-direct", [1, 2], 4, 2024, config, records))
list(run_campaign("optical-compressed", [3], 4, 2024, config, records))

report = fit_scaling(records, ["linear", "quadratic", "exponential"])
print(report.table())
export(records, "csv", work / "export.csv")
print(f"records and CSV in {work}")
