"""Run the shipped scenario suite and write its reports."""

import sys
import tempfile

from dimlab.verify import run_suite, summary_text, write_reports

reports = run_suite("default")
print(summary_text(reports))
with tempfile.TemporaryDirectory() as out:
    write_reports(reports, out)
    print("reports written to", out, "(removed on exit)")
sys.exit(0 if all(r.ok for r in reports) else 1)
