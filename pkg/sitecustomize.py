"""Start coverage in every interpreter the test-suite spawns.

Trial workers of ``rtbounds.pool`` are separate processes; with the
repository root on PYTHONPATH this module is imported at their startup and
hooks them into the same coverage run.
"""
import os

if os.environ.get("COVERAGE_PROCESS_START"):
    import coverage

    coverage.process_startup()
