def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion after the run."""
    rows = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" in nodeid and "::" in nodeid:
                rows.append((nodeid.split("::")[-1], status))
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status in sorted(set(rows)):
        mark = "PASS" if status == "passed" else "FAIL"
        terminalreporter.write_line(f"[{mark}] {name}")
