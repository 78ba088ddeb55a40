"""Collector for the acceptance gate's one-line-per-criterion verdicts.

pytest captures stdout at the fd level, so the gate lines are buffered here
and replayed by the terminal-summary hook in conftest.py; they also print
immediately for -s runs and failure captures.
"""

lines: list[str] = []


def report(num: int, name: str, ok: bool, detail: str = ""):
    tail = f" ({detail})" if detail else ""
    line = f"ACCEPTANCE {num:2d} {name}: {'PASS' if ok else 'FAIL'}{tail}"
    lines.append(line)
    print(line, flush=True)
    assert ok, line
