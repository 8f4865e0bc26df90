"""
Driving everything from the command line
========================================

A config file fixes the run; ``solve`` writes a JSON archive, and ``export``,
``field`` and ``check`` read it back.  The same calls work as
``spiralsheet <command>`` in a shell.
"""

from pathlib import Path

from spiralsheet.cli import main

out = Path("demo_output/cli")
out.mkdir(parents=True, exist_ok=True)
cfg = out / "run.ini"
cfg.write_text("[params]\nm = 64\n\n[outputs]\ncurve_formats = svg\ncurve_times = 0, 1\n")

archive = out / "solution.json"
print("solve  ->", main(["solve", "--config", str(cfg), "--out", str(out)]))
print("export ->", main(["export", "--archive", str(archive), "--t", "2", "--format", "csv"]))
print("field  ->", main(["field", "--archive", str(archive), "--resolution", "32"]))
print("check  ->", main(["check", "--suite", "geometry", "--archive", str(archive)]))
