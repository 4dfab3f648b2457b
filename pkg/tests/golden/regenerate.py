"""Rewrite the golden outputs for the reference parameters.

    python tests/golden/regenerate.py
"""

import json
import shutil
import tempfile
from pathlib import Path

from agrifin import BACKEND
from agrifin.cli import main

HERE = Path(__file__).parent
RUNS = {
    "solve": ["solve"],
    "fig2": ["figure", "2"],
    "fig5": ["figure", "5"],
}
FILES = {
    "solve": ["schedule_rational.csv", "metrics.csv"],
    "fig2": ["fig2.csv"],
    "fig5": ["fig5.csv"],
}


def generate(out: Path):
    for name, argv in RUNS.items():
        with tempfile.TemporaryDirectory() as tmp:
            code = main([*argv, "--out", tmp])
            if code != 0:
                raise SystemExit(f"{name} exited with {code}")
            for f in FILES[name]:
                shutil.copy(Path(tmp) / f, out / f)


if __name__ == "__main__":
    generate(HERE)
    (HERE / "meta.json").write_text(json.dumps({"backend": BACKEND}, indent=2) + "\n")
    print("golden files written with backend", BACKEND)
