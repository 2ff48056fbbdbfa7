from __future__ import annotations

import sys
import warnings
from pathlib import Path

# the wire-contract suite and its golden files live with the engine package
PRIMARY_TESTS = Path(__file__).resolve().parents[2] / "tests"
sys.path.insert(0, str(PRIMARY_TESTS))

warnings.filterwarnings("ignore", message="Using `httpx` with `starlette.testclient`")
