import sys
from pathlib import Path

# allow running the suite from a fresh checkout without an editable install
try:
    import tuckerforge  # noqa: F401
except ImportError:
    sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
