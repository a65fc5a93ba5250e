"""Rewrite src/superarc/data/MANIFEST.txt (sha256 of every shipped data file)."""
import hashlib
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "src" / "superarc" / "data"

lines = [
    f"{hashlib.sha256(p.read_bytes()).hexdigest()}  {p.name}"
    for p in sorted(DATA.iterdir())
    if p.is_file() and p.name != "MANIFEST.txt"
]
(DATA / "MANIFEST.txt").write_text("\n".join(lines) + "\n")
print("\n".join(lines))
