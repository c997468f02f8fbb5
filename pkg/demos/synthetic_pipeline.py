"""The full experiment through the command-line entry point.

Writes a synthetic corpus, then prepares splits, trains every model family,
tunes the default mixtures and evaluates on the test split.  Pass a
directory to keep the results; otherwise a temporary one is used.

    python demos/synthetic_pipeline.py [workdir]
"""

import sys
import tempfile
import time
from pathlib import Path

from nextword import cli

root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="nextword-"))
corpus = root / "corpus.txt"

start = time.perf_counter()
cli.main(["synth", "--out", str(corpus), "--sequences", "5000", "--seed", "0"])
cli.main(["pipeline", "--corpus", str(corpus), "-w", str(root / "work"), "--seed", "0", "-q"])
print(f"\npipeline finished in {time.perf_counter() - start:.0f} s\n")
cli.main(["report", "-w", str(root / "work")])
