"""The command line tool on a reducible matrix.

Two 2-cycles joined by a one-way arc, plus a sink node.  Each strongly
connected block is balanced on its own.  The sink cannot be balanced.
"""

# %%
import json
import pathlib
import tempfile

from osborne.cli import main

tmp = pathlib.Path(tempfile.mkdtemp())
(tmp / "r.mtx").write_text(
    "%%MatrixMarket matrix coordinate real general\n"
    "5 5 6\n1 2 1\n2 1 3\n3 4 2\n4 3 5\n2 3 7\n4 5 1\n"
)
code = main(["--input", str(tmp / "r.mtx"), "--epsilon", "0.01",
             "--report", str(tmp / "report.json"), "--trace", str(tmp / "trace.csv")])

# %%
rep = json.loads((tmp / "report.json").read_text())
print("exit code", code, "termination", rep["termination"])
for comp in rep["components"]:
    print(" ", comp["indices"], comp["status"])
print((tmp / "trace.csv").read_text())
