"""The whole pipeline through the command line interface.

Builds a random-weight container for a small network, then drives the CLI
programmatically: compress at DF 0.5, verify factorized-vs-direct outputs
on seeded inputs, print the cost report, and prune a copy for comparison.
Every step works identically from a shell, e.g.

    tuckerforge compress model.tkwt small.tkwt --df 0.5
    tuckerforge verify model.tkwt small.tkwt --seed 7
"""

import tempfile
from pathlib import Path

from tuckerforge.cli import main
from tuckerforge.container import write_container
from tuckerforge.conv import ConvSpec
from tuckerforge.cost import ArchDesc, LayerDesc
from tuckerforge.zoo import random_weights_container

workdir = Path(tempfile.mkdtemp())
model = workdir / "model.tkwt"

arch = ArchDesc((
    LayerDesc("enc1", "conv3d", 8, 16, (3, 3, 3),
              ConvSpec((1, 1, 1), (1, 1, 1)), (12, 12, 12)),
    LayerDesc("enc2", "conv3d", 16, 32, (3, 3, 3),
              ConvSpec((2, 2, 2), (1, 1, 1)), (12, 12, 12)),
    LayerDesc("head", "pointwise", 32, 4, (1, 1, 1), ConvSpec(), (6, 6, 6)),
), model="demo-net")
write_container(model, random_weights_container(arch, seed=42))
print(f"fixture container: {model}\n")

compressed = workdir / "compressed.tkwt"
print("$ tuckerforge compress model.tkwt compressed.tkwt --df 0.5 --min-rank 4")
main(["compress", str(model), str(compressed), "--df", "0.5", "--min-rank", "4"])

print("\n$ tuckerforge verify model.tkwt compressed.tkwt --seed 7")
main(["verify", str(model), str(compressed), "--seed", "7"])

print("\n$ tuckerforge analyze model.tkwt --df 0.5 --min-rank 4")
main(["analyze", str(model), "--df", "0.5", "--min-rank", "4"])

pruned = workdir / "pruned.tkwt"
print("$ tuckerforge prune model.tkwt pruned.tkwt --fraction 0.5")
main(["prune", str(model), str(pruned), "--fraction", "0.5"])

grid = workdir / "grid.csv"
print("\n$ tuckerforge ev-grid model.tkwt --layer enc2 --grid-to 4,8,16,32 --grid-ti 2,4,8,16")
main(["ev-grid", str(model), "--layer", "enc2",
      "--grid-to", "4,8,16,32", "--grid-ti", "2,4,8,16", "-o", str(grid)])
print(grid.read_text())
