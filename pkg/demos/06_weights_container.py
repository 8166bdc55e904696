"""The TKWT weights container: bit-exact storage for kernels and factors.

The byte layout is fixed and documented (magic, version, JSON manifest,
then named tensors with dtype tags). Factors of a decomposed layer are
stored as `<layer>.u_in`, `<layer>.core`, `<layer>.u_out` and reassembled
with rank validation on load.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from tuckerforge import (
    ConvKernel,
    Container,
    TensorEntry,
    assemble_factors,
    factor_entries,
    hosvd_partial,
    read_container,
    write_container,
)

rng = np.random.default_rng(7)
workdir = Path(tempfile.mkdtemp())

kernel = ConvKernel(rng.standard_normal((16, 8, 3, 3, 3)))
factors = hosvd_partial(kernel, 6, 4)

entries = [TensorEntry("enc1.kernel", kernel.weights)]
entries += factor_entries("enc1", factors)
manifest = json.dumps({"layers": {"enc1": {"t_o": 6, "t_i": 4}}})
path = workdir / "model.tkwt"
write_container(path, Container(entries=entries, manifest=manifest))

blob = path.read_bytes()
print(f"wrote {path.name}: {len(blob)} bytes")
print(f"magic {blob[:4]!r}, version {int.from_bytes(blob[4:8], 'little')}, "
      f"manifest {int.from_bytes(blob[8:12], 'little')} bytes")

back = read_container(path)
print(f"\ntensors: {back.names()}")
rebuilt = assemble_factors(back, "enc1")
print(f"factors reassembled: core {rebuilt.core.shape}, "
      f"bit-identical: {np.array_equal(rebuilt.core, factors.core)}")

# f32 tagging narrows the payload; lossy narrowing is flagged in the manifest
lossy = Container(
    entries=[TensorEntry("w", np.array([1.0 / 3.0, 0.5]), dtype="f32")],
    manifest="{}",
)
lossy_path = workdir / "narrowed.tkwt"
write_container(lossy_path, lossy)
narrowed = read_container(lossy_path)
print(f"\nf32 round trip of 1/3: {narrowed.get('w').data[0]!r}")
print(f"manifest flag: {narrowed.manifest_obj()['narrowed_tensors']}")
