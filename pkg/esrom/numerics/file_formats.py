"""
This code contains readers and writers for the binary snapshot and manifold files and the CSV artifacts.

Snapshot file: "ESRM", u32 version, u32 n_vars, u32 n_cells, u32 n_s, f64 a, f64 b, then n_s snapshots of N_h
little-endian f64 each (one snapshot contiguous), then n_s f64 times.

Manifold file: "ESMF", u32 version, u32 kind tag, u32 N_h, u32 r, then the coefficient blocks of the manifold in
declaration order as little-endian f64 in C order.
"""

import json
import logging
import struct

import numpy as np

from esrom.numerics.fom import SnapshotSet
from esrom.numerics.grid import Grid
from esrom.numerics.manifold import LinearManifold, QuadraticManifold, RationalQuadraticManifold

logger = logging.getLogger("esrom")

SNAPSHOT_MAGIC = b"ESRM"
MANIFOLD_MAGIC = b"ESMF"
FORMAT_VERSION = 1
SNAPSHOT_HEADER = struct.Struct("<4sIIIIdd")
MANIFOLD_HEADER = struct.Struct("<4sIIII")
MANIFOLD_TAGS = {"linear": 0, "quadratic": 1, "rational": 2}
LE_F64 = np.dtype("<f8")


def write_snapshots(path, snapshots):
    grid = snapshots.grid
    with open(path, "wb") as f:
        f.write(SNAPSHOT_HEADER.pack(SNAPSHOT_MAGIC, FORMAT_VERSION, grid.n_vars, grid.n_cells, snapshots.n_s,
                                     grid.domain[0], grid.domain[1]))
        f.write(np.ascontiguousarray(snapshots.data.T, dtype=LE_F64).tobytes())
        f.write(np.ascontiguousarray(snapshots.times, dtype=LE_F64).tobytes())
    logger.debug("Wrote %i snapshots to %s" % (snapshots.n_s, path))


def read_snapshots(path, model_name="", model_params=None):
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < SNAPSHOT_HEADER.size:
        raise OSError("Snapshot file %s is truncated" % path)
    magic, version, n_vars, n_cells, n_s, a, b = SNAPSHOT_HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC or version != FORMAT_VERSION:
        raise OSError("%s is not a version %i snapshot file" % (path, FORMAT_VERSION))
    n_dof = n_vars * n_cells
    expected = SNAPSHOT_HEADER.size + 8 * (n_s * n_dof + n_s)
    if len(raw) != expected:
        raise OSError("Snapshot file %s has %i bytes, expected %i" % (path, len(raw), expected))
    values = np.frombuffer(raw, dtype=LE_F64, offset=SNAPSHOT_HEADER.size)
    data = values[:n_s * n_dof].reshape(n_s, n_dof).T.astype(float)
    times = values[n_s * n_dof:].astype(float)
    grid = Grid(n_cells, (a, b), n_vars=n_vars)
    return SnapshotSet(data, times, grid, model_name=model_name, model_params=model_params)


def _manifold_blocks(manifold):
    if manifold.kind == "linear":
        return [manifold.basis, manifold.shift]
    if manifold.kind == "quadratic":
        return [manifold.basis, manifold.quadratic, manifold.shift]
    if manifold.kind == "rational":
        return [manifold.quadratic, manifold.linear, manifold.offset, manifold.cholesky]
    raise ValueError("Manifold kind %s cannot be serialized" % manifold.kind)


def write_manifold(path, manifold):
    blocks = _manifold_blocks(manifold)
    with open(path, "wb") as f:
        f.write(MANIFOLD_HEADER.pack(MANIFOLD_MAGIC, FORMAT_VERSION, MANIFOLD_TAGS[manifold.kind], manifold.n_dof,
                                     manifold.dim))
        for block in blocks:
            f.write(np.ascontiguousarray(block, dtype=LE_F64).tobytes())


def read_manifold(path):
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < MANIFOLD_HEADER.size:
        raise OSError("Manifold file %s is truncated" % path)
    magic, version, tag, n_dof, r = MANIFOLD_HEADER.unpack_from(raw)
    if magic != MANIFOLD_MAGIC or version != FORMAT_VERSION:
        raise OSError("%s is not a version %i manifold file" % (path, FORMAT_VERSION))
    kinds = {v: k for k, v in MANIFOLD_TAGS.items()}
    if tag not in kinds:
        raise OSError("Unknown manifold kind tag %i in %s" % (tag, path))
    kind = kinds[tag]
    shapes = {
        "linear": [(n_dof, r), (n_dof,)],
        "quadratic": [(n_dof, r), (n_dof, r * (r + 1) // 2), (n_dof,)],
        "rational": [(n_dof, r, r), (n_dof, r), (n_dof,), (n_dof, r, r)],
    }[kind]
    values = np.frombuffer(raw, dtype=LE_F64, offset=MANIFOLD_HEADER.size)
    expected = sum(int(np.prod(s)) for s in shapes)
    if values.size != expected:
        raise OSError("Manifold file %s holds %i values, expected %i" % (path, values.size, expected))
    blocks = []
    offset = 0
    for shape in shapes:
        size = int(np.prod(shape))
        blocks.append(values[offset:offset + size].reshape(shape).astype(float))
        offset += size
    if kind == "linear":
        return LinearManifold(blocks[0], shift=blocks[1])
    if kind == "quadratic":
        return QuadraticManifold(blocks[0], blocks[1], shift=blocks[2])
    return RationalQuadraticManifold(*blocks)


def write_csv(frame, path):
    """Deterministic CSV with round-trip float precision; missing values are written as empty fields"""
    frame.to_csv(path, index=False, float_format="%.17g", na_rep="")


def write_json(obj, path):
    with open(path, "w") as f:
        json.dump(obj, f, indent=4, sort_keys=True)
        f.write("\n")


def read_json(path):
    with open(path, "r") as f:
        return json.load(f)
