"""Byte-stable CSV / npz writers and readers."""

from __future__ import annotations

import csv
import io
import zipfile

import numpy as np

HASH_PREFIX = "# config_sha256="


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return "" if x is None else str(x)


def write_csv(path, header, rows, config_sha: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"{HASH_PREFIX}{config_sha}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def read_csv(path):
    """Return (config_sha or None, header, rows as lists of str)."""
    sha = None
    lines = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                if line.startswith(HASH_PREFIX):
                    sha = line[len(HASH_PREFIX):].strip()
                continue
            lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    return sha, header, list(reader)


def snapshot_columns(dim: int):
    return [f"x{k + 1}" for k in range(dim)] + [f"v{k + 1}" for k in range(dim)] + ["collision_count"]


def write_snapshot_csv(path, snap, config_sha: str):
    d = snap.dim
    cols = snapshot_columns(d)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"{HASH_PREFIX}{config_sha}\n")
        fh.write(",".join(cols) + "\n")
        data = np.column_stack([snap.positions, snap.velocities])
        buf = io.StringIO()
        for row, c in zip(data.tolist(), snap.collision_count.tolist()):
            buf.write(",".join(map(repr, row)))
            buf.write(f",{c}\n")
        fh.write(buf.getvalue())


def write_npz(path, arrays: dict):
    """Uncompressed .npz with fixed member timestamps, so equal arrays give equal bytes."""
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            info.external_attr = 0o644 << 16
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(arr), allow_pickle=False)
            zf.writestr(info, buf.getvalue())


def write_snapshot_npz(path, snap, config_sha: str):
    d = snap.dim
    cols = snapshot_columns(d)
    arrays = {c: snap.positions[:, k] for k, c in enumerate(cols[:d])}
    arrays.update({c: snap.velocities[:, k] for k, c in enumerate(cols[d : 2 * d])})
    arrays["collision_count"] = snap.collision_count
    arrays["time"] = np.array(snap.time)
    arrays["config_sha256"] = np.array(config_sha)
    write_npz(path, arrays)


def read_snapshot(path):
    """(positions, velocities, collision_count) from a snapshot CSV or npz."""
    if str(path).endswith(".npz"):
        with np.load(path, allow_pickle=False) as z:
            d = sum(1 for k in z.files if k.startswith("x") and k[1:].isdigit())
            X = np.column_stack([z[f"x{k + 1}"] for k in range(d)])
            V = np.column_stack([z[f"v{k + 1}"] for k in range(d)])
            return X, V, z["collision_count"]
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    d = (data.shape[1] - 1) // 2
    return data[:, :d], data[:, d : 2 * d], data[:, -1].astype(np.int64)
