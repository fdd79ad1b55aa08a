"""Report and export writers: CSV, JSON, OFF meshes, MatrixMarket operators.

Every writer goes through :func:`atomic_write`, so readers never observe a
partially written file.
"""
import io as _io
import json
import math
import os
import tempfile

import numpy as np
import scipy.io


def fmt(value):
    """17 significant digits, '.' decimal separator; empty string for None/NaN."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    return format(value, ".17g")


def atomic_write(path, data):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": "\n", "encoding": "utf-8"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def config_header(config):
    return "".join(f"# {k}={fmt(v) if isinstance(v, float) else v}\n" for k, v in sorted(config.items()))


def csv_text(columns, rows, config=None):
    """CSV with '#'-prefixed provenance lines, LF endings."""
    lines = [config_header(config) if config else ""]
    lines.append(",".join(columns) + "\n")
    for row in rows:
        lines.append(",".join(fmt(row.get(c)) for c in columns) + "\n")
    return "".join(lines)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if math.isnan(obj) else float(obj)
    return obj


def json_text(payload):
    return json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_csv(path, columns, rows, config=None):
    atomic_write(path, csv_text(columns, rows, config))


def write_json(path, payload):
    atomic_write(path, json_text(payload))


def off_text(mesh):
    """OFF text; torus vertices are written with z = 0."""
    v = mesh.vertices
    if v.shape[1] == 2:
        v = np.c_[v, np.zeros(len(v))]
    out = ["OFF\n", f"{mesh.n_vertices} {mesh.n_triangles} 0\n"]
    out.extend(" ".join(fmt(c) for c in p) + "\n" for p in v)
    out.extend(f"3 {a} {b} {c}\n" for a, b, c in mesh.triangles)
    return "".join(out)


def read_off(text):
    tokens = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if tokens[0] != ["OFF"]:
        raise ValueError("missing OFF header")
    nv, nf, _ = map(int, tokens[1])
    verts = np.array([[float(c) for c in t] for t in tokens[2:2 + nv]])
    faces = np.array([[int(c) for c in t[1:4]] for t in tokens[2 + nv:2 + nv + nf]])
    return verts, faces


def write_off(path, mesh):
    atomic_write(path, off_text(mesh))


def density_csv_text(field, config=None):
    rows = [{"vertex": i, "h": h, "rho": r} for i, (h, r) in enumerate(zip(field.h, field.rho))]
    return csv_text(("vertex", "h", "rho"), rows, config)


def write_density_csv(path, field, config=None):
    atomic_write(path, density_csv_text(field, config))


def matrix_market_bytes(matrix, comment=""):
    buf = _io.BytesIO()
    scipy.io.mmwrite(buf, matrix.tocoo(), comment=comment, field="real", precision=17, symmetry="general")
    return buf.getvalue()


def write_matrix_market(path, matrix, comment=""):
    atomic_write(path, matrix_market_bytes(matrix, comment))
