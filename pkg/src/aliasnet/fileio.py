"""Binary and text file formats.

CKS  - complex grid: b"CKS1", u32 N, u32 M, u8 domain, then N*M (re, im)
       little-endian f32 pairs, row-major.
PGM  - 16-bit binary greyscale (P5, maxval 65535, big-endian samples).
AWT1 - weights: b"AWT1", u32 version, u32 #G_P, u32 #G_F, u32 #2D, then per
       module a u32 kind and its payload (layer dims as u32, values as
       little-endian f64, the step size last).
"""

import json
import struct
from pathlib import Path

import numpy as np

from .denoisers import TV1d, TV2d, Cnn1dWeights, Cnn2dWeights
from .solver import ModelBundle
from .tensor_domain import ComplexGrid, Domain

CKS_MAGIC = b"CKS1"
CKS_HEADER = 13
AWT_MAGIC = b"AWT1"
AWT_VERSION = 1

KIND_NONE, KIND_CNN1D, KIND_CNN2D, KIND_TV1D, KIND_TV2D = range(5)


class FormatError(ValueError):
    def __init__(self, msg, offset):
        super().__init__(f"{msg} (byte offset {offset})")
        self.offset = offset


# ---------------------------------------------------------------- CKS


def cks_bytes(grid):
    n, m = grid.shape
    head = CKS_MAGIC + struct.pack("<IIB", n, m, grid.domain.value)
    body = np.empty((n, m, 2), dtype="<f4")
    body[..., 0] = grid.data.real
    body[..., 1] = grid.data.imag
    return head + body.tobytes()


def parse_cks(buf):
    if len(buf) < 4 or buf[:4] != CKS_MAGIC:
        raise FormatError("bad CKS magic", 0)
    if len(buf) < CKS_HEADER:
        raise FormatError("truncated CKS header", len(buf))
    n, m, tag = struct.unpack_from("<IIB", buf, 4)
    try:
        domain = Domain(tag)
    except ValueError:
        raise FormatError(f"unknown domain tag {tag}", 12) from None
    need = CKS_HEADER + 8 * n * m
    if len(buf) != need:
        raise FormatError(f"expected {need} bytes for a {n}x{m} grid, got {len(buf)}", min(len(buf), need))
    vals = np.frombuffer(buf, dtype="<f4", offset=CKS_HEADER).reshape(n, m, 2).astype(np.float64)
    return ComplexGrid(vals[..., 0] + 1j * vals[..., 1], domain)


def write_cks(grid, path):
    Path(path).write_bytes(cks_bytes(grid))


def read_cks(path):
    return parse_cks(Path(path).read_bytes())


# ---------------------------------------------------------------- PGM


def pgm_bytes(grid, shift=False):
    mag = np.abs(grid.data if isinstance(grid, ComplexGrid) else np.asarray(grid))
    if shift:
        mag = np.fft.fftshift(mag)
    peak = mag.max()
    scaled = np.zeros(mag.shape) if peak == 0 else np.round(mag / peak * 65535.0)
    n, m = mag.shape
    return f"P5\n{m} {n}\n65535\n".encode() + scaled.astype(">u2").tobytes()


def export_pgm(grid, path, shift=False):
    Path(path).write_bytes(pgm_bytes(grid, shift))


def read_pgm(path):
    buf = Path(path).read_bytes()
    parts = buf.split(b"\n", 3)
    if parts[0] != b"P5":
        raise FormatError("not a binary PGM", 0)
    m, n = (int(t) for t in parts[1].split())
    return np.frombuffer(parts[3], dtype=">u2").reshape(n, m)


# ---------------------------------------------------------------- AWT1


def _u32(*vals):
    return struct.pack(f"<{len(vals)}I", *vals)


def _f64(arr):
    return np.asarray(arr, dtype="<f8").tobytes()


def _module_bytes(mod):
    if mod is None:
        return _u32(KIND_NONE)
    if isinstance(mod, (Cnn1dWeights, Cnn2dWeights)):
        kind = KIND_CNN1D if isinstance(mod, Cnn1dWeights) else KIND_CNN2D
        out = _u32(kind, len(mod.kernels))
        for k in mod.kernels:
            out += _u32(k.ndim, *k.shape)
        out += _f64(mod.leaky_slope)
        for k, b in zip(mod.kernels, mod.biases):
            out += _f64(k.ravel()) + _f64(b)
        if kind == KIND_CNN1D:
            out += _f64(mod.rho)
        return out
    if isinstance(mod, TV1d):
        return _u32(KIND_TV1D) + _f64([mod.lam, mod.rho])
    if isinstance(mod, TV2d):
        return _u32(KIND_TV2D, mod.iterations) + _f64(mod.lam)
    raise TypeError(f"cannot serialise {type(mod).__name__}")


def weights_bytes(model):
    out = AWT_MAGIC + _u32(AWT_VERSION, len(model.gp), len(model.gf), len(model.d2))
    for mod in (*model.gp, *model.gf, *model.d2):
        out += _module_bytes(mod)
    return out


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated weight file, wanted {n} bytes", self.pos)
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, count=1):
        vals = struct.unpack(f"<{count}I", self.take(4 * count))
        return vals if count > 1 else vals[0]

    def f64(self, count):
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)


def _read_module(r):
    at = r.pos
    kind = r.u32()
    if kind == KIND_NONE:
        return None
    if kind in (KIND_CNN1D, KIND_CNN2D):
        layers = r.u32()
        shapes = []
        for _ in range(layers):
            ndim = r.u32()
            shapes.append(tuple(int(d) for d in np.atleast_1d(r.u32(ndim))))
        slope = float(r.f64(1)[0])
        ks, bs = [], []
        for s in shapes:
            ks.append(r.f64(int(np.prod(s))).reshape(s))
            bs.append(r.f64(s[0]))
        if kind == KIND_CNN1D:
            return Cnn1dWeights(ks, bs, np.array(r.f64(1)[0]), slope)
        return Cnn2dWeights(ks, bs, slope)
    if kind == KIND_TV1D:
        lam, rho = r.f64(2)
        return TV1d(float(lam), float(rho))
    if kind == KIND_TV2D:
        iters = r.u32()
        return TV2d(float(r.f64(1)[0]), int(iters))
    raise FormatError(f"unknown module kind {kind}", at)


def parse_weights(buf):
    if buf[:4] != AWT_MAGIC:
        raise FormatError("bad AWT magic", 0)
    r = _Reader(buf)
    r.pos = 4
    version = r.u32()
    if version != AWT_VERSION:
        raise FormatError(f"unsupported weight file version {version}", 4)
    n_gp, n_gf, n_d2 = r.u32(3)
    gp = [_read_module(r) for _ in range(n_gp)]
    gf = [_read_module(r) for _ in range(n_gf)]
    d2 = [_read_module(r) for _ in range(n_d2)]
    if r.pos != len(buf):
        raise FormatError("trailing bytes after last module", r.pos)
    return ModelBundle(gp, gf, d2)


def save_weights(model, path):
    Path(path).write_bytes(weights_bytes(model))


def load_weights(path):
    return parse_weights(Path(path).read_bytes())


# ---------------------------------------------------------------- checkpoints and manifests


def save_checkpoint(model, path, config, epoch, metrics):
    """Weights plus a JSON sidecar ``<path>.json``."""
    path = Path(path)
    save_weights(model, path)
    sidecar = {"config": config, "epoch": epoch, "metrics": metrics}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))


def load_checkpoint(path):
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    return load_weights(path), meta


def write_manifest(entries, path):
    """Dataset manifest: ``{"items": [{"path": ..., "split": ...}, ...]}``."""
    Path(path).write_text(json.dumps({"items": entries}, indent=2))


def read_manifest(path):
    path = Path(path)
    data = json.loads(path.read_text())
    items = data.get("items")
    if not isinstance(items, list):
        raise ValueError(f"{path}: manifest needs an 'items' list")
    out = []
    for it in items:
        p = Path(it["path"])
        if not p.is_absolute():
            p = path.parent / p
        out.append((p, it["split"]))
    return out
