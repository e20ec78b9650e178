"""Binary network records.

Layout (all integers and floats little-endian)::

    magic        11 bytes   b"PHYPLAN-NET"
    version      u32        currently 1
    activation   u8 length + ascii   hidden activation tag, e.g. "tanh"
    n_sizes      u32
    sizes        n_sizes * u32
    params       n_params * f64     layer-major; W_k row-major then b_k
    n_named      u32
    named        n_named * (u16 length + utf-8 name, f64 value)

The named block carries learned physical parameters.
"""

import io
import struct

import numpy as np

from phyplan.numerics.network import DenseNetwork, n_params

MAGIC = b"PHYPLAN-NET"
VERSION = 1


class FormatError(ValueError):
    """Malformed or unsupported serialized record."""


def _write_str(buf, text, width="<B"):
    raw = text.encode("utf-8")
    buf.write(struct.pack(width, len(raw)))
    buf.write(raw)


def _read(buf, fmt):
    size = struct.calcsize(fmt)
    raw = buf.read(size)
    if len(raw) != size:
        raise FormatError("truncated record")
    return struct.unpack(fmt, raw)


def _read_str(buf, width="<B"):
    (n,) = _read(buf, width)
    raw = buf.read(n)
    if len(raw) != n:
        raise FormatError("truncated string")
    return raw.decode("utf-8")


def write_network(buf, net, named=None):
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    _write_str(buf, net.hidden_activation)
    buf.write(struct.pack("<I", len(net.layer_sizes)))
    buf.write(struct.pack(f"<{len(net.layer_sizes)}I", *net.layer_sizes))
    buf.write(net.flat().astype("<f8").tobytes())
    named = dict(named or {})
    buf.write(struct.pack("<I", len(named)))
    for key in sorted(named):
        _write_str(buf, key, "<H")
        buf.write(struct.pack("<d", float(named[key])))


def read_network(buf):
    """Inverse of :func:`write_network`; returns ``(net, named)``."""
    if buf.read(len(MAGIC)) != MAGIC:
        raise FormatError("not a PHYPLAN-NET record")
    (version,) = _read(buf, "<I")
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}")
    activation = _read_str(buf)
    (n_sizes,) = _read(buf, "<I")
    sizes = _read(buf, f"<{n_sizes}I")
    count = n_params(sizes)
    raw = buf.read(8 * count)
    if len(raw) != 8 * count:
        raise FormatError("truncated parameter block")
    params = np.frombuffer(raw, dtype="<f8").astype(float)
    net = DenseNetwork.from_flat(sizes, params)
    if activation != net.hidden_activation:
        raise FormatError(f"unsupported activation {activation!r}")
    (n_named,) = _read(buf, "<I")
    named = {}
    for _ in range(n_named):
        key = _read_str(buf, "<H")
        (named[key],) = _read(buf, "<d")
    return net, named


def network_to_bytes(net, named=None):
    buf = io.BytesIO()
    write_network(buf, net, named)
    return buf.getvalue()


def network_from_bytes(data):
    return read_network(io.BytesIO(data))
