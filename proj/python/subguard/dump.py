"""Writer for SCPA activation dumps, for exporters that run outside the C++ toolkit.

Files written here load with `subguard.load_dump`, which performs the full validation.
"""

import struct
from pathlib import Path

import numpy as np

MAGIC = b"SCPA"
VERSION = 1
LABELS = {"GENERAL": 0, "COPYRIGHTED": 1}


def encode(d, records, metadata=None):
    """records: iterable of (label, array of shape (tokens, d)); label is "GENERAL" or "COPYRIGHTED"."""
    records = list(records)
    out = [MAGIC, struct.pack("<IIQ", VERSION, d, len(records))]
    for label, vectors in records:
        v = np.ascontiguousarray(vectors, dtype="<f4")
        if v.ndim != 2 or v.shape[1] != d or v.shape[0] == 0:
            raise ValueError(f"record of shape {v.shape} does not fit d={d}")
        if not np.isfinite(v).all():
            raise ValueError("non-finite activation")
        out.append(struct.pack("<BI", LABELS[label], v.shape[0]))
        out.append(v.tobytes())
    footer = "".join(f"{k}={v}\n" for k, v in sorted((metadata or {}).items())).encode()
    out.append(struct.pack("<I", len(footer)))
    out.append(footer)
    return b"".join(out)


def write_dump(path, d, records, metadata=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode(d, records, metadata))
    return path
