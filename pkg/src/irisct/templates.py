"""Tab-separated template store with hex-encoded payloads.

One record per line::

    subject  sample  method  length  payload-hex  mask-hex|-  [aux-hex]

Bits are packed eight per byte, most significant first.  Trits take two
bits each (00 = 0, 01 = +1, 10 = -1), four per byte, first trit in the top
bits.  Reals are little-endian IEEE-754 doubles.  The optional seventh
column holds little-endian int64 side data (NLAC coefficient indices).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import FeatureVector, ProjectionBasis

__all__ = [
    "TemplateRecord",
    "encode_payload",
    "decode_payload",
    "append_records",
    "read_records",
    "save_basis",
    "load_basis",
]

_KIND_BY_METHOD = {
    "GLCM21": "real", "GLCM56": "real", "LOCAL": "trit", "GLOBAL": "real",
    "COMBINED": "real", "BINARY": "bit", "NLAC": "bit", "GA600": "bit",
    "AAD": "real", "PCA": "real", "ICA": "real",
}
_TRIT_CODE = {0: 0b00, 1: 0b01, -1: 0b10}
_TRIT_VALUE = np.array([0, 1, -1, 0], dtype=np.int8)


def _pack_bits(bits) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def _unpack_bits(raw: bytes, n: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:n]


def encode_payload(values, kind: str) -> str:
    values = np.asarray(values).reshape(-1)
    if kind == "bit":
        return _pack_bits(values).hex()
    if kind == "trit":
        codes = np.zeros(-(-values.size // 4) * 4, dtype=np.uint8)
        codes[: values.size] = [_TRIT_CODE[int(v)] for v in values]
        quads = codes.reshape(-1, 4)
        packed = (quads[:, 0] << 6) | (quads[:, 1] << 4) | (quads[:, 2] << 2) | quads[:, 3]
        return packed.astype(np.uint8).tobytes().hex()
    if kind == "real":
        return values.astype("<f8").tobytes().hex()
    raise ValueError(f"unknown payload kind {kind!r}")


def decode_payload(text: str, kind: str, length: int) -> np.ndarray:
    raw = bytes.fromhex(text)
    if kind == "bit":
        if len(raw) != -(-length // 8):
            raise ValueError("bit payload size does not match its length")
        return _unpack_bits(raw, length).astype(np.int8)
    if kind == "trit":
        if len(raw) != -(-length // 4):
            raise ValueError("trit payload size does not match its length")
        b = np.frombuffer(raw, dtype=np.uint8)
        codes = np.stack([(b >> 6) & 3, (b >> 4) & 3, (b >> 2) & 3, b & 3], axis=1).reshape(-1)[:length]
        if np.any(codes == 3):
            raise ValueError("invalid trit code 11")
        return _TRIT_VALUE[codes]
    if kind == "real":
        if len(raw) != 8 * length:
            raise ValueError("real payload size does not match its length")
        return np.frombuffer(raw, dtype="<f8").copy()
    raise ValueError(f"unknown payload kind {kind!r}")


@dataclass(frozen=True)
class TemplateRecord:
    subject_id: str
    sample_id: str
    method: str
    length: int
    payload: str                # hex
    mask: str = "-"             # hex or "-"
    aux: str = ""               # hex int64 or empty

    @classmethod
    def from_feature(cls, subject_id: str, sample_id: str, fv: FeatureVector) -> "TemplateRecord":
        mask = "-" if fv.mask is None else _pack_bits(fv.mask).hex()
        aux = "" if fv.aux is None else fv.aux.astype("<i8").tobytes().hex()
        return cls(str(subject_id), str(sample_id), fv.method, fv.length,
                   encode_payload(fv.payload, fv.kind), mask, aux)

    def to_feature(self) -> FeatureVector:
        kind = _KIND_BY_METHOD.get(self.method)
        if kind is None:
            raise ValueError(f"unknown method tag {self.method!r}")
        payload = decode_payload(self.payload, kind, self.length)
        mask = None if self.mask == "-" else _unpack_bits(bytes.fromhex(self.mask), self.length).astype(bool)
        aux = None if not self.aux else np.frombuffer(bytes.fromhex(self.aux), dtype="<i8").copy()
        return FeatureVector(self.method, kind, payload, mask=mask, aux=aux)

    def to_line(self) -> str:
        for text in (self.subject_id, self.sample_id, self.method):
            if "\t" in text or "\n" in text:
                raise ValueError("identifiers may not contain tabs or newlines")
        cols = [self.subject_id, self.sample_id, self.method, str(self.length), self.payload, self.mask]
        if self.aux:
            cols.append(self.aux)
        return "\t".join(cols)

    @classmethod
    def from_line(cls, line: str) -> "TemplateRecord":
        cols = line.rstrip("\n").split("\t")
        if len(cols) not in (6, 7):
            raise ValueError(f"expected 6 or 7 tab-separated columns, got {len(cols)}")
        subject, sample, method, length, payload, mask = cols[:6]
        rec = cls(subject, sample, method, int(length), payload, mask, cols[6] if len(cols) == 7 else "")
        rec.to_feature()    # validates sizes
        return rec


def append_records(path, records) -> int:
    """Append records to the store; returns how many were written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [r.to_line() + "\n" for r in records]
    with open(path, "a", encoding="ascii", newline="\n") as fh:
        fh.writelines(lines)
    return len(lines)


def read_records(path) -> list[TemplateRecord]:
    with open(path, encoding="ascii") as fh:
        return [TemplateRecord.from_line(line) for line in fh if line.strip()]


BASIS_SUBJECT = "__basis__"


def save_basis(path, basis: ProjectionBasis) -> None:
    """Store a projection basis as template records (mean, then components)."""
    rows = [("mean", basis.mean)] + [(f"c{i}", row) for i, row in enumerate(basis.components)]
    records = [TemplateRecord(BASIS_SUBJECT, name, basis.kind, vec.size, encode_payload(vec, "real"))
               for name, vec in rows]
    Path(path).write_text("".join(r.to_line() + "\n" for r in records), encoding="ascii")


def load_basis(path) -> ProjectionBasis:
    records = [r for r in read_records(path) if r.subject_id == BASIS_SUBJECT]
    if not records or records[0].sample_id != "mean":
        raise ValueError(f"{path} does not hold a projection basis")
    kind = records[0].method
    mean = records[0].to_feature().payload
    comps = np.stack([r.to_feature().payload for r in records[1:]])
    return ProjectionBasis(kind, mean, comps)
