"""Binary checkpoints, CSV logs and reports, and run manifests."""
from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import struct
from pathlib import Path

import numpy as np

from .alphabet import Alphabet
from .errors import CorruptFile, VersionMismatch
from .model import PARAM_NAMES, ModelConfig, ValidityModel
from .sampling import CurvePoint, EvalReport, vh_auc

MAGIC = b"SVQM"
FORMAT_VERSION = 1

# config field encodings: tag byte then payload
_INT, _FLOAT, _STR = b"i", b"f", b"s"


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise CorruptFile(self.pos, f"unexpected end of file reading {n} bytes")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self) -> str:
        (n,) = self.unpack("<H")
        at = self.pos
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError:
            raise CorruptFile(at, "invalid UTF-8 in name") from None


def _pack_string(s: str) -> bytes:
    b = s.encode("utf-8")
    return struct.pack("<H", len(b)) + b


def checkpoint_bytes(model: ValidityModel, alphabet: Alphabet | None = None) -> bytes:
    fields = dict(model.config.to_dict())
    if alphabet is not None:
        fields["alphabet_tokens"] = "\x1f".join(alphabet.tokens)
        fields["alphabet_pad"] = -1 if alphabet.pad_index is None else alphabet.pad_index
    out = [MAGIC, struct.pack("<I", FORMAT_VERSION), struct.pack("<I", len(fields))]
    for name, value in fields.items():
        out.append(_pack_string(name))
        if isinstance(value, (bool, int, np.integer)):
            out.append(_INT + struct.pack("<q", int(value)))
        elif isinstance(value, (float, np.floating)):
            out.append(_FLOAT + struct.pack("<d", float(value)))
        else:
            out.append(_STR + _pack_string(str(value)))
    out.append(struct.pack("<I", len(PARAM_NAMES)))
    for name in PARAM_NAMES:
        arr = np.ascontiguousarray(model.params[name], dtype="<f4")
        out.append(_pack_string(name))
        out.append(struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        out.append(arr.tobytes())
    return b"".join(out)


def save_checkpoint(model: ValidityModel, path, alphabet: Alphabet | None = None) -> None:
    Path(path).write_bytes(checkpoint_bytes(model, alphabet))


def parse_checkpoint(data: bytes):
    """Returns ``(model, alphabet_or_None)``."""
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise CorruptFile(0, "bad magic bytes")
    (version,) = r.unpack("<I")
    if version != FORMAT_VERSION:
        raise VersionMismatch(version, FORMAT_VERSION)
    (n_fields,) = r.unpack("<I")
    fields = {}
    for _ in range(n_fields):
        name = r.string()
        at = r.pos
        tag = r.take(1)
        if tag == _INT:
            (fields[name],) = r.unpack("<q")
        elif tag == _FLOAT:
            (fields[name],) = r.unpack("<d")
        elif tag == _STR:
            fields[name] = r.string()
        else:
            raise CorruptFile(at, f"unknown field tag {tag!r}")
    tokens = fields.pop("alphabet_tokens", None)
    pad = fields.pop("alphabet_pad", -1)
    try:
        config = ModelConfig(**fields)
    except (TypeError, ValueError) as exc:
        raise CorruptFile(r.pos, f"bad model config: {exc}") from None
    (n_tensors,) = r.unpack("<I")
    params = {}
    for _ in range(n_tensors):
        name = r.string()
        (rank,) = r.unpack("<I")
        if rank > 8:
            raise CorruptFile(r.pos - 4, f"implausible tensor rank {rank}")
        dims = r.unpack(f"<{rank}I")
        count = int(np.prod(dims)) if rank else 1
        params[name] = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(dims).astype(np.float32)
    if r.pos != len(data):
        raise CorruptFile(r.pos, "trailing bytes after last tensor")
    reference = ValidityModel.zeros(config).params
    for name in PARAM_NAMES:
        if name not in params or params[name].shape != reference[name].shape:
            raise CorruptFile(r.pos, f"tensor {name!r} missing or mis-shaped")
    alphabet = None
    if tokens is not None:
        alphabet = Alphabet(tuple(tokens.split("\x1f")), pad_index=None if pad < 0 else pad)
    return ValidityModel(config, params), alphabet


def load_checkpoint(path):
    return parse_checkpoint(Path(path).read_bytes())


# --- CSV formats ----------------------------------------------------------------

def write_training_log(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "loss", "seconds"])
        for rec in records:
            w.writerow([rec.step, repr(float(rec.loss)), f"{rec.seconds:.6f}"])


def eval_csv_text(report: EvalReport) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "validity", "entropy_nats", "n"])
    for p in report.points:
        w.writerow([repr(p.tau), repr(p.validity), repr(p.entropy), p.n])
    return buf.getvalue()


def save_eval_report(report: EvalReport, path) -> None:
    Path(path).write_text(eval_csv_text(report))


def load_eval_report(path) -> EvalReport:
    points = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["tau", "validity", "entropy_nats", "n"]:
            raise CorruptFile(0, f"unexpected eval CSV header {reader.fieldnames}")
        for row in reader:
            points.append(CurvePoint(float(row["tau"]), float(row["validity"]),
                                     float(row["entropy_nats"]), int(row["n"])))
    return EvalReport(points, vh_auc([p.validity for p in points], [p.entropy for p in points]))


def load_rows(path) -> np.ndarray:
    """Decoder weight rows: CSV, one row of non-negative weights per step."""
    rows = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    return rows


# --- manifests --------------------------------------------------------------------

def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def training_log_digest(records) -> str:
    """Digest of the deterministic columns (step, loss) of a training log."""
    h = hashlib.sha256()
    for rec in records:
        h.update(f"{rec.step},{float(rec.loss)!r}\n".encode())
    return h.hexdigest()


def write_manifest(manifest: dict, path) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
