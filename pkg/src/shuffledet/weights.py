"""Weight persistence: a JSON manifest plus a raw little-endian float32 blob.

The manifest maps every array name to its shape and byte offset inside the
blob.  Round-trips are bitwise exact.  Offsets must tile the blob exactly,
so truncation, overflow and unknown-layer problems are all detected with
distinct errors.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import NetworkConfig
from .errors import TruncatedBlobError, WeightsError, WeightShapeError
from .network import Network, plan_network, random_parameters

MANIFEST_SUFFIX = ".json"
BLOB_SUFFIX = ".bin"
FORMAT_NAME = "shuffledet-weights"


class WeightStore:
    """Named float32 arrays backing a network's parameters."""

    def __init__(self, arrays: dict[str, np.ndarray]):
        self.arrays = {
            name: np.ascontiguousarray(a, dtype=np.float32)
            for name, a in arrays.items()
        }

    def __len__(self) -> int:
        return len(self.arrays)

    def total_floats(self) -> int:
        return sum(a.size for a in self.arrays.values())

    @classmethod
    def from_network(cls, net: Network) -> "WeightStore":
        return cls(dict(net.arrays))


def _base_path(path: str | Path) -> Path:
    p = Path(path)
    if p.suffix in (MANIFEST_SUFFIX, BLOB_SUFFIX):
        p = p.with_suffix("")
    return p


def save_weights(source: Network | WeightStore, path: str | Path) -> tuple[Path, Path]:
    """Write `<path>.json` and `<path>.bin`; returns the two paths."""
    store = source if isinstance(source, WeightStore) else WeightStore.from_network(source)
    base = _base_path(path)
    manifest_path = base.with_suffix(MANIFEST_SUFFIX)
    blob_path = base.with_suffix(BLOB_SUFFIX)

    entries: dict[str, dict] = {}
    chunks: list[bytes] = []
    offset = 0
    for name in sorted(store.arrays):
        arr = store.arrays[name]
        raw = arr.astype("<f4").tobytes()
        entries[name] = {"shape": list(arr.shape), "offset": offset}
        chunks.append(raw)
        offset += len(raw)
    manifest = {
        "format": FORMAT_NAME,
        "dtype": "float32",
        "byteorder": "little",
        "blob": blob_path.name,
        "blob_bytes": offset,
        "arrays": entries,
    }
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    blob_path.write_bytes(b"".join(chunks))
    return manifest_path, blob_path


def load_weights(path: str | Path) -> WeightStore:
    """Load a manifest + blob pair written by :func:`save_weights`."""
    base = _base_path(path)
    manifest_path = base.with_suffix(MANIFEST_SUFFIX)
    blob_path = base.with_suffix(BLOB_SUFFIX)
    if not manifest_path.exists():
        raise WeightsError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise WeightsError(f"manifest is not valid JSON: {exc}") from exc
    if manifest.get("format") != FORMAT_NAME:
        raise WeightsError(f"unrecognized weights format {manifest.get('format')!r}")
    if manifest.get("dtype") != "float32" or manifest.get("byteorder") != "little":
        raise WeightsError("only little-endian float32 blobs are supported")
    entries = manifest.get("arrays")
    if not isinstance(entries, dict) or not entries:
        raise WeightsError("manifest lists no arrays")

    blob_file = blob_path if blob_path.exists() else base.parent / manifest.get("blob", "")
    if not blob_file.exists():
        raise WeightsError(f"blob not found: {blob_path}")
    raw = blob_file.read_bytes()
    if len(raw) % 4 != 0:
        raise TruncatedBlobError(
            f"blob length {len(raw)} is not a multiple of 4 bytes"
        )
    blob = np.frombuffer(raw, dtype="<f4")
    blob_bytes = blob.size * 4

    arrays: dict[str, np.ndarray] = {}
    used = 0
    for name, entry in entries.items():
        shape = tuple(int(v) for v in entry["shape"])
        offset = int(entry["offset"])
        if offset < 0 or offset % 4 != 0:
            raise WeightsError(f"array {name!r} has invalid offset {offset}")
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        if any(s < 1 for s in shape) or count < 1:
            raise WeightShapeError(f"array {name!r} has invalid shape {shape}")
        end = offset + count * 4
        if end > blob_bytes:
            raise TruncatedBlobError(
                f"blob too short for array {name!r}: needs bytes "
                f"[{offset}, {end}), blob has {blob_bytes}"
            )
        arrays[name] = blob[offset // 4: offset // 4 + count].reshape(shape).copy()
        used += count * 4
    if used != blob_bytes:
        raise WeightsError(
            f"manifest covers {used} bytes but blob holds {blob_bytes}"
        )
    return WeightStore(arrays)


def random_weights(cfg: NetworkConfig, seed: int = 0) -> WeightStore:
    """Deterministic random-init weights for a configuration."""
    return WeightStore(random_parameters(plan_network(cfg), seed))
