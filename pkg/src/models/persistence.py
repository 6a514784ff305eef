"""
Ensemble directory format.

    <dir>/manifest.json       architecture, method, alphas, seeds, gamma, beta, ...
    <dir>/member_<round>.bin  one binary weight file per member

Weight file layout (little-endian):
    b"EDDE" | version: uint8 | n_layers: uint32 | (rows, cols): uint32 x 2 per layer
    | float64 parameters, layer by layer, weights (row-major) before biases
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from src.models.ensemble import Ensemble, Member, RoundRecord
from src.models.errors import PersistenceError, ValidationError
from src.models.network import Architecture, BaseNetwork, flatten_params

logger = logging.getLogger(__name__)

MAGIC = b"EDDE"
WEIGHT_FORMAT_VERSION = 1
MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"


@dataclass
class SavedEnsemble:
    ensemble: Ensemble
    label_names: Tuple[str, ...] = ()
    feature_means: Optional[np.ndarray] = None
    feature_stds: Optional[np.ndarray] = None
    manifest: dict = field(default_factory=dict)


def encode_weights(net: BaseNetwork) -> bytes:
    chunks = [MAGIC, struct.pack("<BI", WEIGHT_FORMAT_VERSION, net.arch.n_layers)]
    for w in net.weights:
        chunks.append(struct.pack("<II", *w.shape))
    chunks.append(flatten_params(net).astype("<f8").tobytes())
    return b"".join(chunks)


def decode_weights(raw: bytes, arch: Architecture, rng_seed: int = 0, source="weights") -> BaseNetwork:
    if len(raw) < 9 or raw[:4] != MAGIC:
        raise PersistenceError(f"{source}: not an EDDE weight file")
    version, n_layers = struct.unpack_from("<BI", raw, 4)
    if version != WEIGHT_FORMAT_VERSION:
        raise PersistenceError(f"{source}: unsupported weight format version {version}")
    if n_layers != arch.n_layers:
        raise PersistenceError(f"{source}: {n_layers} layers, manifest architecture has {arch.n_layers}")
    offset = 9
    if len(raw) < offset + 8 * n_layers:
        raise PersistenceError(f"{source}: truncated header")
    shapes = []
    for i in range(n_layers):
        shape = struct.unpack_from("<II", raw, offset)
        offset += 8
        if shape != arch.layer_shape(i):
            raise PersistenceError(f"{source}: layer {i} has shape {shape}, expected {arch.layer_shape(i)}")
        shapes.append(shape)
    expected = offset + 8 * sum(r * c + c for r, c in shapes)
    if len(raw) != expected:
        raise PersistenceError(f"{source}: expected {expected} bytes, found {len(raw)}")
    weights, biases = [], []
    for rows, cols in shapes:
        w = np.frombuffer(raw, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols)
        offset += 8 * rows * cols
        b = np.frombuffer(raw, dtype="<f8", count=cols, offset=offset)
        offset += 8 * cols
        weights.append(w.astype(np.float64))
        biases.append(b.astype(np.float64))
    return BaseNetwork(arch, weights, biases, rng_seed)


def _member_file(member: Member) -> str:
    return f"member_{member.round:02d}.bin"


def _optional_list(values) -> Optional[list]:
    return None if values is None else [float(v) for v in values]


def build_manifest(ens: Ensemble, label_names: Sequence[str] = (),
                   feature_means=None, feature_stds=None) -> dict:
    ens.check_non_empty()
    arch = ens.members[0].net.arch
    return {
        "format_version": MANIFEST_VERSION,
        "method": ens.method,
        "architecture": arch.to_dict(),
        "T": ens.T,
        "gamma": ens.gamma,
        "beta": ens.beta,
        "beta_unit": "weight_layers",
        "skipped_rounds": list(ens.skipped_rounds),
        "members": [
            {"file": _member_file(m), "alpha": m.alpha, "round": m.round, "seed": m.seed}
            for m in ens.members
        ],
        "rounds": [r.to_dict() for r in ens.rounds],
        "notes": list(ens.notes),
        "beta_trace": list(ens.beta_trace),
        "label_names": list(label_names),
        "normalization": {"means": _optional_list(feature_means), "stds": _optional_list(feature_stds)},
    }


def save_ensemble(ens: Ensemble, directory, label_names: Sequence[str] = (),
                  feature_means=None, feature_stds=None) -> Path:
    directory = Path(directory)
    manifest = build_manifest(ens, label_names, feature_means, feature_stds)
    directory.mkdir(parents=True, exist_ok=True)
    for member in ens.members:
        if member.net.arch != ens.members[0].net.arch:
            raise ValidationError("Ensemble members must share one architecture")
        (directory / _member_file(member)).write_bytes(encode_weights(member.net))
    with open(directory / MANIFEST_NAME, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    logger.info(f"Saved {len(ens.members)} members to {directory}")
    return directory


def load_ensemble(directory) -> SavedEnsemble:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise PersistenceError(f"{directory}: no {MANIFEST_NAME}")
    try:
        with open(manifest_path, encoding="utf-8") as f:
            manifest = json.load(f)
        if manifest["format_version"] != MANIFEST_VERSION:
            raise PersistenceError(f"{manifest_path}: unsupported format version {manifest['format_version']}")
        arch = Architecture.from_dict(manifest["architecture"])
        ens = Ensemble(
            method=manifest["method"],
            gamma=manifest.get("gamma"),
            beta=manifest.get("beta"),
            skipped_rounds=list(manifest.get("skipped_rounds", [])),
            T=int(manifest["T"]),
            notes=list(manifest.get("notes", [])),
            beta_trace=list(manifest.get("beta_trace", [])),
            rounds=[RoundRecord(r["round"], r["alpha"], r["skipped"], r["epochs"], list(r["losses"]))
                    for r in manifest.get("rounds", [])],
        )
        for entry in manifest["members"]:
            path = directory / entry["file"]
            if not path.is_file():
                raise PersistenceError(f"{path}: missing weight file")
            net = decode_weights(path.read_bytes(), arch, int(entry["seed"]), source=path)
            ens.members.append(Member(net, float(entry["alpha"]), int(entry["round"]), int(entry["seed"])))
        normalization = manifest.get("normalization") or {}
    except (KeyError, TypeError, json.JSONDecodeError) as e:
        raise PersistenceError(f"{manifest_path}: corrupt manifest ({e})")
    except ValidationError as e:
        if isinstance(e, PersistenceError):
            raise
        raise PersistenceError(f"{manifest_path}: {e}")
    if not ens.members:
        raise PersistenceError(f"{manifest_path}: ensemble has no members")
    means, stds = normalization.get("means"), normalization.get("stds")
    return SavedEnsemble(
        ensemble=ens,
        label_names=tuple(manifest.get("label_names", [])),
        feature_means=None if means is None else np.array(means, dtype=np.float64),
        feature_stds=None if stds is None else np.array(stds, dtype=np.float64),
        manifest=manifest,
    )
