"""Self-describing model blobs.

Models serialize to canonical JSON with base64-encoded little-endian
arrays, so the byte size is reproducible; that size is the "model size"
used by the energy metric.
"""

from __future__ import annotations

import base64
import json
from dataclasses import asdict

import numpy as np

from .data import PreprocessConfig
from .ensemble import EnsembleModel
from .errors import SpinexError
from .predictor import SpinexConfig, SpinexModel

FORMAT = "spinex-model"
VERSION = 1


def _encode_array(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr)
    if arr.dtype.byteorder == ">":
        arr = arr.astype(arr.dtype.newbyteorder("<"))
    return {
        "shape": list(arr.shape),
        "dtype": arr.dtype.str,
        "data": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def _decode_array(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype=np.dtype(obj["dtype"])).reshape(obj["shape"]).copy()


def _config_to_dict(config: SpinexConfig) -> dict:
    out = asdict(config)
    if out.get("prioritized_features") is not None:
        out["prioritized_features"] = list(out["prioritized_features"])
    return out


def config_from_dict(obj: dict) -> SpinexConfig:
    """SpinexConfig from its JSON mirror.

    Preprocessing options may be nested under "preprocess" or written flat
    as "missing_data_method" / "outlier_handling_method".
    """
    obj = dict(obj)
    pp = dict(obj.pop("preprocess", None) or {})
    for key in ("missing_data_method", "outlier_handling_method"):
        if key in obj:
            pp[key] = obj.pop(key)
    if pp:
        obj["preprocess"] = PreprocessConfig(**pp)
    if obj.get("prioritized_features") is not None:
        obj["prioritized_features"] = tuple(obj["prioritized_features"])
    return SpinexConfig(**obj)


def _spinex_to_dict(m: SpinexModel) -> dict:
    return {
        "task": m.task,
        "config": _config_to_dict(m.config),
        "feature_names": list(m.feature_names),
        "selected_features": _encode_array(m.selected_features),
        "train_features": _encode_array(m.train_features),
        "train_targets": _encode_array(m.train_targets),
        "class_labels": None if m.class_labels is None else _encode_array(m.class_labels),
        "feature_means": _encode_array(m.feature_means),
        "feature_mins": _encode_array(m.feature_mins),
        "feature_maxs": _encode_array(m.feature_maxs),
    }


def _spinex_from_dict(obj: dict) -> SpinexModel:
    labels = obj["class_labels"]
    return SpinexModel(
        config=config_from_dict(obj["config"]),
        task=obj["task"],
        feature_names=list(obj["feature_names"]),
        selected_features=_decode_array(obj["selected_features"]),
        train_features=_decode_array(obj["train_features"]),
        train_targets=_decode_array(obj["train_targets"]),
        class_labels=None if labels is None else _decode_array(labels),
        feature_means=_decode_array(obj["feature_means"]),
        feature_mins=_decode_array(obj["feature_mins"]),
        feature_maxs=_decode_array(obj["feature_maxs"]),
    )


def serialize(model: SpinexModel | EnsembleModel) -> bytes:
    if isinstance(model, SpinexModel):
        doc = {"format": FORMAT, "version": VERSION, "kind": "spinex",
               "model": _spinex_to_dict(model)}
    elif isinstance(model, EnsembleModel):
        doc = {
            "format": FORMAT,
            "version": VERSION,
            "kind": "ensemble",
            "model": {
                "ensemble_kind": model.kind,
                "task": model.task,
                "feature_names": list(model.feature_names),
                "class_labels": None if model.class_labels is None else _encode_array(model.class_labels),
                "member_weights": None if model.member_weights is None else _encode_array(model.member_weights),
                "combiner": None if model.combiner is None else _encode_array(model.combiner),
                "members": [_spinex_to_dict(m) for m in model.members],
            },
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def deserialize(blob: bytes) -> SpinexModel | EnsembleModel:
    try:
        doc = json.loads(blob.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise SpinexError(f"not a valid model blob: {exc}") from exc
    if doc.get("format") != FORMAT:
        raise SpinexError("not a spinex model blob")
    obj = doc["model"]
    if doc["kind"] == "spinex":
        return _spinex_from_dict(obj)
    labels = obj["class_labels"]
    weights = obj["member_weights"]
    combiner = obj["combiner"]
    return EnsembleModel(
        kind=obj["ensemble_kind"],
        task=obj["task"],
        members=[_spinex_from_dict(m) for m in obj["members"]],
        feature_names=list(obj["feature_names"]),
        class_labels=None if labels is None else _decode_array(labels),
        member_weights=None if weights is None else _decode_array(weights),
        combiner=None if combiner is None else _decode_array(combiner),
    )


def save(model: SpinexModel | EnsembleModel, path: str):
    with open(path, "wb") as fh:
        fh.write(serialize(model))


def load(path: str) -> SpinexModel | EnsembleModel:
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def model_size_mb(model: SpinexModel | EnsembleModel) -> float:
    """Serialized blob size in MiB; the size term of the energy metric."""
    return len(serialize(model)) / (1024 * 1024)
