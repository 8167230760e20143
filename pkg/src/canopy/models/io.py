"""Model artifacts: a versioned JSON envelope plus an f32-LE binary payload.

The envelope carries the model kind, label vocabulary, feature manifest
(names and hash), standardizer, hyperparameters and seeds; large coefficient
arrays live in a sidecar ``.bin`` file as little-endian float32 with shapes
declared in the envelope. Integer structure arrays (tree topology) are
stored as f32 too; all stored integers are far below the 2^24 exactness
limit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from canopy.models.base import manifest_hash
from canopy.models.forest import RandomForest, Tree
from canopy.models.lasso import GroupLassoMultinomial, LassoPathPoint
from canopy.models.standardize import ModelError, Standardizer
from canopy.models.svm import PairSvm, SvmRbf

FORMAT_VERSION = 1


class _Payload:
    def __init__(self):
        self.blobs: list[bytes] = []
        self.arrays: list[dict] = []
        self.offset = 0

    def add(self, name: str, arr: np.ndarray) -> None:
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        self.arrays.append({
            "name": name,
            "shape": list(np.asarray(arr).shape),
            "offset": self.offset,
        })
        self.blobs.append(data)
        self.offset += len(data)


def _payload_reader(blob: bytes, arrays: list[dict]):
    table = {}
    for spec in arrays:
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=spec["offset"])
        table[spec["name"]] = arr.reshape(spec["shape"]).astype(np.float64)
    return table


def _std_to_json(std: Standardizer) -> dict:
    return {
        "mean": [repr(v) for v in std.mean.tolist()],
        "std": [repr(v) for v in std.std.tolist()],
        "constant": [bool(v) for v in std.constant.tolist()],
    }


def _std_from_json(doc: dict) -> Standardizer:
    return Standardizer(
        mean=np.array([float(v) for v in doc["mean"]]),
        std=np.array([float(v) for v in doc["std"]]),
        constant=np.array(doc["constant"], dtype=bool),
    )


def save_model(model, path) -> None:
    """Write ``path`` (JSON envelope) and ``path + '.bin'`` (payload)."""
    path = Path(path)
    payload = _Payload()
    envelope: dict = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "classes": list(model.classes),
        "feature_names": list(model.feature_names),
        "manifest_sha256": manifest_hash(model.feature_names),
        "standardizer": _std_to_json(model.standardizer),
        "payload_file": path.name + ".bin",
    }
    if isinstance(model, GroupLassoMultinomial):
        envelope["hyperparameters"] = {
            "lambda": model.lambda_, "max_groups": model.max_groups,
        }
        envelope["path"] = [
            {"lambda": p.lam, "n_active": p.n_active,
             "weighted_accuracy": p.weighted_accuracy}
            for p in model.path
        ]
        payload.add("coef", model.coef)
        payload.add("intercept", model.intercept)
    elif isinstance(model, SvmRbf):
        envelope["hyperparameters"] = {
            "gamma": model.gamma, "C": model.C, "tol": model.tol,
        }
        envelope["tuning"] = [list(row) for row in model.tuning]
        envelope["pairs"] = [
            {"class_a": p.class_a, "class_b": p.class_b,
             "bias": p.bias, "kkt_violation": p.kkt_violation,
             "n_sv": int(len(p.sv_alpha_y))}
            for p in model.pairs
        ]
        for idx, p in enumerate(model.pairs):
            payload.add(f"pair{idx}_sv_x", p.sv_x)
            payload.add(f"pair{idx}_alpha_y", p.sv_alpha_y)
    elif isinstance(model, RandomForest):
        envelope["hyperparameters"] = {"n_trees": len(model.trees), "mtry": model.mtry}
        envelope["seeds"] = {"master": model.seed}
        envelope["n_trees"] = len(model.trees)
        for idx, tree in enumerate(model.trees):
            stacked = np.stack([
                tree.feature.astype(np.float64),
                tree.threshold,
                tree.left.astype(np.float64),
                tree.right.astype(np.float64),
                tree.leaf_class.astype(np.float64),
            ])
            payload.add(f"tree{idx}", stacked)
    else:
        raise ModelError(f"cannot serialize model of type {type(model).__name__}")

    envelope["arrays"] = payload.arrays
    with open(path, "w") as fh:
        json.dump(envelope, fh, indent=1, sort_keys=True)
    with open(str(path) + ".bin", "wb") as fh:
        for blob in payload.blobs:
            fh.write(blob)


def load_model(path):
    path = Path(path)
    with open(path) as fh:
        envelope = json.load(fh)
    if envelope.get("format_version") != FORMAT_VERSION:
        raise ModelError(f"unsupported model format {envelope.get('format_version')}")
    blob = (path.parent / envelope["payload_file"]).read_bytes()
    arrays = _payload_reader(blob, envelope["arrays"])
    kind = envelope["kind"]
    classes = tuple(envelope["classes"])
    names = tuple(envelope["feature_names"])
    std = _std_from_json(envelope["standardizer"])
    hyper = envelope.get("hyperparameters", {})

    if kind == "group_lasso":
        return GroupLassoMultinomial(
            classes=classes, feature_names=names, standardizer=std,
            coef=arrays["coef"], intercept=arrays["intercept"],
            lambda_=float(hyper["lambda"]), max_groups=int(hyper["max_groups"]),
            path=[LassoPathPoint(p["lambda"], p["n_active"], p["weighted_accuracy"])
                  for p in envelope.get("path", [])],
        )
    if kind == "svm_rbf":
        pairs = []
        for idx, spec in enumerate(envelope["pairs"]):
            pairs.append(PairSvm(
                class_a=int(spec["class_a"]), class_b=int(spec["class_b"]),
                sv_x=arrays[f"pair{idx}_sv_x"],
                sv_alpha_y=arrays[f"pair{idx}_alpha_y"],
                bias=float(spec["bias"]),
                kkt_violation=float(spec["kkt_violation"]),
            ))
        return SvmRbf(
            classes=classes, feature_names=names, standardizer=std,
            gamma=float(hyper["gamma"]), C=float(hyper["C"]), pairs=pairs,
            tol=float(hyper["tol"]),
            tuning=[tuple(row) for row in envelope.get("tuning", [])],
        )
    if kind == "random_forest":
        trees = []
        for idx in range(int(envelope["n_trees"])):
            stacked = arrays[f"tree{idx}"]
            trees.append(Tree(
                feature=stacked[0].astype(np.int32),
                threshold=stacked[1],
                left=stacked[2].astype(np.int32),
                right=stacked[3].astype(np.int32),
                leaf_class=stacked[4].astype(np.int32),
            ))
        return RandomForest(
            classes=classes, feature_names=names, standardizer=std,
            trees=trees, seed=int(envelope["seeds"]["master"]),
            mtry=int(hyper["mtry"]),
        )
    raise ModelError(f"unknown model kind {kind!r}")
