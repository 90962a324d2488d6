"""Self-describing text format for trained classifiers.

Floats are stored as ``float.hex`` strings so a save/load round trip is
bit-exact. Matrices are row-major flat lists.
"""

from __future__ import annotations

import json

import numpy as np

from .classify import ClassifierD2, MaxDepthClassifier, TrainedClass
from .core import LpModel
from .errors import ConfigError
from .kde import DepthKde

FORMAT = "lpdepth-model"
VERSION = 1


def _hex(v) -> str:
    return float(v).hex()


def _hexes(a) -> list[str]:
    return [float(v).hex() for v in np.asarray(a, dtype=float).ravel()]


def _unhex(s) -> float:
    return float.fromhex(s)


def _class_doc(c: TrainedClass) -> dict:
    return {
        "label": c.label,
        "prior": _hex(c.prior),
        "n": c.nj,
        "p": _hex(c.model.p),
        "b": _hexes(c.model.b),
        "A": _hexes(c.model.A),
        "h": _hex(c.kde.h),
        "depths": _hexes(c.kde.samples),
        "tr_ratio": _hex(c.tr_ratio),
    }


def to_document(clf, features=None) -> dict:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "kind": clf.kind,
        "dim": clf.dim,
        "classes": [_class_doc(c) for c in clf.classes],
    }
    if features is not None:
        if len(features) != clf.dim:
            raise ConfigError("one feature name per dimension is required")
        doc["features"] = [str(f) for f in features]
    if isinstance(clf, ClassifierD2):
        doc["thresholds"] = [
            {"i": i, "j": j, "k": _hex(k)} for (i, j), k in sorted(clf.thresholds.items())
        ]
    return doc


def _class_from(doc: dict, d: int) -> TrainedClass:
    b = np.array([_unhex(v) for v in doc["b"]])
    A = np.array([_unhex(v) for v in doc["A"]]).reshape(d, d)
    model = LpModel(_unhex(doc["p"]), b, A)
    kde = DepthKde(np.array([_unhex(v) for v in doc["depths"]]), _unhex(doc["h"]))
    ratio = _unhex(doc["tr_ratio"]) if "tr_ratio" in doc else float("nan")
    return TrainedClass(model, kde, _unhex(doc["prior"]), str(doc["label"]), int(doc["n"]), ratio)


def from_document(doc: dict):
    if doc.get("format") != FORMAT:
        raise ConfigError("not an lpdepth model file")
    if doc.get("version") != VERSION:
        raise ConfigError(f"unsupported model version {doc.get('version')!r}; expected {VERSION}")
    try:
        d = int(doc["dim"])
        classes = tuple(_class_from(c, d) for c in doc["classes"])
        if doc["kind"] == "d1":
            return MaxDepthClassifier(classes)
        if doc["kind"] == "d2":
            th = {(int(t["i"]), int(t["j"])): _unhex(t["k"]) for t in doc["thresholds"]}
            return ClassifierD2(classes, th)
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"malformed model file: {err}") from err
    raise ConfigError(f"unknown classifier kind {doc['kind']!r}")


def feature_names(doc: dict):
    """Feature column names stored with the model, or None."""
    return doc.get("features")


def dumps(clf, features=None) -> str:
    return json.dumps(to_document(clf, features), indent=1)


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"model file is not valid JSON: {err}") from err
    return from_document(doc)


def save(clf, path, features=None) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(clf, features))


def load_document(path) -> dict:
    with open(path) as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"model file is not valid JSON: {err}") from err


def load(path):
    return from_document(load_document(path))
