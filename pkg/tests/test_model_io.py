import json

import numpy as np
import pytest

from lpdepth import model_io
from lpdepth.classify import train_d2, train_max_depth
from lpdepth.errors import ConfigError
from lpdepth.fit import PGrid

GRID = PGrid((1.0, 2.0, 4.0))


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(0)
    return [rng.normal(size=(60, 2)), rng.laplace(size=(50, 2)) + [3, 1], rng.normal(size=(40, 2)) * 0.5 - 2]


@pytest.mark.parametrize("trainer", [train_d2, train_max_depth])
def test_round_trip_is_exact(tmp_path, data, trainer):
    clf = trainer(data, ["a", "b", "c"], GRID, rng=np.random.default_rng(1))
    path = tmp_path / "m.json"
    model_io.save(clf, path, ["u", "v"])
    back = model_io.load(path)
    assert type(back) is type(clf)
    for c0, c1 in zip(clf.classes, back.classes):
        assert c0.model.p == c1.model.p and c0.kde.h == c1.kde.h and c0.prior == c1.prior
        np.testing.assert_array_equal(c0.model.A, c1.model.A)
        np.testing.assert_array_equal(c0.kde.samples, c1.kde.samples)
    x = np.random.default_rng(2).normal(size=(100, 2)) * 3
    assert back.predict(x) == clf.predict(x)
    assert model_io.dumps(back, ["u", "v"]) == path.read_text()
    assert model_io.feature_names(model_io.load_document(path)) == ["u", "v"]


def test_version_mismatch(data):
    clf = train_d2(data[:2], grid=GRID, rng=np.random.default_rng(3))
    doc = model_io.to_document(clf)
    doc["version"] = 99
    with pytest.raises(ConfigError, match="version"):
        model_io.from_document(doc)


def test_not_a_model():
    with pytest.raises(ConfigError):
        model_io.loads(json.dumps({"format": "something"}))
    with pytest.raises(ConfigError):
        model_io.loads("{not json")


def test_malformed(data):
    doc = model_io.to_document(train_d2(data[:2], grid=GRID, rng=np.random.default_rng(4)))
    del doc["thresholds"]
    with pytest.raises(ConfigError):
        model_io.from_document(doc)


def test_feature_count_checked(data):
    clf = train_d2(data[:2], grid=GRID, rng=np.random.default_rng(5))
    with pytest.raises(ConfigError):
        model_io.to_document(clf, ["only-one"])
