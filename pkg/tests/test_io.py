"""File formats: model JSON and observation CSV round-trips."""
from __future__ import annotations

import numpy as np
import pytest

import regimekf as rk
from regimekf import io as fio
from conftest import make_random_model


class TestModelFiles:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(701)
        model = make_random_model(rng, h=2, m=2, p=2)
        path = tmp_path / "model.json"
        fio.save_model(model, path)
        back = fio.load_model(path)
        np.testing.assert_allclose(back.chain.Q, model.chain.Q, atol=0.0)
        for a, b in zip(back.regimes, model.regimes):
            np.testing.assert_allclose(a.T, b.T, atol=0.0)
            np.testing.assert_allclose(a.g, b.g, atol=0.0)

    def test_hash_stable_and_sensitive(self):
        rng = np.random.default_rng(702)
        model = make_random_model(rng, h=2, m=1, p=1)
        assert fio.model_hash(model) == fio.model_hash(model)
        other = make_random_model(rng, h=2, m=1, p=1)
        assert fio.model_hash(model) != fio.model_hash(other)
        assert len(fio.model_hash(model)) == 12

    def test_declared_dims_checked(self, tmp_path):
        rng = np.random.default_rng(703)
        model = make_random_model(rng, h=2, m=2, p=1)
        doc = fio.model_to_dict(model)
        doc["dims"]["m"] = 5
        path = tmp_path / "model.json"
        path.write_text(__import__("json").dumps(doc))
        with pytest.raises(rk.DataFormatError, match="dims.m"):
            fio.load_model(path)

    def test_invalid_json_is_bad_input(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("{not json")
        with pytest.raises(rk.DataFormatError):
            fio.load_model(path)


class TestObservationFiles:
    def test_roundtrip_with_missing_cells(self, tmp_path):
        y = np.array([[1.5, 2.5], [np.nan, 0.0], [3.0, np.nan]])
        path = tmp_path / "obs.csv"
        fio.save_observations(y, path, fio.comment_line(seed=1, model="x", algo="sim"))
        back = fio.load_observations(path)
        np.testing.assert_array_equal(np.isnan(back.y), np.isnan(y))
        np.testing.assert_allclose(back.y[~np.isnan(y)], y[~np.isnan(y)], atol=0.0)
        assert not back.mask[1, 0] and back.mask[1, 1]

    def test_repr_formatting_preserves_doubles(self, tmp_path):
        y = np.array([[0.1 + 0.2], [1.0 / 3.0]])
        path = tmp_path / "obs.csv"
        fio.save_observations(y, path, "# regimekf seed=0 model=x algo=sim")
        back = fio.load_observations(path)
        assert back.y[0, 0] == y[0, 0]
        assert back.y[1, 0] == y[1, 0]

    def test_header_checked(self, tmp_path):
        path = tmp_path / "obs.csv"
        path.write_text("a,b\n1.0,2.0\n")
        with pytest.raises(rk.DataFormatError, match="header"):
            fio.load_observations(path)

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "obs.csv"
        path.write_text("y1,y2\n1.0,2.0\n3.0\n")
        with pytest.raises(rk.DataFormatError, match="row 2"):
            fio.load_observations(path)

    def test_comment_metadata_roundtrip(self, tmp_path):
        path = tmp_path / "obs.csv"
        fio.save_observations(
            np.zeros((2, 1)), path, fio.comment_line(seed=42, model="abc", algo="sim")
        )
        meta = fio.read_comments(path)
        assert meta["seed"] == "42"
        assert meta["model"] == "abc"
