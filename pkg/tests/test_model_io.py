import numpy as np
import pytest

from awhmm import InvalidInputError, load_model, save_model
from awhmm.model_io import model_from_dict, model_to_dict

from conftest import random_hmm


class TestRoundTrip:
    def test_bit_exact_round_trip(self, rng, tmp_path):
        for k in range(5):
            model = random_hmm(rng, 2 + k % 3, 1 + k % 4)
            path = tmp_path / f"m{k}.json"
            save_model(model, path)
            loaded = load_model(path)
            np.testing.assert_array_equal(loaded.trans.t, model.trans.t)
            np.testing.assert_array_equal(loaded.stationary, model.stationary)
            for a, b in zip(loaded.emissions, model.emissions):
                np.testing.assert_array_equal(a.mean, b.mean)
                np.testing.assert_array_equal(a.cov, b.cov)

    def test_dict_round_trip_without_stationary(self, rng):
        model = random_hmm(rng, 3, 2)
        doc = model_to_dict(model)
        del doc["stationary"]
        loaded = model_from_dict(doc)
        np.testing.assert_allclose(loaded.stationary, model.stationary, atol=1e-12)


class TestMalformedDocuments:
    def base_doc(self, rng):
        return model_to_dict(random_hmm(rng, 2, 2))

    def test_missing_field(self, rng):
        doc = self.base_doc(rng)
        del doc["transition"]
        with pytest.raises(InvalidInputError):
            model_from_dict(doc)

    def test_wrong_transition_length(self, rng):
        doc = self.base_doc(rng)
        doc["transition"] = doc["transition"][:-1]
        with pytest.raises(InvalidInputError):
            model_from_dict(doc)

    def test_wrong_component_count(self, rng):
        doc = self.base_doc(rng)
        doc["means"] = doc["means"][:-1]
        with pytest.raises(InvalidInputError):
            model_from_dict(doc)

    def test_nonstochastic_transition(self, rng):
        doc = self.base_doc(rng)
        doc["transition"] = [0.5, 0.4, 0.2, 0.8]
        with pytest.raises(InvalidInputError):
            model_from_dict(doc)

    def test_inconsistent_stated_stationary(self, rng):
        doc = self.base_doc(rng)
        doc["stationary"] = [0.9, 0.1]
        with pytest.raises(InvalidInputError):
            model_from_dict(doc)

    def test_unparseable_file(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("{not json")
        with pytest.raises(InvalidInputError):
            load_model(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidInputError):
            load_model(tmp_path / "absent.json")


class TestZeroMassStates:
    def test_rejects_absorbing_structure(self, rng):
        # state 0 is transient: its stationary mass is zero
        doc = model_to_dict(random_hmm(rng, 2, 1))
        doc["transition"] = [0.5, 0.5, 0.0, 1.0]
        doc.pop("stationary")
        with pytest.raises(InvalidInputError):
            model_from_dict(doc)
