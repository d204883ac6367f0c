import json

import pytest

from skewnet.config import load_config, parse_config
from skewnet.errors import ConfigError

BASE = {"dataset": {"synth": "botiot-mini"}, "variants": ["E1"]}


def with_(**kw):
    return {**BASE, **kw}


class TestParse:
    def test_minimal(self):
        cfg = parse_config(BASE)
        assert cfg.variants == ("E1",) and cfg.synth is not None and not cfg.nonstandard

    @pytest.mark.parametrize(
        "raw",
        [
            with_(variants=["E2"]),
            with_(variants=["E3"], augmentation={"plans": [{"class": "c3", "fraction": 0.5}]}),
            with_(variants=["E4"]),
            with_(variants=[]),
            with_(bogus=1),
            with_(version=2),
            with_(stage_order="sideways"),
            with_(split_fraction=1.0),
            with_(architecture={"kind": "RNN"}),
            with_(train={"epochs": 0}),
            with_(train={"momentum": 0.9}),
            with_(augmentation={"plans": [{"class": "c3"}]}),
            with_(augmentation={"plans": [{"class": "c3", "count": 2}, {"class": "c3", "count": 3}]}),
            with_(weights={"explicit": {"c3": 0.5}}),
            with_(weights={"explicit": {"c3": 2}, "search": {}}),
            with_(weights={"search": {"initial_weight": 1}}),
            with_(dataset={"synth": "nope"}),
            with_(dataset={}),
            with_(seed=-1),
            {"variants": ["E1"]},
        ],
    )
    def test_rejects(self, raw):
        with pytest.raises(ConfigError):
            parse_config(raw)

    def test_hash_stable_and_seed_sensitive(self):
        a = parse_config(BASE)
        assert a.config_hash() == parse_config(dict(reversed(list(BASE.items())))).config_hash()
        assert a.with_seed(5).config_hash() != a.config_hash()
        assert a.with_seed(5).seed == 5

    def test_override_marks_nonstandard(self):
        assert parse_config(with_(stage_order="encode-then-augment")).nonstandard

    def test_minority_defaults_to_plan_classes(self):
        cfg = parse_config(with_(augmentation={"plans": [{"class": "c4", "count": 3}]}))
        assert cfg.minority_classes == ["c4"]


class TestLoad:
    def test_missing(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.json")

    def test_bad_json(self, tmp_path):
        (tmp_path / "c.json").write_text("{oops")
        with pytest.raises(ConfigError):
            load_config(tmp_path / "c.json")

    def test_relative_csv(self, tmp_path):
        (tmp_path / "c.json").write_text(json.dumps({"dataset": {"csv": "d.csv"}, "variants": ["E1"]}))
        assert load_config(tmp_path / "c.json").csv_path == tmp_path / "d.csv"

    @pytest.mark.parametrize("name", ["botiot-mini", "botiot-mini-search", "botiot-reference", "ciciot-reference"])
    def test_shipped_configs(self, name, configs_dir):
        load_config(configs_dir / f"{name}.json")

    def test_reference_weights(self, configs_dir):
        cfg = load_config(configs_dir / "botiot-reference.json")
        assert cfg.explicit_weights == {"Normal": 367, "DDoS": 1, "DoS": 1, "Reconnaissance": 4, "Theft": 800}
        assert [(p.target_class, p.count) for p in cfg.plans] == [("Normal", 3420), ("Theft", 1270)]
        assert cfg.sampling_caps == {"DDoS": 1e6, "DoS": 1e6, "Reconnaissance": 3e5}
        assert cfg.projector.latent_dim == 8
        cic = load_config(configs_dir / "ciciot-reference.json")
        assert cic.explicit_weights == {"normal": 1, "http_flood": 1, "tcp_flood": 2, "brute_force": 5, "udp_flood": 8}
        assert cic.projector.latent_dim == 15
