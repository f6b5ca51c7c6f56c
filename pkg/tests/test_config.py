from __future__ import annotations


import pathlib

import attrs
import pytest
import yaml

from fcac.exceptions import ConfigError
from fcac.toplevel.config import RunConfig
from fcac.toplevel.toplevel import Toplevel


def test_defaults_are_consistent() -> None:
    cfg = RunConfig.load(environ={})
    assert cfg.embedder.n_mels == cfg.dsp.n_mels
    assert cfg.seed == 0
    assert cfg.loss is cfg.protocol.loss
    assert cfg.data.manifest is None


@pytest.mark.parametrize(("preset", "sizes"), [
    ("nsynth-100", (55, 9, 5, 5)),
    ("ls-100", (60, 8, 5, 5)),
    ("esc-50", (32, 9, 2, 5)),
    ("esc-10", (6, 2, 2, 5))
])
def test_presets_fit_their_synthetic_corpora(
    preset: str,
    sizes: tuple[int, int, int, int]
) -> None:
    cfg = RunConfig.load(preset=preset, environ={})
    protocol = cfg.protocol
    assert (protocol.n_base_classes, protocol.n_sessions, protocol.n_way, protocol.n_shot) == sizes
    assert protocol.n_classes_required == cfg.data.synthetic.n_classes


def test_unknown_preset() -> None:
    with pytest.raises(ConfigError):
        RunConfig.load(preset="imagenet", environ={})


def test_environment_overrides_parse_yaml_scalars() -> None:
    overrides = RunConfig.environment_overrides({
        "FCAC_LOSS__TAU": "0.1",
        "FCAC_PROTOCOL__STOCHASTIC": "false",
        "FCAC_WORKERS": "3",
        "HOME": "/root"
    })
    assert overrides == {"loss": {"tau": 0.1}, "protocol": {"stochastic": False}, "workers": 3}
    cfg = RunConfig.load(environ={"FCAC_LOSS__TAU": "0.1", "FCAC_PROTOCOL__SEED": "4"})
    assert cfg.loss.tau == pytest.approx(0.1)
    assert cfg.seed == 4
    with pytest.raises(ConfigError):
        RunConfig.environment_overrides({"FCAC_LOSS__": "1"})


def test_later_sources_win(
    tmp_path: pathlib.Path
) -> None:
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump({"protocol": {"seed": 1, "n_shot": 3}, "loss": {"alpha": 0.5}}), encoding="utf-8")
    cfg = RunConfig.load(
        preset="esc-10",
        config_path=path,
        environ={"FCAC_PROTOCOL__SEED": "2"},
        overrides={"protocol": {"seed": 5}}
    )
    assert cfg.seed == 5
    assert cfg.protocol.n_shot == 3
    assert cfg.protocol.n_base_classes == 6
    assert cfg.loss.alpha == pytest.approx(0.5)


def test_merge_is_deep_and_leaves_inputs_alone() -> None:
    base = {"protocol": {"seed": 1, "n_way": 2}, "workers": 1}
    merged = RunConfig.merge(base, {"protocol": {"seed": 7}})
    assert merged == {"protocol": {"seed": 7, "n_way": 2}, "workers": 1}
    assert base["protocol"] == {"seed": 1, "n_way": 2}


@pytest.mark.parametrize("data", [
    {"colour": {}},
    {"loss": {"temperature": 0.1}},
    {"data": {"path": "x"}},
    {"data": {"synthetic": {"n_classes": 3, "voices": 2}}},
    {"protocol": [1, 2]},
    {"dsp": {"n_mels": 64}},
    {"workers": 0},
    {"protocol": {"batch_size": 3}}
])
def test_invalid_configurations(
    data: dict[str, object]
) -> None:
    with pytest.raises(ConfigError):
        RunConfig.from_dict(data)


def test_malformed_config_file(
    tmp_path: pathlib.Path
) -> None:
    path = tmp_path / "bad.yaml"
    path.write_text("protocol: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        RunConfig.load(config_path=path, environ={})
    path.write_text("- a list\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        RunConfig.load(config_path=path, environ={})


def test_digest_tracks_result_settings_only(
    tiny_run_config: RunConfig
) -> None:
    digest = tiny_run_config.digest
    assert len(digest) == 16
    assert attrs.evolve(tiny_run_config, workers=4, out_dir=pathlib.Path("elsewhere")).digest == digest
    reseeded = attrs.evolve(tiny_run_config, protocol=attrs.evolve(tiny_run_config.protocol, seed=9))
    assert reseeded.digest != digest
    assert "workers" not in tiny_run_config.result_dict()


def test_dump_reloads_to_the_same_config(
    tmp_path: pathlib.Path,
    tiny_config_file: pathlib.Path
) -> None:
    cfg = RunConfig.load(config_path=tiny_config_file, environ={}, live_log=False)
    path = tmp_path / "dumped.yaml"
    path.write_text(cfg.dump(), encoding="utf-8")
    assert RunConfig.load(config_path=path, environ={}, live_log=False) == cfg


def test_entering_installs_the_config(
    tiny_run_config: RunConfig
) -> None:
    with tiny_run_config:
        assert Toplevel._get_config() is tiny_run_config
        assert Toplevel._timer is not None
        assert Toplevel._logger is None
    assert Toplevel._config is None
    assert Toplevel._timer is None
    with pytest.raises(RuntimeError):
        with tiny_run_config:
            raise RuntimeError("boom")
    assert Toplevel._config is None


def test_entering_echoes_the_merged_config(
    capsys: pytest.CaptureFixture[str]
) -> None:
    cfg = RunConfig.load(
        preset="esc-10",
        environ={"FCAC_LOSS__TAU": "0.25"},
        overrides={"protocol": {"seed": 3}},
        live_log=False
    )
    capsys.readouterr()
    with cfg:
        pass
    echoed = capsys.readouterr().err
    assert echoed.startswith(f"Config {cfg.digest}, seed 3\n")
    assert cfg.dump().rstrip() in echoed
