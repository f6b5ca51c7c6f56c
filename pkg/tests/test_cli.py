from __future__ import annotations


import io
import pathlib

import numpy as np
import pytest
import rich.console
import yaml

from fcac.cli.commands import Commands
from fcac.cli.main import main
from fcac.datagen.wav_reader import WavReader
from fcac.diffmath.tensor import Tensor
from fcac.dsp.audio_clip import AudioClip
from fcac.dsp.feature_cache import FeatureCache
from fcac.exceptions import VerificationFailure
from fcac.toplevel.config import RunConfig


def _tiny_args(
    config_file: pathlib.Path,
    out_dir: pathlib.Path
) -> list[str]:
    return ["--config", config_file.as_posix(), "--out-dir", out_dir.as_posix(), "--quiet"]


@pytest.mark.slow
def test_run_writes_reports_and_checkpoint(
    tmp_path: pathlib.Path,
    tiny_config_file: pathlib.Path
) -> None:
    out_dir = tmp_path / "out"
    assert main(["run", *_tiny_args(tiny_config_file, out_dir)]) == 0
    assert (out_dir / "checkpoint.fcac").is_file()
    table = (out_dir / "report.csv").read_text(encoding="utf-8")
    assert table.startswith("method,row,session_0,session_1,session_2,AA,PD\n")
    structured = yaml.safe_load((out_dir / "report.yaml").read_text(encoding="utf-8"))
    assert len(structured["sessions"]) == 3
    assert set(structured["summary"]) == {"all", "base", "incr"}
    assert structured["config"]["protocol"]["n_shot"] == 2


@pytest.mark.slow
def test_stepwise_commands_match_a_full_run(
    tmp_path: pathlib.Path,
    tiny_config_file: pathlib.Path
) -> None:
    steps = tmp_path / "steps"
    assert main(["train-base", *_tiny_args(tiny_config_file, steps)]) == 0
    assert main(["train-incr", "--session", "2", *_tiny_args(tiny_config_file, steps)]) == 1
    assert main(["train-incr", "--session", "1", *_tiny_args(tiny_config_file, steps)]) == 0
    assert main(["train-incr", "--session", "2", *_tiny_args(tiny_config_file, steps)]) == 0
    assert main(["eval", *_tiny_args(tiny_config_file, steps)]) == 0
    full = tmp_path / "full"
    assert main(["run", *_tiny_args(tiny_config_file, full)]) == 0
    assert (steps / "checkpoint.fcac").read_bytes() == (full / "checkpoint.fcac").read_bytes()


def test_eval_without_checkpoint_is_an_io_failure(
    tmp_path: pathlib.Path,
    tiny_config_file: pathlib.Path
) -> None:
    assert main(["eval", *_tiny_args(tiny_config_file, tmp_path / "empty")]) == 2


def test_extract_synthetic_features(
    tmp_path: pathlib.Path,
    tiny_config_file: pathlib.Path
) -> None:
    out_dir = tmp_path / "out"
    assert main(["extract", *_tiny_args(tiny_config_file, out_dir)]) == 0
    spectrograms = FeatureCache.read(out_dir / "features.fcf")
    assert len(spectrograms) == 35
    assert spectrograms[0].values.shape == (8, 8)


def test_extract_reports_failed_clips(
    tmp_path: pathlib.Path
) -> None:
    WavReader.write(
        tmp_path / "present.wav",
        AudioClip(samples=0.1 * np.sin(np.arange(1600) * 0.2), sample_rate=16000, clip_id="present")
    )
    manifest = tmp_path / "manifest.csv"
    manifest.write_text(
        "fcac-manifest,1,16000\nsource,class_id,split\npresent.wav,0,train\nabsent.wav,1,eval\n",
        encoding="utf-8"
    )
    out_dir = tmp_path / "out"
    assert main(["extract", "--manifest", manifest.as_posix(), "--out-dir", out_dir.as_posix(), "--quiet"]) == 1
    spectrograms = FeatureCache.read(out_dir / "features.fcf")
    assert [spectrogram.clip_id for spectrogram in spectrograms] == ["present.wav"]


def test_verify_reference_tables(
    tmp_path: pathlib.Path
) -> None:
    assert main(["verify", "--check", "tables/aa_pd", "--out-dir", tmp_path.as_posix(), "--quiet"]) == 0


def test_verify_passes_an_exact_backward(
    tmp_path: pathlib.Path
) -> None:
    assert main(["verify", "--check", "gradient/cosine_ce", "--out-dir", tmp_path.as_posix(), "--quiet"]) == 0


def test_verify_names_the_check_with_a_skewed_backward(
    tmp_path: pathlib.Path,
    tiny_run_config: RunConfig,
    monkeypatch: pytest.MonkeyPatch
) -> None:
    exact_log = Tensor.log

    def skewed_log(
        self: Tensor
    ) -> Tensor:
        out = exact_log(self)
        if (backward := out._backward) is not None:
            out._backward = lambda grad: tuple(1.01 * parent_grad for parent_grad in backward(grad))
        return out

    monkeypatch.setattr(Tensor, "log", skewed_log)
    names = ["gradient/cosine_ce", "tables/aa_pd"]
    with pytest.raises(VerificationFailure) as excinfo:
        Commands.verify(tiny_run_config, rich.console.Console(file=io.StringIO()), names)
    assert excinfo.value.failed_checks == ("gradient/cosine_ce",)
    argv = ["verify", *(arg for name in names for arg in ("--check", name)), "--out-dir", tmp_path.as_posix(), "--quiet"]
    assert main(argv) == 3


def test_verify_rejects_unknown_checks(
    tmp_path: pathlib.Path
) -> None:
    assert main(["verify", "--check", "gradient/everything", "--out-dir", tmp_path.as_posix(), "--quiet"]) == 1


def test_usage_errors_exit_with_validation_code() -> None:
    assert main(["run", "--base-mode", "bogus"]) == 1
    assert main(["run", "--seed", "x"]) == 1
    assert main(["train-incr"]) == 1
    assert main([]) == 1


def test_invalid_configuration_exits_with_validation_code(
    tmp_path: pathlib.Path
) -> None:
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump({"protocol": {"n_way": 2, "batch_size": 3}}), encoding="utf-8")
    assert main(["run", "--config", path.as_posix(), "--out-dir", tmp_path.as_posix(), "--quiet"]) == 1
    path.write_text(yaml.safe_dump({"renderer": {}}), encoding="utf-8")
    assert main(["run", "--config", path.as_posix(), "--out-dir", tmp_path.as_posix(), "--quiet"]) == 1


@pytest.mark.slow
def test_sweep_writes_points(
    tmp_path: pathlib.Path,
    tiny_config_file: pathlib.Path
) -> None:
    out_dir = tmp_path / "out"
    assert main(["sweep", "--ways", "2", "--shots", "1", *_tiny_args(tiny_config_file, out_dir)]) == 0
    points = yaml.safe_load((out_dir / "sweep.yaml").read_text(encoding="utf-8"))
    assert [(point["n_way"], point["n_shot"]) for point in points] == [(2, 1)]
    assert main(["sweep", "--ways", "2,3", "--shots", "1", *_tiny_args(tiny_config_file, out_dir)]) == 1
