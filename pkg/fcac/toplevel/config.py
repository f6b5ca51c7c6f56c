from __future__ import annotations


import copy
import hashlib
import os
import pathlib
from typing import (
    ClassVar,
    Iterator,
    Mapping,
    Self
)

import attrs
import rich.console
import yaml

from ..datagen.synthetic_dataset import SyntheticDataset
from ..diffmath.optimizer import OptimizerConfig
from ..dsp.dsp_config import DspConfig
from ..embedder.embedder_config import EmbedderConfig
from ..exceptions import (
    ConfigError,
    IoError
)
from ..losses.loss_config import LossConfig
from ..protocol.protocol_config import ProtocolConfig
from .toplevel import Toplevel
from .toplevel_resource import ToplevelResource


type ConfigDictType = dict[str, object]


@attrs.frozen(kw_only=True)
class DataConfig:
    # A manifest path takes precedence over the synthetic description.
    manifest: pathlib.Path | None = attrs.field(
        default=None,
        converter=lambda path: None if path is None else pathlib.Path(path)
    )
    synthetic: SyntheticDataset = attrs.field(factory=SyntheticDataset)


@attrs.frozen(kw_only=True)
class RunConfig(ToplevelResource):
    """
    Effective configuration of one command.

    Sections are merged from a preset, a YAML file, `FCAC_<SECTION>__<KEY>`
    environment variables and command-line flags, later sources winning.
    Entering the config installs it on `Toplevel` together with a timer and
    a logger.
    """

    dsp: DspConfig = attrs.field(factory=DspConfig)
    embedder: EmbedderConfig = attrs.field(factory=EmbedderConfig)
    protocol: ProtocolConfig = attrs.field(factory=ProtocolConfig)
    data: DataConfig = attrs.field(factory=DataConfig)
    workers: int = 1
    out_dir: pathlib.Path = attrs.field(default=pathlib.Path("fcac_output"), converter=pathlib.Path)
    live_log: bool = True

    ENV_PREFIX: ClassVar[str] = "FCAC_"
    PRESETS: ClassVar[Mapping[str, ConfigDictType]] = {
        "nsynth-100": {
            "protocol": {"n_base_classes": 55, "n_sessions": 9, "n_way": 5, "n_shot": 5},
            "data": {"synthetic": {"n_classes": 100}}
        },
        "ls-100": {
            "protocol": {"n_base_classes": 60, "n_sessions": 8, "n_way": 5, "n_shot": 5},
            "data": {"synthetic": {"n_classes": 100}}
        },
        "esc-50": {
            "protocol": {"n_base_classes": 32, "n_sessions": 9, "n_way": 2, "n_shot": 5},
            "data": {"synthetic": {"n_classes": 50}}
        },
        "esc-10": {
            "protocol": {"n_base_classes": 6, "n_sessions": 2, "n_way": 2, "n_shot": 5},
            "data": {"synthetic": {"n_classes": 10}}
        },
        "desk": {
            "dsp": {"n_mels": 32},
            "embedder": {
                "n_mels": 32,
                "embedding_dim": 32,
                "channels": [8, 16],
                "blocks_per_stage": [1, 1],
                "projection_dim": 16
            },
            "protocol": {
                "n_base_classes": 6,
                "n_sessions": 2,
                "n_way": 2,
                "n_shot": 5,
                "base_epochs": 20,
                "classifier_epochs": 20,
                "incremental_epochs": 50,
                "batch_size": 24
            },
            "optimizer": {"learning_rate": 0.05, "max_grad_norm": 5.0},
            "data": {
                "synthetic": {
                    "n_classes": 10,
                    "train_clips_per_class": 10,
                    "eval_clips_per_class": 5,
                    "duration_s": 0.5,
                    "sample_rate": 8000,
                    "spacing": 0.5
                }
            }
        }
    }

    def __attrs_post_init__(
        self: Self
    ) -> None:
        if self.embedder.n_mels != self.dsp.n_mels:
            raise ConfigError(f"embedder.n_mels {self.embedder.n_mels} must equal dsp.n_mels {self.dsp.n_mels}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")

    @property
    def seed(
        self: Self
    ) -> int:
        return self.protocol.seed

    @property
    def loss(
        self: Self
    ) -> LossConfig:
        return self.protocol.loss

    def to_dict(
        self: Self
    ) -> ConfigDictType:
        # Plain nested mapping in the file layout: loss and optimizer are top-level sections.
        protocol = attrs.asdict(self.protocol)
        loss = protocol.pop("loss")
        optimizer = protocol.pop("optimizer")
        return {
            "dsp": attrs.asdict(self.dsp),
            "embedder": attrs.asdict(self.embedder),
            "protocol": protocol,
            "loss": loss,
            "optimizer": optimizer,
            "data": {
                "manifest": None if self.data.manifest is None else self.data.manifest.as_posix(),
                "synthetic": self.data.synthetic.to_dict()
            },
            "workers": self.workers,
            "out_dir": self.out_dir.as_posix()
        }

    def dump(
        self: Self
    ) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def result_dict(
        self: Self
    ) -> ConfigDictType:
        # Only the settings that influence results; echoed into reports and hashed into the digest.
        data = self.to_dict()
        del data["workers"], data["out_dir"]
        return data

    @property
    def digest(
        self: Self
    ) -> str:
        return hashlib.sha256(yaml.safe_dump(self.result_dict(), sort_keys=True).encode("utf-8")).hexdigest()[:16]

    @classmethod
    def _section[T](
        cls: type[Self],
        record_type: type[T],
        name: str,
        data: object
    ) -> T:
        if data is None:
            data = {}
        if not isinstance(data, Mapping):
            raise ConfigError(f"Config section '{name}' must be a mapping")
        if unknown := set(data) - set(attrs.fields_dict(record_type)):
            raise ConfigError(f"Unknown keys in config section '{name}': {", ".join(sorted(map(str, unknown)))}")
        try:
            return record_type(**{
                key: tuple(value) if isinstance(value, list) else value
                for key, value in data.items()
            })
        except (TypeError, ValueError) as error:
            raise ConfigError(f"Invalid config section '{name}': {error}") from error

    @classmethod
    def from_dict(
        cls: type[Self],
        data: Mapping[str, object],
        live_log: bool = True
    ) -> Self:
        known = {"dsp", "embedder", "protocol", "loss", "optimizer", "data", "workers", "out_dir"}
        if unknown := set(data) - known:
            raise ConfigError(f"Unknown config sections: {", ".join(sorted(map(str, unknown)))}")
        protocol_data = data.get("protocol") or {}
        if not isinstance(protocol_data, Mapping):
            raise ConfigError("Config section 'protocol' must be a mapping")
        data_section = data.get("data") or {}
        if not isinstance(data_section, Mapping):
            raise ConfigError("Config section 'data' must be a mapping")
        if unknown := set(data_section) - {"manifest", "synthetic"}:
            raise ConfigError(f"Unknown keys in config section 'data': {", ".join(sorted(map(str, unknown)))}")
        try:
            return cls(
                dsp=cls._section(DspConfig, "dsp", data.get("dsp")),
                embedder=cls._section(EmbedderConfig, "embedder", data.get("embedder")),
                protocol=cls._section(ProtocolConfig, "protocol", {
                    **protocol_data,
                    "loss": cls._section(LossConfig, "loss", data.get("loss")),
                    "optimizer": cls._section(OptimizerConfig, "optimizer", data.get("optimizer"))
                }),
                data=DataConfig(
                    manifest=data_section.get("manifest"),
                    synthetic=cls._section(SyntheticDataset, "data.synthetic", data_section.get("synthetic"))
                ),
                workers=int(data.get("workers", 1)),
                out_dir=data.get("out_dir", "fcac_output"),
                live_log=live_log
            )
        except (TypeError, ValueError) as error:
            raise ConfigError(f"Invalid configuration: {error}") from error

    @classmethod
    def merge(
        cls: type[Self],
        base: Mapping[str, object],
        override: Mapping[str, object]
    ) -> ConfigDictType:
        merged: ConfigDictType = copy.deepcopy(dict(base))
        for key, value in override.items():
            if isinstance(value, Mapping) and isinstance(current := merged.get(key), Mapping):
                merged[key] = cls.merge(current, value)
            else:
                merged[key] = copy.deepcopy(value)
        return merged

    @classmethod
    def read_file(
        cls: type[Self],
        path: pathlib.Path
    ) -> ConfigDictType:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as error:
            raise IoError(f"Cannot read config file '{path}': {error}") from error
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as error:
            raise ConfigError(f"Malformed config file '{path}': {error}") from error
        if not isinstance(data, dict):
            raise ConfigError(f"Config file '{path}' must hold a mapping")
        return data

    @classmethod
    def environment_overrides(
        cls: type[Self],
        environ: Mapping[str, str]
    ) -> ConfigDictType:
        """
        `FCAC_LOSS__TAU=0.1` becomes `{"loss": {"tau": 0.1}}`; values are parsed as YAML scalars.
        """
        overrides: ConfigDictType = {}
        for name, raw in sorted(environ.items()):
            if not name.startswith(cls.ENV_PREFIX):
                continue
            path = [part.lower() for part in name.removeprefix(cls.ENV_PREFIX).split("__")]
            if not all(path):
                raise ConfigError(f"Malformed override variable '{name}'")
            try:
                value = yaml.safe_load(raw)
            except yaml.YAMLError as error:
                raise ConfigError(f"Malformed value of '{name}': {error}") from error
            node: dict[str, object] = overrides
            for part in path[:-1]:
                child = node.setdefault(part, {})
                if not isinstance(child, dict):
                    raise ConfigError(f"Override '{name}' conflicts with another override")
                node = child
            node[path[-1]] = value
        return overrides

    @classmethod
    def load(
        cls: type[Self],
        preset: str | None = None,
        config_path: pathlib.Path | None = None,
        environ: Mapping[str, str] | None = None,
        overrides: Mapping[str, object] | None = None,
        live_log: bool = True
    ) -> Self:
        data: ConfigDictType = {}
        if preset is not None:
            if preset not in cls.PRESETS:
                raise ConfigError(f"Unknown preset '{preset}'; choose from {", ".join(sorted(cls.PRESETS))}")
            data = cls.merge(data, cls.PRESETS[preset])
        if config_path is not None:
            data = cls.merge(data, cls.read_file(config_path))
        data = cls.merge(data, cls.environment_overrides(os.environ if environ is None else environ))
        if overrides:
            data = cls.merge(data, overrides)
        return cls.from_dict(data, live_log=live_log)

    def __contextmanager__(
        self: Self
    ) -> Iterator[None]:
        from .logger import Logger
        from .timer import Timer

        header = f"Config {self.digest}, seed {self.seed}"
        rich.console.Console(stderr=True).print(
            f"{header}\n{self.dump().rstrip()}",
            markup=False,
            highlight=False,
            emoji=False,
            soft_wrap=True
        )
        Toplevel._config = self
        try:
            with Timer():
                if self.live_log:
                    with Logger():
                        Toplevel.log(header)
                        yield
                else:
                    yield
        finally:
            Toplevel._config = None
