from __future__ import annotations


import argparse
import pathlib
import sys
from typing import (
    Never,
    Self,
    Sequence
)

import rich.console
import rich.markup

from ..exceptions import (
    ConfigError,
    FcacError
)
from ..toplevel.config import (
    ConfigDictType,
    RunConfig
)
from .commands import Commands


def _int_list(
    text: str
) -> tuple[int, ...]:
    try:
        return tuple(int(item) for item in text.split(",") if item)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None


def _float_list(
    text: str
) -> tuple[float, ...]:
    try:
        return tuple(float(item) for item in text.split(",") if item)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


class _ArgumentParser(argparse.ArgumentParser):
    # Usage errors raise ConfigError instead of exiting.

    def error(
        self: Self,
        message: str
    ) -> Never:
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=sorted(RunConfig.PRESETS), help="named configuration preset")
    common.add_argument("--config", type=pathlib.Path, help="YAML configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out-dir", type=pathlib.Path)
    common.add_argument("--manifest", type=pathlib.Path, help="dataset manifest; synthetic data when omitted")
    common.add_argument("--base-mode", choices=("joint", "two-stage"))
    common.add_argument("--lambda", dest="lambda_", type=float, help="weight of the cross-entropy term")
    common.add_argument("--beta", type=float, help="weight of the contrastive term")
    common.add_argument("--alpha", type=float, help="weight of the prototype term in incremental sessions")
    common.add_argument("--tau", type=float, help="contrastive temperature")
    common.add_argument("--scale", type=float, help="cosine softmax scale")
    common.add_argument("--sigma-init", type=float)
    common.add_argument("--quiet", action="store_true", help="disable the live log panel")

    parser = _ArgumentParser(
        prog="fcac",
        description="Few-shot class-incremental audio classification"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    extract = subparsers.add_parser("extract", parents=[common], help="write log-mel features to a cache")
    extract.add_argument("--out", type=pathlib.Path)

    train_base = subparsers.add_parser("train-base", parents=[common], help="train and freeze the backbone")
    train_base.add_argument("--checkpoint", type=pathlib.Path)

    train_incr = subparsers.add_parser("train-incr", parents=[common], help="train one incremental session")
    train_incr.add_argument("--session", type=int, required=True)
    train_incr.add_argument("--checkpoint", type=pathlib.Path)

    evaluate = subparsers.add_parser("eval", parents=[common], help="evaluate a checkpoint on its last session")
    evaluate.add_argument("--checkpoint", type=pathlib.Path)

    subparsers.add_parser("run", parents=[common], help="run the whole protocol and write reports")

    verify = subparsers.add_parser("verify", parents=[common], help="run the built-in oracle checks")
    verify.add_argument("--check", action="append", dest="checks", help="run only the named check")

    sweep = subparsers.add_parser("sweep", parents=[common], help="repeat the protocol over a parameter grid")
    sweep.add_argument("--ways", type=_int_list, default=())
    sweep.add_argument("--shots", type=_int_list, default=())
    sweep.add_argument("--betas", type=_float_list, default=())
    return parser


def overrides_of(
    args: argparse.Namespace
) -> ConfigDictType:
    overrides: dict[str, dict[str, object]] = {}

    def put(
        section: str,
        key: str,
        value: object
    ) -> None:
        if value is not None:
            overrides.setdefault(section, {})[key] = value

    put("protocol", "seed", args.seed)
    put("protocol", "sigma_init", args.sigma_init)
    put("protocol", "base_mode", None if args.base_mode is None else args.base_mode.replace("-", "_"))
    for key in ("lambda_", "beta", "alpha", "tau", "scale"):
        put("loss", key, getattr(args, key))
    put("data", "manifest", None if args.manifest is None else args.manifest.as_posix())
    result: ConfigDictType = dict(overrides)
    if args.workers is not None:
        result["workers"] = args.workers
    if args.out_dir is not None:
        result["out_dir"] = args.out_dir.as_posix()
    return result


def dispatch(
    args: argparse.Namespace,
    cfg: RunConfig,
    console: rich.console.Console
) -> None:
    match args.command:
        case "extract":
            Commands.extract(cfg, console, args.out)
        case "train-base":
            Commands.train_base(cfg, console, args.checkpoint)
        case "train-incr":
            Commands.train_incremental(cfg, console, args.session, args.checkpoint)
        case "eval":
            Commands.evaluate(cfg, console, args.checkpoint)
        case "run":
            Commands.run(cfg, console)
        case "verify":
            Commands.verify(cfg, console, args.checks)
        case "sweep":
            if len(args.ways) != len(args.shots):
                raise ConfigError(f"--ways and --shots need equal lengths, got {len(args.ways)} and {len(args.shots)}")
            Commands.sweep(cfg, console, zip(args.ways, args.shots, strict=True), args.betas)
        case command:
            raise ConfigError(f"Unknown command '{command}'")


def main(
    argv: Sequence[str] | None = None
) -> int:
    console = rich.console.Console()
    error_console = rich.console.Console(stderr=True)
    try:
        args = build_parser().parse_args(argv)
        cfg = RunConfig.load(
            preset=args.preset,
            config_path=args.config,
            overrides=overrides_of(args),
            live_log=not args.quiet
        )
        with cfg:
            dispatch(args, cfg, console)
    except FcacError as error:
        error_console.print(f"[bold red]{type(error).__name__}[/]: {rich.markup.escape(str(error))}", markup=True, highlight=False)
        return error.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
