"""Command line of the mixture simulator: one stage per invocation."""

import argparse
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

EXAMPLES = """
Examples:
  mlb bands --config configs/double_well_attractive.json
  mlb relax --config configs/double_well_attractive.json
  mlb propagate --config configs/double_well_attractive.json --out runs/attr
  mlb propagate --config run.json --resume runs/attr/checkpoints/t_00000050.000000.mlb
  mlb cost --config configs/double_well_reduced.json
""".strip()


class Subcommand(Enum):
    """Run stages selectable from the command line."""

    BANDS = "bands"
    RELAX = "relax"
    PROPAGATE = "propagate"
    OBSERVE = "observe"
    COST = "cost"


@dataclass
class CLIConfig:
    """One stage invocation: what to run, on which configuration, where to write."""

    subcommand: Subcommand
    config_path: Path
    out: Optional[Path] = None
    resume: Optional[Path] = None
    verbose: bool = False

    def __post_init__(self) -> None:
        if self.resume is not None and self.subcommand is not Subcommand.PROPAGATE:
            raise ValueError("--resume is only valid with the propagate subcommand")

    @classmethod
    def from_namespace(cls, namespace: argparse.Namespace) -> "CLIConfig":
        return cls(
            subcommand=Subcommand(namespace.subcommand),
            config_path=namespace.config,
            out=namespace.out,
            resume=namespace.resume,
            verbose=namespace.verbose,
        )


class CLIArgumentParser:
    """The ``mlb`` argument parser.

    A stage name and a run configuration are required; ``--out`` redirects
    every artifact and ``--resume`` continues a propagation from a checkpoint.
    """

    def __init__(self) -> None:
        self.parser = argparse.ArgumentParser(
            prog="mlb",
            description="Multi-layer MCTDH simulator for bosonic mixtures in 1D",
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog=EXAMPLES,
        )
        self.parser.add_argument(
            "subcommand", choices=[s.value for s in Subcommand], help="Stage to run"
        )
        self.parser.add_argument(
            "--config",
            type=Path,
            required=True,
            metavar="PATH",
            help="JSON run configuration",
        )
        self.parser.add_argument(
            "--out",
            type=Path,
            metavar="DIR",
            help="Output directory (overrides the configuration's output)",
        )
        self.parser.add_argument(
            "--resume",
            type=Path,
            metavar="PATH",
            help="Continue a propagation from an MLB1 checkpoint",
        )
        self.parser.add_argument(
            "--verbose", "-v", action="store_true", help="Log progress at INFO level"
        )

    def parse_args(self, argv: Optional[Sequence[str]] = None) -> CLIConfig:
        """Turn an argument vector (default ``sys.argv[1:]``) into a CLIConfig.

        Usage errors, including ``--resume`` outside ``propagate``, print the
        usage line and exit with status 2.
        """
        namespace = self.parser.parse_args(argv)
        try:
            return CLIConfig.from_namespace(namespace)
        except ValueError as exc:
            self.parser.error(str(exc))
            raise  # parser.error exits


def parse_cli_args(argv: Optional[Sequence[str]] = None) -> CLIConfig:
    return CLIArgumentParser().parse_args(argv)
