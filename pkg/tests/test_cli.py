"""Tests for the mlb command line."""

import argparse
from pathlib import Path

import pytest

from mlmctdhb.cli import CLIArgumentParser, CLIConfig, Subcommand, parse_cli_args


class TestCLIConfig:
    """Test CLIConfig dataclass and validation."""

    def test_valid_config_creation(self):
        """Test creating a valid CLIConfig."""
        config = CLIConfig(
            subcommand=Subcommand.PROPAGATE,
            config_path=Path("run.json"),
            out=Path("runs/a"),
            resume=Path("runs/a/checkpoints/t_0000010.000000.mlb"),
        )
        assert config.subcommand is Subcommand.PROPAGATE
        assert config.out == Path("runs/a")
        assert config.verbose is False

    def test_resume_requires_propagate(self):
        """Test that --resume is rejected for other subcommands."""
        with pytest.raises(ValueError, match="--resume is only valid"):
            CLIConfig(
                subcommand=Subcommand.RELAX,
                config_path=Path("run.json"),
                resume=Path("x.mlb"),
            )


    def test_from_namespace(self):
        """Test an argparse namespace maps onto the stage and its paths."""
        namespace = argparse.Namespace(
            subcommand="observe",
            config=Path("c.json"),
            out=Path("runs/o"),
            resume=None,
            verbose=True,
        )
        config = CLIConfig.from_namespace(namespace)
        assert config.subcommand is Subcommand.OBSERVE
        assert config.out == Path("runs/o")
        assert config.verbose is True


class TestCLIArgumentParser:
    """Test CLIArgumentParser class."""

    @pytest.mark.parametrize("name", ["bands", "relax", "propagate", "observe", "cost"])
    def test_every_subcommand(self, name):
        """Test each subcommand parses with a configuration path."""
        config = CLIArgumentParser().parse_args([name, "--config", "c.json"])
        assert config.subcommand is Subcommand(name)
        assert config.config_path == Path("c.json")
        assert config.out is None
        assert config.resume is None

    def test_all_options(self):
        """Test parsing every option together."""
        config = CLIArgumentParser().parse_args(
            [
                "propagate",
                "--config",
                "c.json",
                "--out",
                "runs/x",
                "--resume",
                "runs/x/checkpoints/t_0000010.000000.mlb",
                "-v",
            ]
        )
        assert config.out == Path("runs/x")
        assert config.resume == Path("runs/x/checkpoints/t_0000010.000000.mlb")
        assert config.verbose is True

    def test_missing_config_error(self):
        """Test that --config is required."""
        with pytest.raises(SystemExit):
            CLIArgumentParser().parse_args(["relax"])

    def test_unknown_subcommand_error(self):
        """Test that unknown subcommands cause parser error."""
        with pytest.raises(SystemExit):
            CLIArgumentParser().parse_args(["simulate", "--config", "c.json"])

    def test_help_lists_examples(self, capsys):
        """Test --help shows the stages and the example invocations."""
        with pytest.raises(SystemExit) as info:
            CLIArgumentParser().parse_args(["--help"])
        assert info.value.code == 0
        out = capsys.readouterr().out
        assert "bands,relax,propagate,observe,cost" in out
        assert "mlb cost --config configs/double_well_reduced.json" in out

    def test_resume_with_relax_error(self, capsys):
        """Test that validation failures exit with status 2."""
        with pytest.raises(SystemExit) as info:
            CLIArgumentParser().parse_args(
                ["relax", "--config", "c.json", "--resume", "x.mlb"]
            )
        assert info.value.code == 2
        assert "--resume is only valid" in capsys.readouterr().err


class TestParseCLIArgs:
    """Test the convenience function parse_cli_args."""

    def test_parse_cli_args_function(self):
        """Test the parse_cli_args convenience function."""
        config = parse_cli_args(["cost", "--config", "c.json"])
        assert config.subcommand is Subcommand.COST


class TestSubcommand:
    """Test Subcommand enum."""

    def test_subcommand_values(self):
        """Test Subcommand enum values."""
        assert [s.value for s in Subcommand] == [
            "bands",
            "relax",
            "propagate",
            "observe",
            "cost",
        ]
