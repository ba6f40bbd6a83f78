"""Main entry point for the mlb command."""

import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from .cli import parse_cli_args
from .errors import MLBError, NumericalError

THREAD_VARIABLES = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def apply_thread_limit() -> None:
    """Propagate MLB_NUM_THREADS to the BLAS/OpenMP thread variables."""
    threads = os.environ.get("MLB_NUM_THREADS")
    if threads:
        for name in THREAD_VARIABLES:
            os.environ[name] = threads


def report_error(error: Dict[str, Any]) -> int:
    """Write the machine-readable error object to stderr and return its status."""
    print(json.dumps({"error": error}), file=sys.stderr)
    return int(error["exit_code"])


def main(args: Optional[List[str]] = None) -> int:
    """Main entry point for the mlb command.

    Args:
        args: Command line arguments (defaults to sys.argv[1:])

    Returns:
        Exit code (0=success, 2=configuration error, 3=numerical failure,
        4=resource cap)
    """
    if args is None:
        args = sys.argv[1:]

    cli_config = parse_cli_args(args)
    logging.basicConfig(
        level=logging.INFO if cli_config.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    apply_thread_limit()

    # numpy is first imported here, after the thread limit is in place
    from .config import load_config
    from .output import format_json
    from .runner import run

    try:
        config = load_config(cli_config.config_path)
        summary = run(
            cli_config.subcommand, config, cli_config.out, cli_config.resume
        )
    except MLBError as e:
        return report_error(e.to_dict())
    except Exception as e:  # noqa: BLE001
        logging.getLogger(__name__).exception("unexpected failure")
        return report_error(
            {
                "type": "InternalError",
                "message": str(e),
                "exit_code": NumericalError.exit_code,
            }
        )
    print(format_json(summary))
    return 0


def cli_entry_point() -> None:
    """Console script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    cli_entry_point()
