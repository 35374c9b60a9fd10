from __future__ import annotations
import sys
import logging
from pathlib import Path
from typing import Optional, Sequence

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def setup_environment() -> None:
    """Configure the application environment."""
    project_root = Path(__file__).parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Root logger on stderr: DEBUG with --verbose, WARNING with --quiet, INFO otherwise."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def handle_exception(exc_type, exc_value, exc_traceback):
    """Global exception handler."""
    # Don't handle keyboard interrupt
    if issubclass(exc_type, KeyboardInterrupt):
        sys.__excepthook__(exc_type, exc_value, exc_traceback)
        return

    logging.getLogger("softtree").critical(
        "Unhandled exception", exc_info=(exc_type, exc_value, exc_traceback)
    )
    print(f"An unexpected error occurred: {exc_value}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main application entry point."""
    setup_environment()
    sys.excepthook = handle_exception

    from core.error_types import AppException
    from services.cli_service import build_parser, dispatch, exit_code_for

    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    try:
        return dispatch(args)
    except AppException as exception:
        exception.error.log(logging.getLogger("softtree"))
        print(f"error: {exception.error.message}", file=sys.stderr)
        return exit_code_for(exception.error)


if __name__ == "__main__":
    sys.exit(main())
