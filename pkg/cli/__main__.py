"""Entry point for running the CLI as a module: python -m cli <subcommand>."""

import sys

from cli.topoflux import run_cli

if __name__ == "__main__":
    sys.exit(run_cli())
