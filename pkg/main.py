#!/usr/bin/env python3
"""
Entry point for gridflow.

    python main.py converge --config configs/converge_p4.json
    python main.py complexity --config configs/complexity_eps.json
    python main.py evolve --config configs/evolve_thin_film_p4.json

See gridflow/cli.py for the flags; any flag overrides the config file.
"""
import sys

from gridflow.cli import cli_main


def main():
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
