"""Command-line subcommands."""

import argparse

from lasr.cli import bench, evaluate, ingest, predict, train

# Subcommands in help order
COMMANDS = [ingest, train, evaluate, predict, bench]


def register_commands(subparsers: argparse._SubParsersAction) -> None:
    """Add every subcommand to a subparsers action."""
    for command in COMMANDS:
        command.register(subparsers)
