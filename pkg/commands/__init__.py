"""CLI commands, auto-discovered by commands.registry."""
