"""Scenario runner, metrics, experiments, CSV/figure output and the CLI."""
