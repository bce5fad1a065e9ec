"""Command-line orchestration, configs and experiment pipelines."""
