"""Experiment plumbing: config files, presets, drivers, CLI."""
