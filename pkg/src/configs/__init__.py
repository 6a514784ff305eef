"""Run configuration: defaults, file loading and logging setup."""
