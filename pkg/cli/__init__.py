"""Command-line front end, settings and logging helpers."""
