"""Experiment configuration, commands and the command-line interface."""
