"""Benchmark harness: configs, data files, experiment runners and the ``drsc`` CLI."""
