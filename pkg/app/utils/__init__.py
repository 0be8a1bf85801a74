"""
Harness utilities: scenario loading, runs, sweeps, traces and caching
"""
