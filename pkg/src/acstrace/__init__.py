"""Adaptive network tracing for case prevalence estimation."""
