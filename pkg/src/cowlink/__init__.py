"""Coherent one-way QKD link simulator with a full distillation stack."""

__version__ = "0.1.0"
