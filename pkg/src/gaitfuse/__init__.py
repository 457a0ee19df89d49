"""Fatigue-driven gait synthesis via latent-space fusion of per-subject
fatigue features, modulated by three-compartment fatigue dynamics."""

__version__ = "0.1.0"
