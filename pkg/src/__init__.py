"""Partial zero-forcing relay beamforming for multi-way relay networks - Main package"""
__version__ = "1.0.0"
