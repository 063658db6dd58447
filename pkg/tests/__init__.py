"""Tests for the relay beamforming simulator"""
