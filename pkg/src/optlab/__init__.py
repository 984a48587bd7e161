"""Intelligent-reflector assisted mmWave downlink: channels, estimation, FP optimisation, QR-DRL."""
