"""Calibration-driven region discovery, allocation, routing and noisy simulation for multi-tenant quantum processors."""
