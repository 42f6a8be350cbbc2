"""Pseudo-spectral Navier-Stokes solver on a triply periodic box."""
