"""Use cases: profile solving, spectral analysis, curves, evolution and verification."""
