"""Grid, field and report entities plus the Fourier toolkit."""
