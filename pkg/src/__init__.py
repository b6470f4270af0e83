"""fracwave: periodic waves of fractional KdV and NLS equations."""
