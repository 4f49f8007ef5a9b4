"""Physical constants (CODATA 2018, SI) and unit conversions."""

HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J / K
C_LIGHT = 299792458.0  # m / s
AMU = 1.66053906660e-27  # kg

NM2 = 1e-18  # m^2 per nm^2
