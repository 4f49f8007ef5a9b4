"""Double-slit visibility of a hot particle that recoils from its own thermal photon emission."""

__version__ = "0.1.0"

from .spectrum import C60, C70, PRESETS, EmissionSpectrum, MoleculeParams  # noqa: E402,F401
from .visibility import ExperimentConfig, VisibilityResult, visibility_closed_form  # noqa: E402,F401
