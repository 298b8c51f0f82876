"""Physical constants and default scenario values.

Geometry and frequency values are the ones quoted for the cold-beam
instrument; atomic data comes from CODATA via scipy.
"""

from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import h as PLANCK
from scipy.constants import hbar as HBAR
from scipy.constants import m_u

__all__ = [
    "SPEED_OF_LIGHT", "PLANCK", "HBAR",
    "RB87_MASS", "LAMBDA_D2", "V_Z0", "BEAM_WIDTH", "ZONE_SPACING",
    "PZT_MAX_DISPLACEMENT", "PZT_MAX_PHASE", "TILT_REQUIRED", "TILT_ACHIEVED",
    "EARTH_RATE", "RB87_5P32_SPLITTINGS", "REPUMP_AOM_FREQ",
    "NU_12", "SYNTH_FREQ", "NU_INT", "VCO_FREQ", "LOWPASS_CUTOFF",
    "DIVIDER", "COOLING_REPUMP_DIFF", "FEOM_FREQ", "RAMAN_AOM_FREQ",
    "MODULATION_FREQ", "NATURAL_LINEWIDTH", "PD1_BANDWIDTH", "PHD12_BANDWIDTH",
    "LD_CURRENT", "LD_POWER", "ECDL_LINEWIDTH",
]

RB87_MASS = 86.909180527 * m_u  # kg

# interferometer geometry
LAMBDA_D2 = 780e-9  # m
V_Z0 = 15.0  # m/s, longitudinal beam velocity
BEAM_WIDTH = 1e-3  # m, Raman slot width d
ZONE_SPACING = 9.5e-3  # m, slot spacing L
PZT_MAX_DISPLACEMENT = 9e-6  # m
PZT_MAX_PHASE = 30.0  # rad at full PZT stroke
TILT_REQUIRED = 312e-6  # rad, stated bound for d=1 mm, v=15 m/s
TILT_ACHIEVED = 91e-6  # rad, reached by fiber/lens adjustment

EARTH_RATE = 7.29e-5  # rad/s

# 5P3/2 hyperfine intervals F'=0-1, 1-2, 2-3 (Hz)
RB87_5P32_SPLITTINGS = (72.2180e6, 156.9470e6, 266.6500e6)

# laser-lock chain (Hz)
REPUMP_AOM_FREQ = 78.5e6
NU_12 = 3.284e9
SYNTH_FREQ = 1.562e9
NU_INT = 160e6
VCO_FREQ = 152e6
LOWPASS_CUTOFF = 100e6
DIVIDER = 16
COOLING_REPUMP_DIFF = 6.568e9
FEOM_FREQ = 6.775e9
RAMAN_AOM_FREQ = 60e6

# recorded hardware figures, not modeled
MODULATION_FREQ = 100e3  # Hz
NATURAL_LINEWIDTH = 6.06e6  # Hz, D2 Gamma/2pi
PD1_BANDWIDTH = 10e6  # Hz
PHD12_BANDWIDTH = 15e9  # Hz
LD_CURRENT = 90e-3  # A
LD_POWER = 15e-3  # W
ECDL_LINEWIDTH = 5e3  # Hz
