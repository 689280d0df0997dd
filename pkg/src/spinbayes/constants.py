"""Physical constants used by the device models (SI units)."""

from scipy.constants import Boltzmann as K_B  # J/K
from scipy.constants import e as Q_E  # elementary charge, C
from scipy.constants import mu_0 as MU_0  # vacuum permeability, T*m/A
from scipy.constants import physical_constants

# Bohr magneton, J/T
MU_B = physical_constants["Bohr magneton"][0]

# Electron gyromagnetic ratio 2*mu_B/hbar, rad/(s*T).  Multiplied by MU_0 when
# acting on fields expressed in A/m.
GAMMA_E = physical_constants["electron gyromag. ratio"][0]

__all__ = ["K_B", "Q_E", "MU_0", "MU_B", "GAMMA_E"]
