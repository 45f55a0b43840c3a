"""Physical constants in the eV / femtosecond / angstrom / amu system."""
from scipy import constants as _c

#: hbar in eV*fs; converts an energy in eV into an angular frequency in 1/fs.
HBAR_EV_FS = _c.hbar / _c.e * 1e15

#: hbar^2 / (1 amu * 1 angstrom^2) expressed in eV.
HBAR2_PER_AMU_ANGSTROM2_EV = _c.hbar**2 / (_c.atomic_mass * 1e-20) / _c.e


def fs_to_internal(t_fs):
    """Femtoseconds to hbar/eV (the time unit implied by energies in eV)."""
    return t_fs / HBAR_EV_FS


def internal_to_fs(t):
    return t * HBAR_EV_FS


def rate_ev_to_per_fs(rate_ev):
    return rate_ev / HBAR_EV_FS
