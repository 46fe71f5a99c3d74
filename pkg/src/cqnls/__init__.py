"""Ground states, soliton curve, spectra and dynamics of the 3D cubic-quintic NLS."""

__version__ = "0.1.0"
