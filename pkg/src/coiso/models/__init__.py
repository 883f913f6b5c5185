from .monopole import MonopoleModel, build_monopole
from .lattice import LatticeGaugeModel, build_lattice_ed, build_lattice_ym

__all__ = [
    "MonopoleModel",
    "build_monopole",
    "LatticeGaugeModel",
    "build_lattice_ed",
    "build_lattice_ym",
]
