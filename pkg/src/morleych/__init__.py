"""Morley nonconforming finite elements for the Cahn-Hilliard equation."""
from .mesh import Mesh, build_crisscross_mesh, morley_dof_count
from .element import MorleyBasis, build_element_basis, morley_basis
from .quadrature import QuadratureRule, quadrature_rule

__version__ = "0.1.0"

__all__ = ["Mesh", "build_crisscross_mesh", "morley_dof_count", "MorleyBasis",
           "build_element_basis", "morley_basis", "QuadratureRule", "quadrature_rule"]
