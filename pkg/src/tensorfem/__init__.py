"""Tensor-valued finite elements on simplices built from polytopal templates."""

from .assembly import MaterialTensors, quadrature_rule, solve_linear, static_condense
from .conformance import constants_residual, gram_min_eig, interface_jump
from .geometry_map import GeometricMap, make_map, map_tensor_basis, push_forward
from .mesh import Mesh, build_dofmap, lshape_mesh, load_mesh, strip_mesh, write_mesh
from .plates import PlateProblem, postprocess_moments, run_example, solve_plate
from .refsimplex import ReferenceSimplex, enumerate_polytopes
from .scalar_basis import build_scalar_basis
from .templates import FAMILIES, FAMILY_DIMS, tensor_templates, vector_templates
from .tensor_elements import build_element, element_dim
from .vector_elements import build_vector_element

__version__ = "0.1.0"
