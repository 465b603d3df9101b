"""Locate acoustic scatterers by multilevel sampling of backpropagated data."""
from .errors import WavesiftError
from .forward import ScatterData, add_noise, load_data, save_data, synthesize
from .inversion import ReconstructionResult, multilevel_run
from .mesh import SamplingBox, SamplingGrid, create_uniform_grid, refine
from .physics import IncidenceSet, ReceiverSet, assemble_operators, green
from .scenarios import make_phantom
from .special import hankel0_first_kind

__version__ = "0.1.0"

__all__ = [
    "IncidenceSet", "ReceiverSet", "ReconstructionResult", "SamplingBox", "SamplingGrid",
    "ScatterData", "WavesiftError", "add_noise", "assemble_operators", "create_uniform_grid",
    "green", "hankel0_first_kind", "load_data", "make_phantom", "multilevel_run", "refine",
    "save_data", "synthesize",
]
