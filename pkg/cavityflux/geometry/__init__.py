# cavityflux/geometry/__init__.py
"""Cavity meshes, laser source and view factors."""

from .mesh import (
    CavityGeometry,
    CavityModel,
    Region,
    RegionMesh,
    SurfaceElement,
    assemble_cavity,
    build_capsule_mesh,
    build_end_face_mesh,
    build_enclosure_mesh,
    build_wall_mesh,
    enclosure_model,
)
from .source import SourceParams, SourceSpec, build_source
from .viewfactor import (
    assemble_view_matrix,
    assemble_view_rows,
    occluded,
    pair_view_factor,
    source_term,
)

__all__ = [
    "CavityGeometry",
    "CavityModel",
    "Region",
    "RegionMesh",
    "SurfaceElement",
    "SourceParams",
    "SourceSpec",
    "assemble_cavity",
    "assemble_view_matrix",
    "assemble_view_rows",
    "build_capsule_mesh",
    "build_end_face_mesh",
    "build_enclosure_mesh",
    "build_source",
    "build_wall_mesh",
    "enclosure_model",
    "occluded",
    "pair_view_factor",
    "source_term",
]
