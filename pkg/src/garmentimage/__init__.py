"""Raster encoding of 2D sewing patterns as two-layer grids of typed, deformed cells."""

from .decoder import DecodeError, decode
from .encoder import EncodeError, GridConfig, encode
from .grid import EdgeType, GarmentImage, Layer, from_tensor, read_tensor, to_tensor, write_tensor
from .pattern import PatternError, Side, SewingPattern, parse_pattern, serialize_pattern
from .validate import Violation, ViolationKind, repair, validate

__all__ = [
    "DecodeError", "EdgeType", "EncodeError", "GarmentImage", "GridConfig", "Layer", "PatternError",
    "SewingPattern", "Side", "Violation", "ViolationKind", "decode", "encode", "from_tensor",
    "parse_pattern", "read_tensor", "repair", "serialize_pattern", "to_tensor", "validate", "write_tensor",
]
