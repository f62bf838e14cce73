"""Numerical toolkit for mappings of bounded length distortion."""
from .checks import CurveFamily, GridConfig, check_analytic, check_geometric
from .curves import Parametric, Polyline, Segment, curve_length, distortion, distortion_ratio, image_length
from .degree import DegreeConfig, classify_sense
from .gallery import gallery_entry, parse_map
from .mapping import ConeSpec, MappingSpec, Region, cone_measure, jacobian_at
from .witness import WitnessConfig, build_lusin_set, construct_witness

__version__ = "0.1.0"
