"""Evaluation of L(1/2 + it) with error control."""

from .afe import afe_length, central_length, central_value, central_weights, gl2_afe, gl2_half_line
from .euler_maclaurin import dirichlet_half_line, hurwitz_zeta, zeta_half_line
from .grid import CriticalLineGrid, default_spacing, dyadic, evaluate_source, fill_grid, grid_points
from .nufft import dirichlet_poly_direct, dirichlet_poly_grid, nufft1
from .smoothed import SmoothedSumParams, smoothed_product_sum, smoothed_sum


__all__ = [
    "CriticalLineGrid",
    "SmoothedSumParams",
    "afe_length",
    "central_length",
    "central_value",
    "central_weights",
    "default_spacing",
    "dirichlet_half_line",
    "dirichlet_poly_direct",
    "dirichlet_poly_grid",
    "dyadic",
    "evaluate_source",
    "fill_grid",
    "gl2_afe",
    "gl2_half_line",
    "grid_points",
    "hurwitz_zeta",
    "nufft1",
    "smoothed_product_sum",
    "smoothed_sum",
    "zeta_half_line",
]
