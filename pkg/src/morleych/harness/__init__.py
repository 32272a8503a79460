from ..dynamics import energy
from .contour import extract_zero_level_set
from .convergence import (ConvergenceReport, enrichment_study, fitted_order,
                          interpolation_study, inverse_laplacian_study, manufactured_convergence, projection_study)
from .io import write_contour_csv, write_field_vtk, write_trace_csv

__all__ = ["energy", "extract_zero_level_set", "ConvergenceReport", "enrichment_study",
           "fitted_order", "interpolation_study", "inverse_laplacian_study", "manufactured_convergence", "projection_study",
           "write_contour_csv", "write_field_vtk", "write_trace_csv"]
