"""Macroscopic Fourier-ptychography simulation and reconstruction.

Simulates coherent captures of a distant object through a scanned (or
arrayed, multiplexed) limited aperture and recovers the sub-diffraction
complex field with alternating-minimization phase retrieval, plus the
contrast/MTF20/RMSE metrics used to score the results.
"""

__version__ = "0.1.0"

from .errors import (ChecksumError, ConfigError, DimensionError,
                     GeometryError, InputError, LayoutError, NumericalError,
                     PtychoError)
from .field import (FOURIER_PLANE, OBJECT_PLANE, SENSOR_PLANE, ApertureSpec,
                    ComplexField, OpticalGeometry, aperture_mask,
                    aperture_samples, apply_aperture, forward_transform,
                    inverse_transform, parity_flip)
from .scene import (ObjectField, ResolutionChartSpec, load_grayscale,
                    make_chart, make_object_from_image)
from .capture import (ApertureGrid, CaptureSet, add_noise, capture,
                      capture_multiplexed, count_for_sar, plan_grid,
                      plan_source_offsets, random_patterns, sensor_to_object)
from .recon import (ReconConfig, ReconReport, fourier_update, initialize,
                    magnitude_project, reconstruct)
from .metrics import (ContrastRecord, DiffractionBlur, brightness_fit,
                      contrast, diffraction_calc, group_contrasts,
                      intensity_rmse, mtf20_limit)
from .dataset import (describe_dataset, load_capture_set, load_manifest,
                      load_object, save_capture_set, save_recon_artifacts)
from .config import ExperimentConfig, parse_config, parse_config_text
from .experiments import (desk_chart_spec, desk_geometry, paper_chart_spec,
                          paper_geometry, run, run_point, stage_seed)
