"""Sparse-MIMO array geometries, co-arrays, beam patterns, DOA estimation,
and a multi-user ISAC simulation harness."""

__version__ = "0.1.0"

from .geometry import (ApertureConvention, ElementLayout, LayoutError, aperture,
                       layout_from_text, make_compact, make_coprime, make_emra,
                       make_moa, make_mra, make_nested, make_usa, mra_search,
                       on_integer_grid)
from .coarray import (LagProfile, difference_coarray, holes, max_contiguous,
                      sensing_dof, sum_coarray)
from .patterns import (Codebook, FocusGrid, PatternCurve, angular_resolution,
                       closed_form_compact_pattern, codebook_coverage, depth_3db,
                       dft_hollow_codebook, farfield_pattern,
                       grating_lobe_positions, nearfield_focus_pattern,
                       peak_sidelobe)
from .estimation import (Covariance, EstimateReport, EstimationFailure,
                         SnapshotSet, SourceScene, coarray_music, music_far,
                         nrmse, polar_omp, sample_covariance, simulate_snapshots,
                         spatial_smoothing, steer_far, steer_near, two_stage_near,
                         zf_music)
from .isacsim import (GroupAssignment, ResultRow, ScenarioConfig, combiner,
                      drop_users, group_users, run_rate_experiment,
                      run_sensing_experiment, sinr_per_user, sum_rate,
                      user_channels)
from .presets import PRESETS, build_layout, get_preset
from .runconfig import RunManifest, load_config, parse_config_text
