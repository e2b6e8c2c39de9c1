"""Quality assessment for pansharpened satellite imagery.

Full-resolution (no-reference) indexes built on a shift-aligned MTF
reprojection of the fused product, a fine-scale local-correlation spatial
index, the legacy QNR-family distortions, reference indexes (SAM, ERGAS,
UIQI, Q2n) and the experiment harnesses that cross-check them on
reduced-resolution data.
"""

from .alignment import estimate_band_shifts, global_corrcoef
from .baselines import BASELINES, brovey, exp_baseline, mtf_glp, run_baseline
from .errors import DataError
from .filtering import Kernel, convolve, interpolate_upscale, mtf_kernel
from .fr_indexes import (
    CorrelationField,
    d_lambda,
    d_lambda_khan,
    d_lambda_khan_aligned,
    d_lambda_khan_tilde,
    d_rho,
    d_s,
    local_correlation_field,
    r_index,
    reproject,
    reprojection_error_map,
)
from .harness import (
    CampaignResult,
    CorrelationMatrix,
    index_correlation_matrix,
    misregistration_delta,
    run_fr_campaign,
    run_rr_campaign,
)
from .raster import (
    PanMsPair,
    Raster,
    ScoreReport,
    SensorSpec,
    ShiftMap,
    default_sensor,
    load_pair,
    load_raster,
    save_raster,
    sensor_preset,
    validate_pair,
)
from .ref_indexes import Hypercomplex, ergas, q2n, sam, uiqi
from .report import EvalConfig, evaluate_fr, evaluate_rr
from .resampling import decimate, shift_raster, wald_downgrade
from .synthetic import noisy_variant, synthetic_pair, synthetic_scene

__version__ = "0.1.0"

__all__ = [
    "BASELINES",
    "CampaignResult",
    "CorrelationField",
    "CorrelationMatrix",
    "DataError",
    "EvalConfig",
    "Hypercomplex",
    "Kernel",
    "PanMsPair",
    "Raster",
    "ScoreReport",
    "SensorSpec",
    "ShiftMap",
    "brovey",
    "convolve",
    "d_lambda",
    "d_lambda_khan",
    "d_lambda_khan_aligned",
    "d_lambda_khan_tilde",
    "d_rho",
    "d_s",
    "decimate",
    "default_sensor",
    "ergas",
    "estimate_band_shifts",
    "evaluate_fr",
    "evaluate_rr",
    "exp_baseline",
    "global_corrcoef",
    "index_correlation_matrix",
    "interpolate_upscale",
    "load_pair",
    "load_raster",
    "local_correlation_field",
    "misregistration_delta",
    "mtf_glp",
    "mtf_kernel",
    "noisy_variant",
    "q2n",
    "r_index",
    "reproject",
    "reprojection_error_map",
    "run_baseline",
    "run_fr_campaign",
    "run_rr_campaign",
    "sam",
    "save_raster",
    "sensor_preset",
    "shift_raster",
    "synthetic_pair",
    "synthetic_scene",
    "uiqi",
    "validate_pair",
    "wald_downgrade",
]
