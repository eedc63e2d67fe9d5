"""Python bindings for the mitoforge C++ core.

Images are ``H x W x 3`` float arrays with values in ``[0, 1]``.
"""

from ._mitoforge import (
    MitoforgeError,
    augment_one,
    balanced_accuracy,
    brightness_contrast,
    derive_seed,
    effective_weight,
    ensemble_predict,
    fda_transfer,
    fisheye,
    fisheye_source_radius,
    fit_greedy,
    gradcheck,
    mix64,
    resize_pad,
    rotate,
    weighted_sample,
)

__all__ = [
    "MitoforgeError",
    "augment_one",
    "balanced_accuracy",
    "brightness_contrast",
    "derive_seed",
    "effective_weight",
    "ensemble_predict",
    "fda_transfer",
    "fisheye",
    "fisheye_source_radius",
    "fit_greedy",
    "gradcheck",
    "mix64",
    "resize_pad",
    "rotate",
    "weighted_sample",
]
