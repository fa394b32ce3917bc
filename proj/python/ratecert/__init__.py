"""Certified escape rates of non-expansive maps on cones and hemi-metric spaces."""

import json as _json

from ._core import (  # noqa: F401
    __version__,
    delta,
    gauge_M,
    gauge_m,
    geodesic_point,
    karp_cycle_mean,
    martin_value,
    matrix_game_value,
    rate_report_json,
    shapley_apply,
)


def rate_report(problem):
    """Run the rate pipeline on a problem dict and return the report dict."""
    return _json.loads(rate_report_json(_json.dumps(problem)))
