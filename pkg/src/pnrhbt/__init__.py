"""Photon-number-resolving HBT simulation and higher-order coincidence analytics."""

__version__ = "0.1.0"

from .source_models import (  # noqa: E402
    PhotonPmf,
    SourceSpec,
    factorial_moment,
    mix_from_mu_g2,
    pmf,
    sample_pulse_intensity,
)
from .detector_model import (  # noqa: E402
    DetectorParams,
    Linear,
    Saturating,
    Threshold,
    Window,
    avalanche_density,
    click_probability,
    detected_pmf,
)
from .analytics import (  # noqa: E402
    g_order,
    gamma_from_clicks,
    gamma_threshold,
    gamma_window,
    joint_click_probability,
    sweep_gamma,
)
from .hbt_engine import ExperimentConfig, estimate_gamma, run  # noqa: E402
