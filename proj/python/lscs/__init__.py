"""Line-scan convolutional sparse coding."""

from ._core import (
    DomainError,
    InfeasibleError,
    ParseError,
    SolverError,
    back_project,
    coherence_bounds,
    convolve_motif,
    equispaced_angles,
    expected_coherence,
    generate_sample,
    hex_least_eigenvalue,
    line_project,
    lowpass_spectrum,
    normalized_coherence,
    random_angles,
    reconstruct,
    render_motif,
    render_psf,
    rotate,
    simulate_scan,
    support_match,
)

__all__ = [
    "DomainError",
    "InfeasibleError",
    "ParseError",
    "SolverError",
    "back_project",
    "coherence_bounds",
    "convolve_motif",
    "equispaced_angles",
    "expected_coherence",
    "generate_sample",
    "hex_least_eigenvalue",
    "line_project",
    "lowpass_spectrum",
    "normalized_coherence",
    "random_angles",
    "reconstruct",
    "render_motif",
    "render_psf",
    "rotate",
    "simulate_scan",
    "support_match",
]
