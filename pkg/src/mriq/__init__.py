"""mriq: artifact-specific MRI image quality assessment at desk scale.

Physics-based noise/motion simulation on synthetic phantoms, heuristic
quality scores calibrated with sparse human picks, a dual-task
divisive-normalization CNN, and image-ruler inference with customizable
pass/fail thresholds.
"""

__version__ = "0.1.0"
