"""Motion-blur synthesis, adversarial face deblurring, and detection-metric
evaluation toolkit."""

__version__ = "0.1.0"
