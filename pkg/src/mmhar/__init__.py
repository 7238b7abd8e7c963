"""Two-stage multimodal (IMU + video) human activity recognition."""

__version__ = "0.1.0"
