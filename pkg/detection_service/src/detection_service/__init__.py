"""Open-vocabulary object detection behind a small HTTP wire contract."""

from .app import create_app
from .config import ServiceConfig
from .detectors import ColorPrototypeDetector, OwlVitDetector, build_detector

__version__ = "0.1.0"
