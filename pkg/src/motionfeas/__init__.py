"""Physics-grounded feasibility scores for 3D human motion."""

from .config import Config, ConfigError, load_config
from .io import MotionFile, ParseError, read_motion, write_motion
from .motion import BodyModel, MeshSequence, MotionError, MotionTrajectory, validate_trajectory
from .reward import SCORE_FIELDS, ScoreReport, aggregate, normalize_rewards, score_trajectory

__version__ = "0.1.0"

__all__ = [
    "BodyModel", "Config", "ConfigError", "MeshSequence", "MotionError", "MotionFile",
    "MotionTrajectory", "ParseError", "SCORE_FIELDS", "ScoreReport", "aggregate", "load_config",
    "normalize_rewards", "read_motion", "score_trajectory", "validate_trajectory", "write_motion",
]
