"""Scoring microservice for the second stage of the cascaded SQLi detector."""

from .app import ScoreRequest, ScoreResponse, create_app
from .encoder import ByteTransformerClassifier, CheckpointScorer, EncoderConfig
from .finetune import finetune
from .mock_scorer import MockScorer

__version__ = "0.1.0"
