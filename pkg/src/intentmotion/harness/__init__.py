"""Synthetic data generation, dataset extraction, benchmarking, CLI."""

from .generator import (
    Episode,
    Event,
    GeneratorConfig,
    GeneratorError,
    episode_from_jsonl,
    episode_to_jsonl,
    generate_dataset,
    generate_episode,
)
from .datasets import extract_training_pairs

__all__ = [
    "Episode", "Event", "GeneratorConfig", "GeneratorError",
    "episode_from_jsonl", "episode_to_jsonl", "generate_dataset",
    "generate_episode", "extract_training_pairs",
]
