from ._minitod import (
    Model,
    ModelConfig,
    Vocab,
    bleu,
    canonicalize,
    combined_score,
    db_query,
    gen_corpus,
    joint_goal_accuracy,
    parse_belief,
    segment_specials,
    serialize_belief,
    training_sequences,
)

__all__ = [
    "Model",
    "ModelConfig",
    "Vocab",
    "bleu",
    "canonicalize",
    "combined_score",
    "db_query",
    "gen_corpus",
    "joint_goal_accuracy",
    "parse_belief",
    "segment_specials",
    "serialize_belief",
    "training_sequences",
]
