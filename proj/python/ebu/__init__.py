"""Episodic backward update: tabular targets, operator checks and training runs."""

from ._ebu import (
    ConfigError,
    InvalidArgument,
    EbuError,
    backward_targets,
    chain_revisit_episode,
    fig1_curve,
    generate_maze,
    nstep_targets,
    one_step_target,
    relative_length,
    shortest_path_len,
    tabular_backward_update,
    train,
    value_iteration_chain,
    verify_operator,
)

__all__ = [
    "ConfigError",
    "InvalidArgument",
    "EbuError",
    "backward_targets",
    "chain_revisit_episode",
    "fig1_curve",
    "generate_maze",
    "nstep_targets",
    "one_step_target",
    "relative_length",
    "shortest_path_len",
    "tabular_backward_update",
    "train",
    "value_iteration_chain",
    "verify_operator",
]
