from ._qswarm import (
    Action,
    ConfigError,
    DecaySchedule,
    DomainError,
    ExperimentConfig,
    GridSpec,
    QStore,
    QTable,
    Session,
    ValidationError,
    boltzmann_probs,
    fire_pixel_fraction,
    greedy_action,
    load_config_string,
    q_update,
    reward_field_from_image,
    run,
    run_replications,
    state_index,
    step,
    sweep,
)

__all__ = [
    "Action",
    "ConfigError",
    "DecaySchedule",
    "DomainError",
    "ExperimentConfig",
    "GridSpec",
    "QStore",
    "QTable",
    "Session",
    "ValidationError",
    "boltzmann_probs",
    "fire_pixel_fraction",
    "greedy_action",
    "load_config_string",
    "q_update",
    "reward_field_from_image",
    "run",
    "run_replications",
    "state_index",
    "step",
    "sweep",
]
