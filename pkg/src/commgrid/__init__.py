"""Two-agent gridworld lab for comparing emergent and pre-defined protocols.

A pair of independent DQN learners navigate a partially observable grid to
a shared treasure, talking over a 4-symbol channel. The channel either
evolves freely with task reward (EC) or is fixed to a quadrant rule (PSP),
and the metrics pipeline quantifies the efficiency gap between the two.
"""
from .analysis import (
    ProbeDataset,
    WelchResult,
    attenuation_rate,
    js_divergence,
    mean_final_steps,
    probe_accuracy,
    regularized_incomplete_beta,
    shannon_entropy,
    symbol_distribution,
    welch_t_test,
)
from .gridworld import AGENT_1, AGENT_2, EnvState, GridPos, GridWorld, MoveAction, StepOutcome
from .harness import Config, ConfigError, analyze, emit_plot_data, load_config, run_experiment
from .neural import (
    AdamState,
    ForwardCache,
    Gradients,
    Mlp,
    ReplayBuffer,
    Transition,
    adam_init,
    adam_step,
    backward,
    forward,
    mlp_init,
)
from .protocol import (
    CommPolicy,
    EcPolicy,
    PspPolicy,
    Symbol,
    decode_symbol,
    ec_symbol_select,
    encode_symbol,
    psp_symbol,
)
from .training import (
    AgentNets,
    Condition,
    EpisodeRecord,
    RunResult,
    SymbolLogEntry,
    make_agent,
    run_episode,
    run_training,
    select_move,
    td_target,
    train_step,
)

__version__ = "0.1.0"
