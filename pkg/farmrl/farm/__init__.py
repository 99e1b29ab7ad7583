# flake8: noqa: F401
from farmrl.farm.agent import (
    AgentOutput,
    FarmAgent,
    FarmDiagnostics,
    FarmState,
    StateSnapshot,
    count_parameters,
)
from farmrl.farm.attention import build_context, feature_attention, share_information
from farmrl.farm.config import AgentConfig, EncoderConfig, FarmConfig, LanguageConfig
from farmrl.farm.module import FarmModule, SharedProjections
