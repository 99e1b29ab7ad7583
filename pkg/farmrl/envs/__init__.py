# flake8: noqa: F401
from farmrl.envs.abstract_mdp import AbstractMDPEnv, AbstractMDPSampler, generate_placements
from farmrl.envs.ballet import BalletEnv, dance_phase_length
from farmrl.envs.base import BaseGridEnv
from farmrl.envs.episode_log import EpisodeLogger, EpisodeRecord, read_episode_log
from farmrl.envs.errors import EpisodeDoneError, LevelGenerationError, UnsolvableLevelError
from farmrl.envs.factory import EnvConfig, instruction_vocabulary, make_env
from farmrl.envs.grid import GridWorld, WorldObject
from farmrl.envs.keybox import KeyBoxEnv, level_budget, level_reward
from farmrl.envs.motions import MOTION_PROGRAMS, MotionProgram
from farmrl.envs.policies import ChanceBalletPolicy, RandomPolicy
from farmrl.envs.putnext import PutNextEnv
from farmrl.envs.results import StepInfo, StepResult
