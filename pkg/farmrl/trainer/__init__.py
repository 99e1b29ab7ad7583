# flake8: noqa: F401
from farmrl.trainer.actor import Actor, episode_seed, select_action
from farmrl.trainer.config import LossConfig, OptimizerConfig, TrainerConfig
from farmrl.trainer.evaluate import EvalReport, evaluate, evaluate_policy
from farmrl.trainer.learner import Learner, LearnerStats, replay
from farmrl.trainer.losses import LossTerms, compute_loss
from farmrl.trainer.metrics import METRICS_COLUMNS, MetricsWriter, UpdateMetrics, frames_to_success, read_metrics
from farmrl.trainer.optimizer import Adam, clip_by_global_norm, global_norm
from farmrl.trainer.run_dir import RunDirectory, RunSummary
from farmrl.trainer.timeline import CheckpointsTimeline, resolve_checkpoint
from farmrl.trainer.train import Trainer, train
from farmrl.trainer.trajectory import EpisodeSummary, StepInput, Trajectory
from farmrl.trainer.vtrace import VTraceReturns, vtrace_targets
