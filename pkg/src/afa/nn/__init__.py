"""From-scratch CNN with dual batch normalization, losses, SGD and diagnostics."""

from afa.nn.checkpoint import load_checkpoint, save_checkpoint
from afa.nn.diagnostics import bn_divergence_report, weight_norm_report
from afa.nn.layers import Branch
from afa.nn.losses import LossConfig, LossMode, ace_loss, ce_loss, jsd_from_logits, jsd_loss
from afa.nn.model import Model, ModelSpec
from afa.nn.optim import SGD
from afa.nn.train import SETTINGS, EpochStats, accuracy, train, train_epoch
