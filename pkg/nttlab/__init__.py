"""
nttlab - packet-level sequence modelling lab.

Subpackages:
- core: trace records, CSV codec, splits, error hierarchy
- netsim: discrete-event packet simulator
- numerics: autograd tensors, layers, Adam, gradient checking, checkpoints
- model: the network traffic transformer and its baselines
- predictors: one evaluation interface over models and baselines
- training: windows, normalisation, pre-training / fine-tuning, evaluation
- harness: command implementations and the experiment matrix
"""

from .__version__ import __version__

__all__ = ["__version__"]
