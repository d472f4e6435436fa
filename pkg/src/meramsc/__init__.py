"""MERA-regularized multi-view subspace clustering and its anchor-graph variant."""
from .anchor import AnchorConfig, AnchorOutput, solve_anchor
from .kernels import BACKEND
from .mera import Mera5Network, MeraConfig, MeraTrace, approximate
from .metrics import MetricsReport, evaluate
from .msc import MscConfig, MscOutput, MultiViewDataset, balanced_split, solve
from .synth import synth_multiview, synth_planted

__all__ = [
    "AnchorConfig", "AnchorOutput", "BACKEND", "Mera5Network", "MeraConfig", "MeraTrace",
    "MetricsReport", "MscConfig", "MscOutput", "MultiViewDataset", "approximate",
    "balanced_split", "evaluate", "solve", "solve_anchor", "synth_multiview", "synth_planted",
]
__version__ = "0.1.0"
