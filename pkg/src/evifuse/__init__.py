"""Normal-inverse-gamma evidential regression toolkit.

Moment extraction and sampling for NIG states, evidential losses with
analytic gradients, the NIG summation / mixture fusion algebra at scalar
and grid level, a soft-argmax trustworthy regression head, disparity
metrics with error-uncertainty correlation analysis, bit-exact map
serialization (EPM / PFM / ETV), and a deterministic toy trainer
reproducing the qualitative uncertainty phenomena.
"""

__version__ = "0.1.0"

from .errors import (BadConfig, DegenerateInput, Divergence, DomainError,
                     EmptyInput, EmptyMask, EvifuseError, FormatError,
                     NonFinite, ShapeMismatch, UnsupportedFormat)
from .fusion import FusionTrace, fold_trace, inter_fuse, intra_fuse, monig_fold, nig_sum
from .head import (TrustworthyVolume, evidential_activation, head_decode,
                   read_etv, soft_disparity, write_etv)
from .losses import (GradNig, LossWeights, bce_loss, grad_nll, grad_reg,
                     nll_loss, reg_loss, total_loss, uncertainty_loss)
from .maps import (DisparityMap, EvidentialMap, decode, read_epm, read_pfm,
                   write_epm, write_pfm)
from .metrics import (MetricsReport, analyze, epe, metrics_report,
                      outlier_rate, pearson, write_report_csv)
from .nig import EvidenceSummary, NigParams, NigSample, moments, sample, validate
from .trainer import (FusionTable, SyntheticDataset, ToyModel, TrainingCurves,
                      fusion_experiment, loss_and_gradients, make_synthetic,
                      train, write_curves_csv, write_fusion_table_csv)

__all__ = [
    "__version__",
    # errors
    "EvifuseError", "DomainError", "NonFinite", "ShapeMismatch", "EmptyInput",
    "EmptyMask", "DegenerateInput", "FormatError", "UnsupportedFormat",
    "BadConfig", "Divergence",
    # nig
    "NigParams", "EvidenceSummary", "NigSample", "validate", "moments", "sample",
    # fusion
    "nig_sum", "monig_fold", "FusionTrace", "fold_trace", "intra_fuse", "inter_fuse",
    # head
    "TrustworthyVolume", "soft_disparity", "head_decode", "evidential_activation",
    "read_etv", "write_etv",
    # losses
    "LossWeights", "GradNig", "nll_loss", "reg_loss", "grad_nll", "grad_reg",
    "uncertainty_loss", "bce_loss", "total_loss",
    # maps
    "EvidentialMap", "DisparityMap", "decode", "read_epm", "write_epm",
    "read_pfm", "write_pfm",
    # metrics
    "MetricsReport", "epe", "outlier_rate", "pearson", "analyze",
    "metrics_report", "write_report_csv",
    # trainer
    "SyntheticDataset", "ToyModel", "TrainingCurves", "FusionTable",
    "make_synthetic", "train", "loss_and_gradients", "fusion_experiment",
    "write_curves_csv", "write_fusion_table_csv",
]
