"""strokerec: recover the drawing order of offline handwritten characters.

Pipeline: synthesize (image, trajectory) pairs from online-style point
sequences, train a CNN + bidirectional-LSTM encoder / LSTM decoder to emit
50 pen coordinates per image, snap predictions to the image skeleton, and
score starting-point / junction / complete-trajectory accuracy against a
classical graph-trace baseline.
"""

from .autodiff import (AdamState, NonFiniteValue, NoTape, ParameterStore,
                       ShapeMismatch, Tensor, adam_step, backward, no_grad)
from .data import (DatasetRecord, DuplicateId, GlyphSpec, ParseError,
                   generate_corpus, generate_glyph, load_dataset, make_pair,
                   save_dataset)
from .evalmetrics import (EdgeSequence, EvalReport, EvalSample, GraphMismatch,
                          baseline_trace, ct_correct, evaluate, jp_score,
                          sp_correct, to_edge_sequence)
from .model import (CnnConfig, ModelConfig, Seq2SeqConfig, forward,
                    init_params, recover_trajectory)
from .raster import (EmptyImage, NotThin, SkeletonGraph, build_skeleton_graph,
                     rasterize, skeletonize, snap_to_skeleton)
from .trainer import EmptyDataset, NonFiniteLoss, TrainConfig, evaluate_loss, train
from .trajectory import (DegenerateBBox, PenTrajectory, ResampleSpec,
                         ZeroLengthTrajectory, arc_length, normalize_to_box,
                         resample_uniform)

__version__ = "0.1.0"
