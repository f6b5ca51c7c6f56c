from __future__ import annotations


__version__ = "0.1.0"

from .classifier.prototype import Prototype
from .classifier.stochastic_classifier import StochasticClassifier
from .classifier.stochastic_classifier_state import StochasticClassifierState

from .constants.constants import *
from .constants.custom_typing import *

from .datagen.class_signature import ClassSignature
from .datagen.dataset_manifest import (
    DatasetManifest,
    ManifestEntry
)
from .datagen.manifests import Manifests
from .datagen.synth import Synth
from .datagen.synthetic_dataset import SyntheticDataset
from .datagen.wav_reader import WavReader

from .diffmath.autodiff import (
    Autodiff,
    Graph
)
from .diffmath.optimizer import (
    Optimizer,
    OptimizerConfig,
    OptimizerState
)
from .diffmath.tensor import Tensor

from .dsp.audio_clip import AudioClip
from .dsp.dsp import Dsp
from .dsp.dsp_config import DspConfig
from .dsp.feature_cache import FeatureCache
from .dsp.log_mel_spectrogram import LogMelSpectrogram

from .embedder.checkpoint import Checkpoint
from .embedder.embedder import Embedder
from .embedder.embedder_config import EmbedderConfig
from .embedder.embedder_params import EmbedderParams

from .exceptions import (
    ConfigError,
    FcacError,
    RuntimeFailure,
    ValidationError,
    VerificationFailure
)

from .losses.labeled_batch import LabeledBatch
from .losses.loss_config import LossConfig
from .losses.losses import Losses
from .losses.reference_losses import ReferenceLosses

from .protocol.metrics import Metrics
from .protocol.protocol import Protocol
from .protocol.protocol_config import ProtocolConfig
from .protocol.reference_tables import ReferenceTables
from .protocol.reports import Reports
from .protocol.run_report import RunReport
from .protocol.sampling import Sampling
from .protocol.session_metrics import SessionMetrics
from .protocol.session_store import SessionStore
from .protocol.trainer import Trainer

from .toplevel.config import RunConfig
from .toplevel.toplevel import Toplevel
