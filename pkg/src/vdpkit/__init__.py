"""Toolkit for studying visual design principles with synthetic data.

Generates rule-based abstract compositions, rasterizes them, trains a small
convolutional classifier, and measures model and human agreement.
"""
from .augment import (AugmentationPlan, BgGradient, apply_plan, flip,
                      brightness_gradient, global_brightness_tweak,
                      lab_to_rgb, normalize, rgb_to_lab, rotate, sample_plan)
from .composition import (CLASS_LABELS, CLASS_TO_PRINCIPLE, PRINCIPLES,
                          RULE_CLASS, RULE_NAMES, RULES_BY_CLASS, STYLES,
                          SUB_VDPS, Composition, GenerationConfig, SubVdp,
                          Violation, generate, generate_dataset, rule_ids,
                          sample_seed, verify)
from .dataset import (SCHEMES, SPLITS, ManifestEntry, SplitScheme,
                      apply_scheme, corpora, read_manifest, resolve_path,
                      scheme_summary, split, write_manifest)
from .errors import VdpError
from .geometry import Axis, FillStyle, Point, Shape, WaveParams
from .gradcam import Heatmap, gradcam, heatmap_entropy, overlay
from .metrics import (ClassReport, ConfusionMatrix, KappaResult, MatchRates,
                      OracleAccuracy, RatingTable, class_report, confusion,
                      fleiss_details, fleiss_kappa, match_rates,
                      normalize_columns, oracle_accuracy, topk_accuracy)
from .nn import (CnnModel, TrainConfig, TrainingReport, label_order_for,
                 load_checkpoint, loss_and_grads, lr_at, predict_topk,
                 save_checkpoint, softmax, train)
from .raster import load_png, render, resize_nearest, save_png
from .service import AnnotationService, create_app
from .textures import TextureRegistry

__version__ = "0.1.0"

__all__ = [
    "CLASS_LABELS", "CLASS_TO_PRINCIPLE", "PRINCIPLES", "RULE_CLASS",
    "RULE_NAMES", "RULES_BY_CLASS", "SCHEMES", "SPLITS", "STYLES", "SUB_VDPS",
    "AnnotationService", "AugmentationPlan", "Axis", "BgGradient",
    "ClassReport", "CnnModel", "Composition", "ConfusionMatrix", "FillStyle",
    "GenerationConfig", "Heatmap", "KappaResult", "ManifestEntry",
    "MatchRates", "OracleAccuracy", "Point", "RatingTable", "Shape",
    "SplitScheme", "SubVdp", "TextureRegistry", "TrainConfig",
    "TrainingReport", "VdpError", "Violation", "WaveParams", "apply_plan",
    "apply_scheme", "brightness_gradient", "class_report", "confusion",
    "corpora", "create_app", "fleiss_details", "fleiss_kappa", "flip",
    "generate", "generate_dataset", "global_brightness_tweak", "gradcam",
    "heatmap_entropy", "lab_to_rgb", "label_order_for", "load_checkpoint",
    "load_png", "loss_and_grads", "lr_at", "match_rates", "normalize",
    "normalize_columns", "oracle_accuracy", "overlay", "predict_topk",
    "read_manifest", "render", "resize_nearest", "resolve_path", "rgb_to_lab",
    "rotate", "rule_ids", "sample_plan", "sample_seed", "save_checkpoint",
    "save_png", "scheme_summary", "softmax", "split", "topk_accuracy",
    "train", "verify", "write_manifest", "__version__",
]
