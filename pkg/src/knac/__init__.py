"""knac: refine expert cluster labelings against automated clusterings.

Compare an expert labeling with any clustering algorithm's output, get split
and merge recommendations with quantified confidences, justify them with
executable precision/coverage rules, and drive an iterative, persistent
knowledge-base refinement loop from the CLI, the HTTP API, or Python.
"""

from .dataset import BlobSpec, LabeledDataset, corrupt_labels, generate_blobs, load_dataset, save_dataset
from .contingency import ContingencyMatrix, MergeMatrix, SplitMatrix, contingency, entropy_bits, merge_matrix, split_matrix
from .metrics import AgreementScores, agreement, linkage_distance, linkage_matrix_normalized, silhouette
from .clusterer import KMeansConfig, kmeans
from .recommend import (
    MergeRecommendation,
    RecommendParams,
    SplitRecommendation,
    merge_candidates,
    recommend_all,
    render,
    split_candidates,
    split_confidences,
)
from .explain import BoundingBox, Condition, ExplanationRule, RuleConfig, bounding_box, explain_merge, explain_split, induce_rule
from .rulebase import KBRule, KnowledgeBase, apply_merge, apply_split, import_explanation, infer, label_dataset, new_kb, wrapper_kb
from .errors import IngestionError, KnacError, ValidationError

__version__ = "0.1.0"
