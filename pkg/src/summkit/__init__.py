"""summkit: unified summarization evaluation metrics and judgment analytics."""

__version__ = "0.1.0"

from .analytics import (CorrelationReport, UndefinedCorrelation, kendall_tau_b,
                        krippendorff_alpha_interval, metric_human_correlation,
                        pairwise_metric_matrix, pearson_r, score_dispersion,
                        system_level_scores)
from .corpus import (EvaluationInstance, HumanAnnotation, ScoreTable, SourceDocument,
                     SystemOutput, align_outputs, detect_duplicate_references,
                     load_annotations, load_dataset, load_external_scores, load_outputs)
from .embedding import (EmbeddingTable, WeightedPointSet, cosine, load_embeddings,
                        movers_distance, rouge_we_n, sms_family)
from .engine import (MetricConfig, MetricRegistry, config_fingerprint, default_registry,
                     evaluate_batch, evaluate_example)
from .overlap import (PRF, aggregate_multi_ref, bleu_corpus, chrf, cider, meteor,
                      rouge_l, rouge_n)
from .porter import porter_stem
from .stats import (compression, coverage, density, extractive_fragments, novelty,
                    redundancy, summary_length)
from .text import char_ngrams, lcs_length, ngrams, split_sentences, tokenize
