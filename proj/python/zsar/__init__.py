"""Zero-shot action recognition on precomputed backbone features.

Thin python surface over the C++ core: embedding-table parsing, class and
object semantics, seeded split generation, training, zero-shot evaluation,
benchmarking and the synthetic corpus generator.
"""

from zsar._core import (  # noqa: F401
    BackboneFeature,
    BenchmarkReport,
    ClassInfo,
    ClassSemantics,
    ConfigError,
    DataError,
    Dataset,
    DetectionRecord,
    EpochStats,
    FusionMode,
    ModelMode,
    ModelParams,
    NumericError,
    ObjectSemantics,
    RunConfig,
    Split,
    SplitScore,
    SynthConfig,
    SynthData,
    SynthPaths,
    TrainResult,
    WordEmbeddingTable,
    aggregate_objects,
    cosine_distance,
    embed_class_set,
    embed_objects,
    embed_phrase,
    evaluate,
    format_report,
    forward_test,
    generate_splits,
    load_checkpoint,
    load_dataset,
    load_embedding_table,
    load_run_config,
    load_splits,
    lr_schedule,
    predict,
    run_benchmark,
    save_checkpoint,
    save_splits,
    synth_generate,
    tokenize_label,
    train,
    write_report_csv,
    write_report_json,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
