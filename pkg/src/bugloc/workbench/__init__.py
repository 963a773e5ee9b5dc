from .evaluate import (
    EvalResult,
    LocalizationRun,
    RankedReport,
    attribution_to_ranked,
    diff_baseline,
    evaluate,
    load_reports,
    run_localization,
    save_reports,
    worker_count,
)
from .manifest import (
    DatasetManifest,
    ProgramEntry,
    load_manifest,
    load_results_file,
    program_source,
    save_manifest,
    validate_manifest,
)
from .pairs import PairDataset, build_pairs
from .synth import SyntheticCorpus, default_tasks, gen_synth, load_eval_pairs

__all__ = [
    "EvalResult", "LocalizationRun", "RankedReport", "attribution_to_ranked",
    "diff_baseline", "evaluate", "load_reports", "run_localization",
    "save_reports", "worker_count",
    "DatasetManifest", "ProgramEntry", "load_manifest", "load_results_file",
    "program_source", "save_manifest", "validate_manifest",
    "PairDataset", "build_pairs",
    "SyntheticCorpus", "default_tasks", "gen_synth", "load_eval_pairs",
]
