"""Art-style dreaming, painterly rendering, retiming and rating statistics."""

from ._core import (
    Error,
    FormatError,
    IoError,
    ValidationError,
    analysis_report,
    compare_speeds,
    dream,
    frame_seed,
    incomplete_beta,
    ingest_ratings,
    load_image,
    make_plan,
    paint,
    paired_t,
    preference_partition,
    recipe_hash,
    retime_sequence,
    retimed_count,
    save_image,
    source_index,
    summarize,
    t_two_sided_p,
)

__version__ = "0.1.0"
