"""Compress quantum channels into CP maps with few Kraus operators and certify the result."""
from .channel import (
    Channel,
    ChoiMatrix,
    StinespringIsometry,
    apply,
    apply_extended,
    channel_from_json,
    dual,
    from_kraus,
    kraus_from_choi,
    kraus_rank,
    stinespring,
    to_choi,
)
from .compressor import (
    CompressionPlan,
    CompressionResult,
    compress,
    psi1_moment_oracle,
    sample_env_vector,
    slice_map,
    tail_probability_oracle,
    tp_correct,
)
from .metrics import (
    MetricReport,
    OptBudget,
    approximation_report,
    entropy_exchange,
    entropy_rank_bound,
    fidelity,
    max_output_infnorm,
    one_to_p_distance,
    ordering_margin,
    ordering_parameter,
    renyi_entropy,
    von_neumann_entropy,
)
from .zoo import (
    Frame,
    cq_channel,
    forgetful_channel,
    qc_channel,
    random_channel,
    randomizing_channel,
    tight_frame,
    werner_channel,
)

__version__ = "0.1.0"
