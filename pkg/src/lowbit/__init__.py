"""lowbit: ultra-low-bit weight quantization with bit-exact packed storage.

Quantizers: ternary (with the deadzone-bias training surrogate), 3:4
structured-sparse ternary packed 4 weights per 5-bit code, 2-bit symmetric
zero-free levels, and a software FP8-E4M3 emulator driving an
outlier-isolating activation scale search. Matvec kernels include a
lookup-table path for the sparse codes, and every packed format round-trips
bit-exactly through the ASQ container.
"""
from .asq import (
    AsqBadMagicError,
    AsqBadSchemeError,
    AsqBadVersionError,
    AsqError,
    AsqPayloadLengthError,
    AsqTruncatedError,
    inspect_asq,
    read_asq,
    scheme_name,
    write_asq,
)
from .fp8 import E4M3_MAX, decode_e4m3, encode_e4m3, fp8_table, qdq_tensor
from .lepto import (
    BlockSpec,
    LeptoConfig,
    LeptoResult,
    block_forward,
    grid_search,
    outlier_denominator,
    qdq_isolated,
)
from .seq2 import SeqTensor, dequantize_seq, micro_tune_scale, seq_matvec, seq_quantize
from .sherry import (
    ArenasSchedule,
    SherryTensor,
    Tl2Tensor,
    anneal_lambda,
    arenas_forward,
    decode_block,
    decode_tl2_block,
    dequantize_sherry,
    encode_block,
    encode_tl2_block,
    lut_matvec,
    naive_matvec,
    project_3of4,
    quantize_tl2,
    sherry_quantize,
)
from .tensor import (
    RngSpec,
    cosine,
    generate,
    matvec_dense,
    mse,
    quantile_abs,
    read_rtf,
    write_rtf,
)
from .ternary import (
    TernaryTensor,
    ToyTask,
    TrainTrace,
    compute_threshold,
    deadzone_fraction,
    dequantize_ternary,
    fold_bias,
    quantize_tequila,
    tequila_forward,
    tequila_grad,
    ternarize,
    ternary_infer,
    train_toy,
)

__version__ = "0.1.0"
