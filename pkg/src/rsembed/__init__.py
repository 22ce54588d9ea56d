"""Channel orthogonalization with reconfigurable surfaces and the RS-to-BS embedding rate."""

__version__ = "0.1.0"

from .channel import (ChannelTriple, SignalParams, SystemDims, TargetChannel, effective_channel,
                      embed_semi_unitary, generate_channels, sample_received_vector)
from .numerics import RngStream, SignedLogReal, log_factorial, sample_haar_unitary, signed_log_sum
from .pdf import PdfContext, log_pdf, make_pdf_context, mc_oracle_pdf, radial_normalization
from .rates import EntropyEstimate, RateBreakdown, rate_breakdown, rs_rate, ue_sum_rate
from .solver import RsConfiguration, RsKind, solve_aris, solve_fris, verify_orthogonalization
