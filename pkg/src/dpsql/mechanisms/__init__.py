from dpsql.mechanisms.engine import sanitize
from dpsql.mechanisms.histogram import default_tau, sanitize_histogram, sticky_threshold
from dpsql.mechanisms.kanon import group_sizes, is_quasi_identifier, kanon_check, kanon_gate
from dpsql.mechanisms.noise import derive_seed, laplace_sample, laplace_samples, make_rng
from dpsql.mechanisms.params import KAnonParams, Mechanism, PrivacyParams, Suppressor
from dpsql.mechanisms.result import SanitizedResult
from dpsql.mechanisms.saa import partition_of, partition_sizes, saa, saa_check
from dpsql.mechanisms.scalar import plan, sanitize_scalar

__all__ = [
    "KAnonParams",
    "Mechanism",
    "PrivacyParams",
    "SanitizedResult",
    "Suppressor",
    "default_tau",
    "derive_seed",
    "group_sizes",
    "is_quasi_identifier",
    "kanon_check",
    "kanon_gate",
    "laplace_sample",
    "laplace_samples",
    "make_rng",
    "partition_of",
    "partition_sizes",
    "plan",
    "saa",
    "saa_check",
    "sanitize",
    "sanitize_histogram",
    "sanitize_scalar",
    "sticky_threshold",
]
