"""Spectra of block-hierarchical and block-rectangular hierarchical matrices,
with a rotating-disc error model built on them."""

from .errors import (DegenerateConversion, DegenerateGap, DegenerateWord,
                     DimensionLimitExceeded, NonConvergent, NonPrimeR, NotNormalized,
                     UltraspecError, UnsupportedP, ZeroEigenvalueClass)
from .hiermat import (DenseOperator, Form, HierParams, OpKind, apply_fast, build_Q,
                      build_Qrect, build_S, build_T, convert_coeffs)
from .noisesim import (DiscState, MomentReport, NoiseModel, analytic_moments,
                       asymptotic_moments, boltzmann_model, equilibration_report,
                       simulate_full_cycle)
from .oracle import exact_moments, verify_spectrum
from .spectra import (ClusterPartition, SpectralLine, classify_word, enumerate_partitions,
                      eigenvector_Q, eigenvector_Qrect, spectrum_Q, spectrum_Q_qform,
                      spectrum_Qrect, spectrum_Qrect_power)

__version__ = "0.1.0"
