"""Spectral, dynamical and scattering computations for generalized Lamb models."""

from .char_poly import (RealPolynomial, RootSet, build_p_closed_form, build_p_vandermonde,
                        build_pk_sequence, classify_roots, find_roots, roots_of_model)
from .dynamics import (Characteristics, EnergyBreakdown, InitialData, Trajectory,
                       build_characteristics, energy, evolve, field_snapshot, lift_class_D)
from .errors import *  # noqa: F401,F403
from .model_core import (ChainSpec, ModelSpec, NormalizedModel, build_chain, gamma,
                         krein_identity_residual, normalize)
from .potentials import PolynomialPotential
from .profiles import FieldProfile
from .scattering import (LPSemigroup, TransferFunction, TranslationRep, build_lp_semigroup,
                         incoming_rep, lp_evolve_check, outgoing_rep, transfer_eval,
                         translation_covariance_check, verify_scattering_relation)
from .spectral import SpectralData, essential_spectrum, point_spectrum, pp_empty_check

__version__ = "0.1.0"
