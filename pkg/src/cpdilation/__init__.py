"""Moment polynomials, the generator expectation, and finite GNS dilations of CP maps on M_d."""

from .algebra import (
    Channel,
    channel_apply,
    channel_from_kraus,
    channel_is_unital,
    channel_power_apply,
    psd_check,
    random_channel,
)
from .dilation import (
    DilationModel,
    TruncationParams,
    build_gns,
    compress_to_A,
    enumerate_generators,
    represent,
    verify_moment_formula,
    verify_standard_properties,
)
from .expectation import (
    FiniteSection,
    Generator,
    expectation_E0,
    gen_involution,
    gen_make,
    gen_product,
    gen_shift,
    gram_matrix,
    key_lemma_step,
)
from .moments import moment_eval, moment_normal_form, moment_render, moment_symmetry_residual
from .words import Word, make_word, word_height, word_involution, word_product, word_shift

__version__ = "0.1.0"
