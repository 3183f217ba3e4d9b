"""Standard sparse Bayesian learning as a comparison baseline."""

from __future__ import annotations

import numpy as np

from .alphabet import FiniteAlphabet, quantize
from .vbi import VbiConfig, VbiResult, vbi_run

# a single symbol at the origin reduces the prior to the usual sparsity prior
SPARSITY_ALPHABET = FiniteAlphabet(np.array([0j]), np.array([1.0]))


def standard_sbl_run(A, y, alphabet: FiniteAlphabet, config: VbiConfig | None = None, x_true=None, callback=None) -> VbiResult:
    """Run the VBI machinery with the zero-mean sparsity prior, then project.

    The returned ``x_hat`` is the nearest-symbol projection of the posterior
    mean onto ``alphabet``; ``phi_final`` is the trivial single column.
    """
    result = vbi_run(A, y, SPARSITY_ALPHABET, config, x_true=x_true, callback=callback)
    result.x_hat = quantize(result.mu_final, alphabet)
    return result
