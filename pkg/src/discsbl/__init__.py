"""Finite-alphabet signal reconstruction with sparse Bayesian learning.

Two solvers recover a complex signal whose entries come from a known finite
alphabet, given underdetermined noisy linear measurements ``y = A x + v``:

* :func:`vbi_run` -- variational Bayesian inference with a Gaussian/Gamma
  prior that pulls every entry toward one alphabet symbol; works for any
  measurement matrix.
* :func:`gamp_run` -- a GAMP variant that uses the exact mixture-of-points
  prior; fast, but only reliable for i.i.d. Gaussian matrices.
"""

from .errors import InvalidArgument, NotPSDError, NumericalFailure
from .alphabet import (
    DiscreteSignal,
    FiniteAlphabet,
    quantize,
    sample_signal,
    unit_circle_alphabet,
)
from .measurement import (
    ProblemInstance,
    bessel_j0,
    correlation_matrix,
    gen_correlated,
    gen_iid_gaussian,
    make_instance,
    matrix_sqrt_psd,
)
from .special import digamma
from .vbi import (
    VbiConfig,
    VbiResult,
    VbiState,
    free_energy,
    update_alpha,
    update_g,
    update_gamma,
    update_x,
    vbi_init,
    vbi_run,
)
from .gamp import (
    GampConfig,
    GampResult,
    GampState,
    gamp_init,
    gamp_run,
    gamp_sweep,
    input_channel,
    output_channel,
    update_alpha_gamp,
)
from .baselines import standard_sbl_run
from .experiments import (
    SweepConfig,
    SweepResult,
    mse_curve,
    preset,
    run_convergence,
    run_sweep,
    ser,
    success_rate,
)

__version__ = "0.1.0"
