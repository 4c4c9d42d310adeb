"""Relaxed energies of non-convex one-dimensional lattice potentials with long-range quadratic kernels.

The m-transform ``Q_m f`` of a bi-convex potential ``f`` is the per-bond energy
of asymptotically optimal lattice configurations at average strain ``z``,
minus the affine kernel energy ``a_m z^2``.  Closed forms are provided for
concentrated kernels (nearest neighbours plus one distance ``M``) and for
exponential kernels; an exact brute-force lattice oracle validates both.
"""

from .concentrated import (ConcentratedTransform, LockingDiagram, constrained_transform_concentrated,
                           iterate_transform, locking_energy, lower_bound_general_kernel,
                           m_transform_concentrated, phase_function_concentrated)
from .continuum import (ContinuumParams, equivalence_parameters, homogenized_density_lattice,
                        homogenized_density_naive, lambda_modulus, naive_parameters)
from .exponential import (CanonicalSet, ChainParameters, ExponentialDiagram, ExponentialTransform, GNFamily,
                          canonical_set, cell_energy_gN, chain_parameters, constrained_transform_exponential,
                          gn_family, inverse_chain_parameters, locking_intervals_exponential,
                          m_transform_exponential, nt_coefficient, phase_function_exponential)
from .kernels import (ConcentratedKernel, ExplicitKernel, ExponentialKernel, Kernel, NearestKernel,
                      kernel_second_moment, kernel_truncation_range, m_stability_margin)
from .oracle import (LatticeProblem, OracleResult, effective_nn_strength, minimize_finite_lattice,
                     minimize_periodic_cell, minimize_with_phase_constraint, solve_spin_subproblem)
from .phase import (PhaseMultifunction, constrained_convex_potential, constrained_convexification_zero_kernel,
                    phase_multifunction)
from .piecewise import PiecewiseQuadratic, QuadraticPiece, conjugate, convex_envelope, infimal_split, quadratic
from .potentials import (BiconvexPotential, convex_affine, double_well, double_well_biquadratic, from_branches,
                         truncated_quadratic)

__version__ = "0.1.0"
