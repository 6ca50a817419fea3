"""Hitting and return times to Bowen balls: simulation and exact oracles."""

from .kernels import BACKEND
from .systems import SystemDescriptor, SystemKind, ShiftPoint, sample_invariant, step, distance
from .symbolic import BowenSpec, CylinderWord, WordSet, inner_and_annulus, resolve_ball
from .measure import AlphaModel, bowen_measure, cylinder_measure, phi, s_parameter
from .hitting import (lambda_estimator, mainthm_bound, sample_entry_times,
                      sample_return_times, survival_and_ks)
from .oracle import exact_conditional_survival, exact_kac_mean, exact_lambda, exact_survival
from .tower import TowerSpec, TowerPoint, sample_srb, tower_hitting_experiment

__version__ = "0.1.0"
