"""Computable quantities that enter the recovery guarantees."""
from .balancing import (BalancingReport, BalancingSweep, TildeM, balancing_residuals,
                        balancing_thresholds, draw_level_supports, draw_supports,
                        minimal_balancing_m, tilde_m)
from .bquantity import BSample, BValue, b_quantity, b_tilde, e_experiment, e_value
from .coherence import BlockNorms, LocalCoherenceMatrix, block_norms, coherence, local_coherence
from .localization import LocalizationReport, i_p, intrinsic_localization, localization_constant
from .sparsity import (KappaEstimate, LevelSparsity, RelativeSparsity, kappa_localized,
                       kappa_ratios, kappa_tilde, level_sparsity, relative_sparsity,
                       sN_term_approx)
from .theorem import (TheoremReport, check_theorem_conditions, golfing_L, solve_m_hat,
                      theorem_L)

__all__ = [n for n in dir() if not n.startswith("_")]
