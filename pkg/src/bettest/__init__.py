"""Testing statistical hypotheses by betting.

A bet is a non-negative payoff with null expectation 1; its value at the
observed outcome is the betting score, the factor by which the bettor
multiplied the money risked.
"""

__version__ = "0.1.0"

from .betting import (Bet, NeymanPearsonBet, TestReport, all_or_nothing_bet, build_report,  # noqa: E402
                      constant_bet, implied_alternative, implied_target, likelihood_ratio_bet,
                      make_bet, neyman_pearson_bet, power, score)
from .bounded_error import (HoeffdingStrategy, MixtureHoeffdingStrategy, guarantee_bound,  # noqa: E402
                            level_constant, measurement_capital_curve, run_bounded, warranty_interval)
from .calibration import (PValueFunction, calibrated_alternative, calibrated_alternative_tail,  # noqa: E402
                          calibrated_bet, pvalue, shrink_pvalue)
from .dists import (ChiSquaredModel, DiscreteDistribution, NormalModel, expect,  # noqa: E402
                    parse_model_spec, upper_tail)
from .errors import (AbsoluteContinuityError, BettingError, CalibrationError, DomainError,  # noqa: E402
                     InconsistentDataError, InvalidBetError, NumericError, ProtocolViolation)
from .protocol import (CapitalProcess, combine_parallel, combine_sequential, lift_joint_bet,  # noqa: E402
                       run_protocol)
from .warranty import (WarrantyCurve, capital_curve, composite_score, confidence_to_warranty,  # noqa: E402
                       multiply_curves, warranty_set)
