"""Selling to buyers who weight probabilities: menus, two-stage pricing and robustness checks."""
from .lottery import BinaryLottery, GeneralLottery, Menu, buyer_choice, menu, utility
from .rae import TailIntegral, outcomes, rae_general, rae_nonneg
from .singleshot import binarize, revenue
from .twostage import PostedPriceMenu, TwoStageSetting, best_two_stage, revenue_two_stage, upper_bound
from .valuedist import ValueDistribution
from .weighting import WeightingFunction

__all__ = [
    "BinaryLottery", "GeneralLottery", "Menu", "buyer_choice", "menu", "utility",
    "TailIntegral", "outcomes", "rae_general", "rae_nonneg", "binarize", "revenue",
    "PostedPriceMenu", "TwoStageSetting", "best_two_stage", "revenue_two_stage", "upper_bound",
    "ValueDistribution", "WeightingFunction",
]
__version__ = "0.1.0"
