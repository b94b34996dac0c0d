"""Exact tools for learning contracts in the hidden-action principal-agent model."""

from __future__ import annotations

from .bounded import (
    BoundedGrid,
    DirectionNet,
    bounded_grid,
    certified_opt,
    direction_net,
    erm_bounded,
    opt_over_set,
)
from .combinatorial import (
    CombinatorialType,
    CountingOracle,
    brute_force_demand,
    critical_values_comb,
    demand,
    erm_linear_comb,
    greedy_additive_demand,
    make_type,
    opt_linear_comb,
)
from .errors import InstanceError, ResourceCapError
from .io import InstanceFile, load, save
from .linear import (
    CriticalValueProfile,
    EpsGrid,
    critical_values,
    eps_grid,
    erm_linear,
    opt_linear,
    opt_linear_grid,
    reward_steps,
)
from .menus import Menu, erm_menu, menu_choice, menu_utility, opt_menu
from .model import (
    INF,
    AgentType,
    Contract,
    LinearContract,
    Rewards,
    TypeDistribution,
    agent_utility,
    best_response,
    expected_principal_utility,
    principal_action_utility,
    principal_reward,
    principal_utility,
    to_binary,
)
from .online import OnlineRun, ftl_run, regret_summary
from .pdim import (
    LadderParams,
    ShatterInstance,
    bitmask_shatter_instance,
    grid_forcing_distribution,
    ladder_type,
    verify_shattering,
)
from .spaces import BoxGrid, ContractSearchSpace, ExplicitSpace, LinearSpace

__all__ = [name for name in dir() if not name.startswith("_") and name != "annotations"]
