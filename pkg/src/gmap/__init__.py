"""Exact MAP inference for ``max_y H(F(y), G(y))`` by constrained clique-tree message passing."""

from .cliquetree import (
    CliqueNode,
    CliqueTree,
    build_clique_tree,
    degree_bound,
    min_fill_order,
    reduce_neighbors,
    reshape_dedup_sepsets,
)
from .combinators import Combinator, Gate, General, Product, Sum, constant_eta, identity_eta, requirement
from .errors import (
    AssignmentError,
    BudgetExceeded,
    CorruptRecord,
    GmapError,
    LengthError,
    MonotonicityError,
    NotReady,
    ParseError,
    ScaleError,
    ScopeError,
    ShapeError,
)
from .fileformat import parse_model, parse_model_text, write_model, write_model_text
from .inference import (
    MessageTable,
    Solution,
    backtrack,
    collect_messages,
    root_beliefs,
    run_constrained_mp,
    send_message,
    standard_junction_tree,
)
from .losses import LossSpec, loss_by_name
from .model import ADD, MAX, Accumulation, EnergyFactor, Model, StatisticFactor, build_model, evaluate_F, evaluate_G
from .oracle import brute_force, brute_force_message

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
