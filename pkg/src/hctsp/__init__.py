"""Homotopic convex-hull smoothing of TSP landscapes, with ILS baselines."""

from .landscape import (LandscapeReport, analyze_transform, auc, escaping_rate, excess, fdc,
                        local_optimum_density)
from .search import (SCHEDULES, LambdaSchedule, SearchParams, SearchResult, double_bridge, ils,
                     lsils, smoothing_schedule_search, three_opt_descent)
from .smoothing import (ConvexHullTsp, CostModel, HcTransform, construct_convex_hull_tsp,
                        hc_edge_cost, hc_objective, hc_transform)
from .trace import SearchTrace
from .tsp_model import (KNOWN_OPTIMA, NeighborTable, Tour, TspInstance, load_instance,
                        nearest_neighbor_lists, parse_tsplib, tour_cost, tour_distance)

__version__ = "0.1.0"

__all__ = [
    "LandscapeReport", "analyze_transform", "auc", "escaping_rate", "excess", "fdc",
    "local_optimum_density", "SCHEDULES", "LambdaSchedule", "SearchParams", "SearchResult",
    "double_bridge", "ils", "lsils", "smoothing_schedule_search", "three_opt_descent",
    "ConvexHullTsp", "CostModel", "HcTransform", "construct_convex_hull_tsp", "hc_edge_cost",
    "hc_objective", "hc_transform", "SearchTrace", "KNOWN_OPTIMA", "NeighborTable", "Tour",
    "TspInstance", "load_instance", "nearest_neighbor_lists", "parse_tsplib", "tour_cost",
    "tour_distance",
]
