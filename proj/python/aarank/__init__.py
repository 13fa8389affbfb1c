"""Evolutionary ranking of joint strategy profiles."""

from ._aarank import (
    CapacityError,
    Game,
    OracleResult,
    RankingResult,
    TrialResult,
    __version__,
    best_response,
    bimatrix_game,
    builtin_game,
    builtin_game_ids,
    cost,
    fixation_probability,
    ising_game,
    ising_phase_study,
    oracle,
    planted_profile,
    random_game,
    rank,
    read_game,
    synthetic_dominant_game,
    write_game,
)

__all__ = [
    "CapacityError",
    "Game",
    "OracleResult",
    "RankingResult",
    "TrialResult",
    "__version__",
    "best_response",
    "bimatrix_game",
    "builtin_game",
    "builtin_game_ids",
    "cost",
    "fixation_probability",
    "ising_game",
    "ising_phase_study",
    "oracle",
    "planted_profile",
    "random_game",
    "rank",
    "read_game",
    "synthetic_dominant_game",
    "write_game",
]
