#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aarank/bench.hpp"

namespace aarank {

inline constexpr int kGameFileVersion = 1;
inline constexpr int kRunRecordVersion = 1;

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);
/// Strict decimal parse; rejects trailing garbage and non-finite values.
double parse_double(const std::string& text, const std::string& context);

/// GameFile JSON. Unknown fields throw when `strict`, else are reported in
/// `warnings`.
GameSpec parse_game_json(const std::string& text, bool strict, std::vector<std::string>& warnings,
                         const std::filesystem::path& base_dir = {});
GameSpec read_game_file(const std::filesystem::path& path, bool strict,
                        std::vector<std::string>& warnings);
/// Writes every payoff as a decimal string, or into a binary sidecar when
/// `sidecar` is non-empty (stored relative to the game file).
void write_game_file(const GameSpec& game, const std::filesystem::path& path,
                     const std::filesystem::path& sidecar = {});
nlohmann::json game_to_json(const GameSpec& game);

/// Binary tensor: "AARKTNSR", u32 version, u32 N, N x u32 counts, then N
/// tables of n little-endian f64.
void write_tensor_file(const std::filesystem::path& path, const ProfileIndex& index,
                       const std::vector<std::vector<double>>& tables);
std::vector<std::vector<double>> read_tensor_file(const std::filesystem::path& path,
                                                  std::vector<std::uint32_t>& counts);

// Result serialization -------------------------------------------------------

nlohmann::json to_json(const SolverConfig& c);
SolverConfig solver_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvoParams& p);
EvoParams evo_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OracleConfig& c);
OracleConfig oracle_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const IsingSpec& s);
IsingSpec ising_spec_from_json(const nlohmann::json& j);

/// Ranking with per-profile labels. Distributions above `max_entries` are
/// cut to their top entries and flagged.
nlohmann::json to_json(const RankingResult& r, const GameSpec& game,
                       std::size_t max_entries = 100000);
nlohmann::json to_json(const OracleResult& r, const GameSpec& game);
nlohmann::json to_json(const SweepResult& r);
nlohmann::json to_json(const ScalingRow& r);
nlohmann::json to_json(const IsingPhaseRow& r, const GameSpec& game);
nlohmann::json to_json(const CostReport& r);

// CSV ----------------------------------------------------------------------

std::string csv_escape(const std::string& field);
/// rank,profile,mass; `profiles` maps rows of the distribution to game
/// indices (identity when empty).
void write_rank_csv(std::ostream& out, const RankingResult& r, const GameSpec& game,
                    const std::vector<Index>& profiles = {});
void write_sweep_csv(std::ostream& out, const SweepResult& r);
void write_scaling_csv(std::ostream& out, const ScalingResult& r);
void write_ising_csv(std::ostream& out, const std::vector<IsingPhaseRow>& rows,
                     const GameSpec& game);
void write_cost_csv(std::ostream& out, const std::vector<CostReport>& rows);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace aarank
