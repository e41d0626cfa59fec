#pragma once

#include "optexec/core_model.hpp"
#include "optexec/qvi_solver.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace optexec {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kGridFormatVersion = 1;

/// A solved model as stored on disk: parameters echo plus both grids.
struct SolvedModel {
  ModelParams params;
  Solution solution;
};

/// Binary layout (little-endian):
///   "OPTXGRID" | u32 version | u32 len | len bytes of `name = value` params |
///   f64 horizon | i64 n_time_steps | i64 n_inventory |
///   per node (i-major, q-minor): i64 i, f64 t, i64 q, f64 h, f64 lo_depth,
///   f64 mm_spread, i32 mo_size, u8 impulse
[[nodiscard]] std::vector<std::uint8_t> encode_binary(const SolvedModel& m);
[[nodiscard]] SolvedModel decode_binary(const std::vector<std::uint8_t>& bytes);

/// CSV with `#` header lines (version, params, grid, units) and one row per node.
[[nodiscard]] std::string encode_csv(const SolvedModel& m);
[[nodiscard]] SolvedModel decode_csv(const std::string& text);

void write_binary(const std::filesystem::path& path, const SolvedModel& m);
[[nodiscard]] SolvedModel read_binary(const std::filesystem::path& path);

}  // namespace optexec
