#include "optexec/grid_io.hpp"

#include <doctest.h>

#include <cstring>
#include <random>

using namespace optexec;

namespace {

bool bit_equal(const RowMatrixXd& a, const RowMatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

void check_same(const SolvedModel& a, const SolvedModel& b) {
  CHECK(a.params == b.params);
  CHECK(a.solution.values.grid == b.solution.values.grid);
  CHECK(bit_equal(a.solution.values.h, b.solution.values.h));
  CHECK(bit_equal(a.solution.policy.lo_depth, b.solution.policy.lo_depth));
  CHECK(bit_equal(a.solution.policy.mm_spread, b.solution.policy.mm_spread));
  CHECK(a.solution.policy.mo_size == b.solution.policy.mo_size);
  CHECK(a.solution.policy.impulse_active == b.solution.policy.impulse_active);
}

SolvedModel random_model(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  auto p = reference_params();
  p.horizon = 5.0 * u(rng);
  p.initial_inventory = static_cast<std::int64_t>(rng() % 6);
  p.penalty *= u(rng);
  p.lo_impact *= u(rng);
  p.mm_enabled = rng() % 2 == 0;
  const GridSpec g(p.horizon, 50 + static_cast<std::int64_t>(rng() % 100));
  return {p, solve(p, g)};
}

}  // namespace

TEST_CASE("binary round trip is bit exact (property)") {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 20; ++k) {
    const auto m = random_model(rng);
    const auto bytes = encode_binary(m);
    const auto back = decode_binary(bytes);
    check_same(m, back);
    CHECK(encode_binary(back) == bytes);
  }
}

TEST_CASE("csv round trip is exact") {
  std::mt19937_64 rng(22);
  for (int k = 0; k < 5; ++k) {
    const auto m = random_model(rng);
    const auto text = encode_csv(m);
    check_same(m, decode_csv(text));
    CHECK(text.find("# units:") != std::string::npos);
  }
}

TEST_CASE("version mismatch and corruption are rejected") {
  std::mt19937_64 rng(23);
  const auto m = random_model(rng);
  auto bytes = encode_binary(m);
  auto bumped = bytes;
  bumped[8] = static_cast<std::uint8_t>(kGridFormatVersion + 1);
  CHECK_THROWS_AS((void)decode_binary(bumped), FormatError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS((void)decode_binary(magic), FormatError);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS((void)decode_binary(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS((void)decode_binary(trailing), FormatError);

  auto csv = encode_csv(m);
  const auto pos = csv.find("# format_version = 1");
  REQUIRE(pos != std::string::npos);
  csv.replace(pos, 20, "# format_version = 9");
  CHECK_THROWS_AS((void)decode_csv(csv), FormatError);
}
