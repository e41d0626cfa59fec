#include "optexec/grid_io.hpp"

#include "optexec/config.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

namespace optexec {

static_assert(std::endian::native == std::endian::little, "binary grid format assumes little-endian");

namespace {

constexpr char kMagic[8] = {'O', 'P', 'T', 'X', 'G', 'R', 'I', 'D'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}
  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, need(sizeof(T)), sizeof(T));
    return v;
  }
  std::string get_string(std::size_t n) {
    const auto* p = need(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  [[nodiscard]] bool done() const { return pos_ == in_.size(); }

 private:
  const std::uint8_t* need(std::size_t n) {
    if (in_.size() - pos_ < n) throw FormatError("policy file truncated");
    const auto* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

ModelParams params_from_text(const std::string& text) {
  try {
    return parse_config(text).model;
  } catch (const ConfigError& e) {
    throw FormatError(std::string("policy file parameter block: ") + e.what());
  }
}

Solution empty_solution(const GridSpec& grid, std::int64_t n_q) {
  const auto n_t = grid.n_time_steps() + 1;
  return Solution{ValueGrid{RowMatrixXd(n_t, n_q), grid},
                  PolicyGrid{RowMatrixXd(n_t, n_q), RowMatrixXd(n_t, n_q),
                             RowMatrixXb::Constant(n_t, n_q, false), RowMatrixXi::Zero(n_t, n_q)}};
}

GridSpec grid_or_throw(double horizon, std::int64_t n_t) {
  try {
    return GridSpec(horizon, n_t);
  } catch (const DomainError& e) {
    throw FormatError(std::string("policy file grid: ") + e.what());
  }
}

void check_shape(const SolvedModel& m) {
  const auto& s = m.solution;
  const auto rows = s.values.grid.n_time_steps() + 1;
  const auto cols = m.params.initial_inventory + 1;
  if (s.values.h.rows() != rows || s.values.h.cols() != cols || s.policy.lo_depth.rows() != rows ||
      s.policy.lo_depth.cols() != cols || s.policy.mm_spread.rows() != rows ||
      s.policy.mm_spread.cols() != cols || s.policy.mo_size.rows() != rows ||
      s.policy.mo_size.cols() != cols || s.policy.impulse_active.rows() != rows ||
      s.policy.impulse_active.cols() != cols)
    throw FormatError("grid shapes do not match parameters");
}

double parse_field_double(std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw FormatError("bad numeric field '" + std::string(v) + "'");
  return out;
}

std::int64_t parse_field_int(std::string_view v) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw FormatError("bad integer field '" + std::string(v) + "'");
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_binary(const SolvedModel& m) {
  check_shape(m);
  const auto& v = m.solution.values;
  const auto& pol = m.solution.policy;
  const std::string params = render_model(m.params);
  Writer w;
  w.put_bytes(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(kGridFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  w.put_bytes(params.data(), params.size());
  w.put<double>(v.grid.horizon());
  w.put<std::int64_t>(v.grid.n_time_steps());
  w.put<std::int64_t>(v.h.cols());
  for (Eigen::Index i = 0; i < v.h.rows(); ++i) {
    for (Eigen::Index q = 0; q < v.h.cols(); ++q) {
      w.put<std::int64_t>(i);
      w.put<double>(v.grid.time(i));
      w.put<std::int64_t>(q);
      w.put<double>(v.h(i, q));
      w.put<double>(pol.lo_depth(i, q));
      w.put<double>(pol.mm_spread(i, q));
      w.put<std::int32_t>(pol.mo_size(i, q));
      w.put<std::uint8_t>(pol.impulse_active(i, q) ? 1 : 0);
    }
  }
  return w.take();
}

SolvedModel decode_binary(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.get_string(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
    throw FormatError("not a policy grid file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kGridFormatVersion)
    throw FormatError("unsupported policy file version " + std::to_string(version) +
                      " (expected " + std::to_string(kGridFormatVersion) + ")");
  const auto len = r.get<std::uint32_t>();
  const auto params = params_from_text(r.get_string(len));
  const auto horizon = r.get<double>();
  const auto n_t = r.get<std::int64_t>();
  const auto n_q = r.get<std::int64_t>();
  if (n_q != params.initial_inventory + 1) throw FormatError("inventory count mismatch");
  if (horizon != params.horizon) throw FormatError("grid horizon mismatch");
  SolvedModel m{params, empty_solution(grid_or_throw(horizon, n_t), n_q)};
  auto& v = m.solution.values;
  auto& pol = m.solution.policy;
  for (std::int64_t i = 0; i <= n_t; ++i) {
    for (std::int64_t q = 0; q < n_q; ++q) {
      if (r.get<std::int64_t>() != i) throw FormatError("row index out of order");
      (void)r.get<double>();
      if (r.get<std::int64_t>() != q) throw FormatError("inventory index out of order");
      v.h(i, q) = r.get<double>();
      pol.lo_depth(i, q) = r.get<double>();
      pol.mm_spread(i, q) = r.get<double>();
      pol.mo_size(i, q) = r.get<std::int32_t>();
      pol.impulse_active(i, q) = r.get<std::uint8_t>() != 0;
    }
  }
  if (!r.done()) throw FormatError("trailing bytes after policy grid");
  return m;
}

std::string encode_csv(const SolvedModel& m) {
  check_shape(m);
  const auto& v = m.solution.values;
  const auto& pol = m.solution.policy;
  std::ostringstream o;
  o << "# optexec policy grid\n# format_version = " << kGridFormatVersion << '\n';
  std::istringstream params(render_model(m.params));
  for (std::string line; std::getline(params, line);) o << "# param " << line << '\n';
  o << "# grid horizon = " << format_double(v.grid.horizon()) << '\n'
    << "# grid n_time_steps = " << v.grid.n_time_steps() << '\n'
    << "# units: t [time], q [inventory units], h [cash], lo_depth [price], "
       "mm_spread [price], mo_size [inventory units], impulse [flag]\n"
    << "i,t,q,h,lo_depth,mm_spread,mo_size,impulse\n";
  for (Eigen::Index i = 0; i < v.h.rows(); ++i)
    for (Eigen::Index q = 0; q < v.h.cols(); ++q)
      o << i << ',' << format_double(v.grid.time(i)) << ',' << q << ',' << format_double(v.h(i, q))
        << ',' << format_double(pol.lo_depth(i, q)) << ',' << format_double(pol.mm_spread(i, q))
        << ',' << pol.mo_size(i, q) << ',' << (pol.impulse_active(i, q) ? 1 : 0) << '\n';
  return o.str();
}

SolvedModel decode_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string params;
  double horizon = 0.0;
  std::int64_t n_t = -1;
  bool version_seen = false;
  while (std::getline(in, line) && line.starts_with("#")) {
    std::string_view s(line);
    if (s.starts_with("# format_version = ")) {
      const auto ver = parse_field_int(s.substr(19));
      if (ver != kGridFormatVersion)
        throw FormatError("unsupported policy file version " + std::to_string(ver));
      version_seen = true;
    } else if (s.starts_with("# param ")) {
      params += std::string(s.substr(8)) + '\n';
    } else if (s.starts_with("# grid horizon = ")) {
      horizon = parse_field_double(s.substr(17));
    } else if (s.starts_with("# grid n_time_steps = ")) {
      n_t = parse_field_int(s.substr(22));
    }
  }
  if (!version_seen) throw FormatError("policy CSV has no format_version header");
  if (line != "i,t,q,h,lo_depth,mm_spread,mo_size,impulse") throw FormatError("bad CSV column header");
  const auto model = params_from_text(params);
  const auto n_q = model.initial_inventory + 1;
  SolvedModel m{model, empty_solution(grid_or_throw(horizon, n_t), n_q)};
  auto& v = m.solution.values;
  auto& pol = m.solution.policy;
  std::int64_t count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (auto c = rest.find(','); ; c = rest.find(',')) {
      f.push_back(rest.substr(0, c));
      if (c == std::string_view::npos) break;
      rest = rest.substr(c + 1);
    }
    if (f.size() != 8) throw FormatError("CSV row has " + std::to_string(f.size()) + " fields");
    const auto i = parse_field_int(f[0]);
    const auto q = parse_field_int(f[2]);
    if (i < 0 || i > n_t || q < 0 || q >= n_q) throw FormatError("CSV node index out of range");
    v.h(i, q) = parse_field_double(f[3]);
    pol.lo_depth(i, q) = parse_field_double(f[4]);
    pol.mm_spread(i, q) = parse_field_double(f[5]);
    pol.mo_size(i, q) = static_cast<std::int32_t>(parse_field_int(f[6]));
    pol.impulse_active(i, q) = parse_field_int(f[7]) != 0;
    ++count;
  }
  if (count != (n_t + 1) * n_q) throw FormatError("CSV node count mismatch");
  return m;
}

void write_binary(const std::filesystem::path& path, const SolvedModel& m) {
  const auto bytes = encode_binary(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

SolvedModel read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_binary(bytes);
}

}  // namespace optexec
