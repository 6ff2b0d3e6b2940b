#include "rfq/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace rfq {

static_assert(std::endian::native == std::endian::little,
              "batch binary format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'R', 'F', 'Q', 'I'};
constexpr std::uint32_t kVersion = 1;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, long row) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw MalformedInput("bad numeric field '" + s + "'", row);
  return v;
}

long parse_long(const std::string& s, long row) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw MalformedInput("bad integer field '" + s + "'", row);
  return v;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw InvalidConfig("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw InvalidConfig("cannot open '" + path.string() + "' for reading");
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_batch_csv(const TrajectoryBatch& batch,
                     const std::filesystem::path& path) {
  auto out = open_out(path, false);
  const int d = batch.state_dim();
  out << "trajectory_id,t";
  for (int j = 0; j < d; ++j) out << ",s_" << j;
  out << ",action,reward";
  for (int j = 0; j < d; ++j) out << ",s'_" << j;
  out << "\n";
  for (int i = 0; i < batch.num_trajectories(); ++i) {
    for (int t = 0; t < batch.horizon(); ++t) {
      out << i << ',' << t;
      for (int j = 0; j < d; ++j)
        out << ',' << format_double(batch.states[t](i, j));
      out << ',' << batch.actions[t][i] << ','
          << format_double(batch.rewards[t][i]);
      for (int j = 0; j < d; ++j)
        out << ',' << format_double(batch.next_states[t](i, j));
      out << "\n";
    }
  }
}

TrajectoryBatch read_batch_csv(const std::filesystem::path& path) {
  auto in = open_in(path, false);
  std::string line;
  if (!std::getline(in, line)) throw MalformedInput("empty file", 1);
  const auto header = split_csv_line(line);
  if (header.size() < 6 || header[0] != "trajectory_id")
    throw MalformedInput("unexpected batch CSV header", 1);
  const int d = static_cast<int>((header.size() - 4) / 2);

  struct Row {
    int trajectory, t, action;
    double reward;
    Eigen::VectorXd s, sp;
  };
  std::vector<Row> rows;
  long lineno = 1;
  int max_traj = -1, max_t = -1, max_action = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (static_cast<int>(f.size()) != 4 + 2 * d)
      throw MalformedInput("wrong field count", lineno);
    Row r;
    r.trajectory = static_cast<int>(parse_long(f[0], lineno));
    r.t = static_cast<int>(parse_long(f[1], lineno));
    r.s.resize(d);
    for (int j = 0; j < d; ++j) r.s[j] = parse_double(f[2 + j], lineno);
    r.action = static_cast<int>(parse_long(f[2 + d], lineno));
    r.reward = parse_double(f[3 + d], lineno);
    r.sp.resize(d);
    for (int j = 0; j < d; ++j) r.sp[j] = parse_double(f[4 + d + j], lineno);
    max_traj = std::max(max_traj, r.trajectory);
    max_t = std::max(max_t, r.t);
    max_action = std::max(max_action, r.action);
    rows.push_back(std::move(r));
  }
  const int n = max_traj + 1;
  const int T = max_t + 1;
  if (n < 1 || T < 1 || rows.size() != static_cast<std::size_t>(n) * T)
    throw MalformedInput("incomplete batch", lineno);

  TrajectoryBatch batch;
  batch.num_actions = max_action + 1;
  batch.states.assign(T, Eigen::MatrixXd(n, d));
  batch.actions.assign(T, Eigen::VectorXi(n));
  batch.rewards.assign(T, Eigen::VectorXd(n));
  batch.next_states.assign(T, Eigen::MatrixXd(n, d));
  for (const auto& r : rows) {
    batch.states[r.t].row(r.trajectory) = r.s.transpose();
    batch.actions[r.t][r.trajectory] = r.action;
    batch.rewards[r.t][r.trajectory] = r.reward;
    batch.next_states[r.t].row(r.trajectory) = r.sp.transpose();
  }
  return batch;
}

void write_batch_binary(const TrajectoryBatch& batch,
                        const std::filesystem::path& path) {
  auto out = open_out(path, true);
  const std::uint64_t n = static_cast<std::uint64_t>(batch.num_trajectories());
  const std::uint32_t T = static_cast<std::uint32_t>(batch.horizon());
  const std::uint32_t d = static_cast<std::uint32_t>(batch.state_dim());
  const std::uint32_t a = static_cast<std::uint32_t>(batch.num_actions);
  const std::uint32_t reserved = 0;
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), 4);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&T), 4);
  out.write(reinterpret_cast<const char*>(&d), 4);
  out.write(reinterpret_cast<const char*>(&a), 4);
  out.write(reinterpret_cast<const char*>(&reserved), 4);

  const auto put = [&out](double v) {
    out.write(reinterpret_cast<const char*>(&v), 8);
  };
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint32_t t = 0; t < T; ++t) {
      for (std::uint32_t j = 0; j < d; ++j) put(batch.states[t](i, j));
      put(static_cast<double>(batch.actions[t][i]));
      put(batch.rewards[t][i]);
      for (std::uint32_t j = 0; j < d; ++j) put(batch.next_states[t](i, j));
    }
  }
  out.write(reinterpret_cast<const char*>(&batch.seed), 8);
  out.write(reinterpret_cast<const char*>(&batch.spec_fingerprint), 8);
}

TrajectoryBatch read_batch_binary(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  char magic[4];
  std::uint32_t version, T, d, a, reserved;
  std::uint64_t n;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&T), 4);
  in.read(reinterpret_cast<char*>(&d), 4);
  in.read(reinterpret_cast<char*>(&a), 4);
  in.read(reinterpret_cast<char*>(&reserved), 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw MalformedInput("not an RFQI batch file", 0);
  if (version != kVersion)
    throw MalformedInput("unsupported batch version", 0);

  TrajectoryBatch batch;
  batch.num_actions = static_cast<int>(a);
  batch.states.assign(T, Eigen::MatrixXd(n, d));
  batch.actions.assign(T, Eigen::VectorXi(n));
  batch.rewards.assign(T, Eigen::VectorXd(n));
  batch.next_states.assign(T, Eigen::MatrixXd(n, d));
  const auto get = [&in]() {
    double v;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint32_t t = 0; t < T; ++t) {
      for (std::uint32_t j = 0; j < d; ++j) batch.states[t](i, j) = get();
      batch.actions[t][i] = static_cast<int>(get());
      batch.rewards[t][i] = get();
      for (std::uint32_t j = 0; j < d; ++j) batch.next_states[t](i, j) = get();
    }
  }
  in.read(reinterpret_cast<char*>(&batch.seed), 8);
  in.read(reinterpret_cast<char*>(&batch.spec_fingerprint), 8);
  if (!in) throw MalformedInput("truncated batch file", 0);
  return batch;
}

void write_mdp_spec(const MdpSpec& spec, const std::filesystem::path& path) {
  auto out = open_out(path, false);
  out << "d = " << spec.d << "\n";
  out << "num_actions = " << spec.num_actions << "\n";
  out << "horizon = " << spec.horizon << "\n";
  out << "discount = " << format_double(spec.discount) << "\n";
  out << "state_noise_sd = " << format_double(spec.state_noise_sd) << "\n";
  out << "reward_noise_sd = " << format_double(spec.reward_noise_sd) << "\n";
  out << "spectral_cap = " << format_double(spec.spectral_cap) << "\n";
  out << "beta_min_floor = " << format_double(spec.beta_min_floor) << "\n";
  out << "support =";
  for (int j : spec.support.indices) out << ' ' << j;
  out << "\n";
  for (int a = 0; a < spec.num_actions; ++a) {
    out << "reward_coef " << a << " =";
    for (Eigen::Index j = 0; j < spec.d; ++j)
      out << ' ' << format_double(spec.reward_coef[a][j]);
    out << "\n";
    out << "transition " << a << "\n";
    for (Eigen::Index i = 0; i < spec.d; ++i) {
      for (Eigen::Index j = 0; j < spec.d; ++j)
        out << (j ? " " : "") << format_double(spec.transition[a](i, j));
      out << "\n";
    }
  }
}

void write_qfun_csv(const LinearQ& qfun, const std::filesystem::path& path) {
  auto out = open_out(path, false);
  out << "t,action,coordinate,coefficient\n";
  for (int t = 0; t < qfun.horizon(); ++t)
    for (int a = 0; a < qfun.num_actions; ++a)
      for (int j = 0; j < qfun.d; ++j)
        out << t << ',' << a << ',' << j << ','
            << format_double(qfun.coef[t][a][j]) << "\n";
}

void write_coefficients_csv(const Eigen::VectorXd& coefficients,
                            const std::filesystem::path& path) {
  auto out = open_out(path, false);
  out << "index,coefficient\n";
  for (Eigen::Index j = 0; j < coefficients.size(); ++j)
    out << j << ',' << format_double(coefficients[j]) << "\n";
}

void write_fqi_diagnostics_csv(const FqiResult& result,
                               const std::filesystem::path& path) {
  auto out = open_out(path, false);
  out << "t,penalty,threshold,support_size,iterations,kkt_violation\n";
  for (std::size_t t = 0; t < result.per_timestep.size(); ++t) {
    const auto& diag = result.per_timestep[t];
    out << t << ',' << format_double(diag.penalty) << ','
        << format_double(diag.threshold) << ',' << diag.support_size << ','
        << diag.lasso_iterations << ',' << format_double(diag.kkt_violation)
        << "\n";
  }
}

MdpSpec read_mdp_spec(const std::filesystem::path& path) {
  auto in = open_in(path, false);
  MdpSpec spec;
  std::string line;
  long lineno = 0;
  const auto next_line = [&]() {
    if (!std::getline(in, line)) throw MalformedInput("truncated spec", lineno);
    ++lineno;
  };
  const auto scalar_after = [&](const std::string& expect) {
    next_line();
    std::istringstream ss(line);
    std::string key, eq;
    ss >> key >> eq;
    if (key != expect || eq != "=")
      throw MalformedInput("expected '" + expect + " = ...'", lineno);
    std::string rest;
    ss >> rest;
    return rest;
  };
  spec.d = static_cast<int>(parse_long(scalar_after("d"), lineno));
  spec.num_actions =
      static_cast<int>(parse_long(scalar_after("num_actions"), lineno));
  spec.horizon = static_cast<int>(parse_long(scalar_after("horizon"), lineno));
  spec.discount = parse_double(scalar_after("discount"), lineno);
  spec.state_noise_sd = parse_double(scalar_after("state_noise_sd"), lineno);
  spec.reward_noise_sd = parse_double(scalar_after("reward_noise_sd"), lineno);
  spec.spectral_cap = parse_double(scalar_after("spectral_cap"), lineno);
  spec.beta_min_floor = parse_double(scalar_after("beta_min_floor"), lineno);

  next_line();
  {
    std::istringstream ss(line);
    std::string key, eq;
    ss >> key >> eq;
    if (key != "support" || eq != "=")
      throw MalformedInput("expected 'support = ...'", lineno);
    int j;
    while (ss >> j) spec.support.indices.push_back(j);
  }
  for (int a = 0; a < spec.num_actions; ++a) {
    next_line();
    {
      std::istringstream ss(line);
      std::string key, idx, eq;
      ss >> key >> idx >> eq;
      if (key != "reward_coef" || eq != "=")
        throw MalformedInput("expected 'reward_coef <a> = ...'", lineno);
      Eigen::VectorXd beta(spec.d);
      for (int j = 0; j < spec.d; ++j)
        if (!(ss >> beta[j]))
          throw MalformedInput("short reward_coef row", lineno);
      spec.reward_coef.push_back(std::move(beta));
    }
    next_line();  // "transition <a>"
    Eigen::MatrixXd m(spec.d, spec.d);
    for (int i = 0; i < spec.d; ++i) {
      next_line();
      std::istringstream ss(line);
      for (int j = 0; j < spec.d; ++j)
        if (!(ss >> m(i, j)))
          throw MalformedInput("short transition row", lineno);
    }
    spec.transition.push_back(std::move(m));
  }
  return spec;
}

}  // namespace rfq
