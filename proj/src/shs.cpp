#include "aoi/shs.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace aoi::shs {

namespace {

// Reciprocal condition estimate below which a system is treated as singular.
constexpr double kSingularRcond = 1e-13;
constexpr double kNegativeTolerance = 1e-9;

bool is_binary(double value) { return value == 0.0 || value == 1.0; }

Eigen::MatrixXd keep_receiver_age_reset_packet() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 1.0;
  return a;
}

Eigen::MatrixXd deliver_packet() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(1, 0) = 1.0;
  return a;
}

// Every state reaches every other state along non-self edges.
bool strongly_connected(const ShsChain& chain) {
  const int n = chain.n_states;
  auto reach_all = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const int q = stack.back();
      stack.pop_back();
      for (const auto& t : chain.transitions) {
        if (t.from == t.to) continue;
        const int src = forward ? t.from : t.to;
        const int dst = forward ? t.to : t.from;
        if (src == q && !seen[dst]) {
          seen[dst] = 1;
          stack.push_back(dst);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
  };
  return n > 0 && reach_all(true) && reach_all(false);
}

}  // namespace

void ShsChain::check() const {
  if (n_states <= 0 || age_dim <= 0) {
    throw Error(ErrorKind::InvalidChain, "chain needs at least one state and one age component");
  }
  if (growth.rows() != n_states || growth.cols() != age_dim) {
    throw Error(ErrorKind::InvalidChain,
                fmt::format("growth must be {}x{}, got {}x{}", n_states, age_dim, growth.rows(), growth.cols()));
  }
  for (int q = 0; q < n_states; ++q) {
    if (growth(q, 0) != 1.0) {
      throw Error(ErrorKind::InvalidChain, fmt::format("state {}: receiver age must grow at unit rate", q));
    }
    for (int j = 0; j < age_dim; ++j) {
      if (!is_binary(growth(q, j))) {
        throw Error(ErrorKind::InvalidChain, fmt::format("growth({}, {}) is not binary", q, j));
      }
    }
  }
  for (std::size_t l = 0; l < transitions.size(); ++l) {
    const auto& t = transitions[l];
    if (t.from < 0 || t.from >= n_states || t.to < 0 || t.to >= n_states) {
      throw Error(ErrorKind::InvalidChain, fmt::format("transition {} references a missing state", l));
    }
    if (!(t.rate > 0.0)) {
      throw Error(ErrorKind::DegenerateRate, fmt::format("transition {} has rate {}", l, t.rate));
    }
    if (t.reset.rows() != age_dim || t.reset.cols() != age_dim) {
      throw Error(ErrorKind::InvalidChain, fmt::format("transition {}: reset must be {}x{}", l, age_dim, age_dim));
    }
    if (!t.reset.unaryExpr([](double x) { return is_binary(x) ? 0.0 : 1.0; }).isZero()) {
      throw Error(ErrorKind::InvalidChain, fmt::format("transition {}: reset is not binary", l));
    }
  }
}

ShsChain build_chain(PolicyScheme ps, double lambda, double mu, double p, double k) {
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd fresh = keep_receiver_age_reset_packet();

  ShsChain chain;
  chain.n_states = 3;
  chain.age_dim = 2;
  chain.growth.resize(3, 2);
  chain.growth << 1, 0,
                  1, 1,
                  1, 1;

  auto add = [&](int from, int to, double rate, const Eigen::MatrixXd& reset) {
    if (!(rate > 0.0)) {
      throw Error(ErrorKind::DegenerateRate,
                  fmt::format("{} -> {} rate is {} (lambda={}, mu={}, p={}, k={})", from, to, rate, lambda, mu, p, k));
    }
    chain.transitions.push_back(Transition{from, to, rate, reset});
  };

  add(kIdle, kWaiting, lambda, fresh);             // arrival to an idle device
  add(kWaiting, kService, k, identity);            // backoff ends on an idle channel
  add(kWaiting, kWaiting, lambda, fresh);          // arrival replaces the waiting packet
  add(kService, kIdle, mu * p, deliver_packet());  // successful delivery
  if (p < 1.0) {
    const int after_failure = ps.policy == Policy::I ? kIdle : ps.policy == Policy::W ? kWaiting : kService;
    add(kService, after_failure, mu * (1.0 - p), identity);
  }
  if (ps.scheme == Scheme::WP) {
    add(kService, kService, lambda, fresh);  // preemption by a fresh arrival
  }
  return chain;
}

StationaryDistribution stationary(const ShsChain& chain) {
  chain.check();
  if (!strongly_connected(chain)) {
    throw Error(ErrorKind::NotIrreducible, "chain is not irreducible over its non-self transitions");
  }
  const int n = chain.n_states;
  Eigen::MatrixXd generator = Eigen::MatrixXd::Zero(n, n);
  for (const auto& t : chain.transitions) {
    if (t.from == t.to) continue;
    generator(t.from, t.to) += t.rate;
    generator(t.from, t.from) -= t.rate;
  }
  // pi Q = 0 with one balance row swapped for sum(pi) = 1.
  Eigen::MatrixXd system = generator.transpose();
  system.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  if (lu.rcond() < kSingularRcond) {
    throw Error(ErrorKind::NotIrreducible, "balance equations are singular");
  }
  return StationaryDistribution{lu.solve(rhs)};
}

AgeSolution solve_age_system(const ShsChain& chain, const StationaryDistribution& pi) {
  chain.check();
  const int n = chain.n_states;
  const int m = chain.age_dim;
  if (pi.pi.size() != n) {
    throw Error(ErrorKind::PreconditionViolation, fmt::format("pi has {} entries for {} states", pi.pi.size(), n));
  }

  // Unknown v(q, j) lives at index q * m + j; row (q, j) is one component of the balance.
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(n * m, n * m);
  Eigen::VectorXd rhs(n * m);
  for (int q = 0; q < n; ++q) {
    for (int j = 0; j < m; ++j) rhs(q * m + j) = chain.growth(q, j) * pi.pi(q);
  }
  for (const auto& t : chain.transitions) {
    for (int j = 0; j < m; ++j) {
      system(t.from * m + j, t.from * m + j) += t.rate;
      for (int i = 0; i < m; ++i) {
        if (t.reset(i, j) != 0.0) system(t.to * m + j, t.from * m + i) -= t.rate * t.reset(i, j);
      }
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  if (!(lu.rcond() >= kSingularRcond)) {
    throw Error(ErrorKind::SingularAgeSystem, "age balance equations are singular");
  }
  const Eigen::VectorXd flat = lu.solve(rhs);
  if (!flat.allFinite()) {
    throw Error(ErrorKind::SingularAgeSystem, "age balance solution is not finite");
  }

  AgeSolution out;
  out.pi = pi;
  out.v = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(), n, m);
  if (out.v.minCoeff() < -kNegativeTolerance) {
    throw Error(ErrorKind::NegativeSolution, fmt::format("v has entry {}", out.v.minCoeff()));
  }
  out.avg_aoi = out.v.col(0).sum();
  return out;
}

double average_aoi(PolicyScheme ps, double lambda, double mu, double p, double k) {
  const ShsChain chain = build_chain(ps, lambda, mu, p, k);
  return solve_age_system(chain, stationary(chain)).avg_aoi;
}

ShsChain chain_from_json(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidChain, e.what());
  }
  try {
    ShsChain chain;
    chain.n_states = doc.at("states").get<int>();
    const auto& growth = doc.at("growth");
    if (!growth.is_array() || growth.empty()) {
      throw Error(ErrorKind::InvalidChain, "growth must be a non-empty array");
    }
    chain.age_dim = static_cast<int>(growth.at(0).size());
    chain.growth.resize(static_cast<Eigen::Index>(growth.size()), chain.age_dim);
    for (std::size_t q = 0; q < growth.size(); ++q) {
      if (growth[q].size() != static_cast<std::size_t>(chain.age_dim)) {
        throw Error(ErrorKind::InvalidChain, fmt::format("growth row {} has the wrong length", q));
      }
      for (int j = 0; j < chain.age_dim; ++j) chain.growth(q, j) = growth[q][j].get<double>();
    }
    for (const auto& item : doc.at("transitions")) {
      Transition t;
      t.from = item.at("from").get<int>();
      t.to = item.at("to").get<int>();
      t.rate = item.at("rate").get<double>();
      const auto& reset = item.at("reset");
      t.reset.resize(chain.age_dim, chain.age_dim);
      if (reset.size() != static_cast<std::size_t>(chain.age_dim)) {
        throw Error(ErrorKind::InvalidChain, "reset matrix has the wrong number of rows");
      }
      for (int i = 0; i < chain.age_dim; ++i) {
        if (reset[i].size() != static_cast<std::size_t>(chain.age_dim)) {
          throw Error(ErrorKind::InvalidChain, "reset matrix has the wrong number of columns");
        }
        for (int j = 0; j < chain.age_dim; ++j) t.reset(i, j) = reset[i][j].get<double>();
      }
      chain.transitions.push_back(std::move(t));
    }
    chain.check();
    return chain;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidChain, e.what());
  }
}

std::string chain_to_json(const ShsChain& chain) {
  using nlohmann::json;
  auto rows = [](const Eigen::MatrixXd& mat) {
    json out = json::array();
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < mat.cols(); ++j) row.push_back(mat(i, j));
      out.push_back(std::move(row));
    }
    return out;
  };
  json doc;
  doc["states"] = chain.n_states;
  doc["growth"] = rows(chain.growth);
  doc["transitions"] = json::array();
  for (const auto& t : chain.transitions) {
    doc["transitions"].push_back({{"from", t.from}, {"to", t.to}, {"rate", t.rate}, {"reset", rows(t.reset)}});
  }
  return doc.dump(2);
}

ShsChain load_chain(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidChain, fmt::format("cannot open {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return chain_from_json(buffer.str());
}

}  // namespace aoi::shs
