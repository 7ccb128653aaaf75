#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "effica/solver.hpp"

namespace effica {

/// Source laws of the benchmark zoo. Ids 13-15 name two-channel pairings
/// and are expanded with expand_case before sampling.
enum class SourceLaw : int {
  Normal = 0,            // N(0,1)
  Exponential = 1,       // exp(1), rate parameterization
  StudentT3 = 2,         // t(3)
  LogNormal = 3,         // exp(N(1,1))
  StudentT5 = 4,         // t(5)
  Logistic = 5,          // logistic(0,1)
  Weibull = 6,           // shape 3, scale 1
  ExpPlusNormal = 7,     // exp(rate 10) + N(0,1)
  ExpPlusUniform = 8,    // exp(1) + U(0,1)
  MixtureExp = 9,        // +exp(1) w.p. 0.5, -exp(1) otherwise
  MixtureExpNormal = 10, // exp(1) w.p. 0.5, N(0,1) otherwise
  GaussMultimodal = 11,  // 0.5 N(-3,1) + 0.5 N(3,1)
  GaussUnimodal = 12,    // 0.5 N(0,1) + 0.5 N(0,9)
  ExpVsNormal = 13,
  LogNormalVsNormal = 14,
  WeibullVsExp = 15,
};

struct SourceSpec {
  int id = 0;
  bool standardize = true;
  /// Weight of the first mixture component for ids 9-12.
  std::optional<double> mixture_weight;
  /// Id 7: exponential rate. Id 11: component mean offset. Id 12: sd of the
  /// wide component.
  std::optional<double> param;
};

inline SourceSpec source_spec(int id, bool standardize = true) {
  SourceSpec s;
  s.id = id;
  s.standardize = standardize;
  return s;
}

std::string law_name(int id);

/// Per-channel specs for a benchmark case: ids 0-12 repeat the law m times,
/// ids 13-15 give their two-law pairing (m must be 2).
std::vector<SourceSpec> expand_case(int id, Eigen::Index m);

/// n draws without standardization.
Eigen::VectorXd sample_raw(const SourceSpec& spec, Eigen::Index n, std::uint64_t seed);

/// Shift to empirical mean 0, then scale to lower median of |x| equal to 1.
Eigen::VectorXd standardize(const Eigen::VectorXd& x);

Eigen::VectorXd sample_source(const SourceSpec& spec, Eigen::Index n, std::uint64_t seed);

/// "table3" -> [2 1; 2 3] (m = 2), "identity" -> I, "figure2" -> I + V with
/// V_jk = j / m^2 + (k - 1) / m.
Eigen::MatrixXd mixing_preset(const std::string& name, Eigen::Index m);

struct ExperimentSpec {
  std::string name;
  Eigen::Index m = 2;
  Eigen::Index n = 1000;
  std::vector<SourceSpec> sources;
  Eigen::MatrixXd W_true;
  std::uint64_t seed = 0;
  int replications = 1;

  void validate() const;
};

std::uint64_t replication_seed(std::uint64_t experiment_seed, int replication_index);
std::uint64_t channel_seed(std::uint64_t replication_seed, Eigen::Index channel);

struct GeneratedData {
  Dataset X;
  Eigen::MatrixXd W_true;
  Eigen::MatrixXd S;
};

/// Draws S with independent per-channel streams and returns X = W_true^{-1} S.
GeneratedData make_dataset(const ExperimentSpec& spec, int replication_index);

}  // namespace effica
