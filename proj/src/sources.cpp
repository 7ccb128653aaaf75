#include "effica/sources.hpp"

#include <cmath>

#include <Eigen/LU>

#include "effica/initializer.hpp"
#include "effica/random.hpp"

namespace effica {

namespace {

double student_t(Rng& rng, int dof) {
  const double z = rng.normal();
  double chi2 = 0.0;
  for (int i = 0; i < dof; ++i) {
    const double g = rng.normal();
    chi2 += g * g;
  }
  return z / std::sqrt(chi2 / dof);
}

double draw(const SourceSpec& spec, Rng& rng) {
  const double w = spec.mixture_weight.value_or(0.5);
  switch (static_cast<SourceLaw>(spec.id)) {
    case SourceLaw::Normal:
      return rng.normal();
    case SourceLaw::Exponential:
      return rng.exponential(1.0);
    case SourceLaw::StudentT3:
      return student_t(rng, 3);
    case SourceLaw::LogNormal:
      return std::exp(1.0 + rng.normal());
    case SourceLaw::StudentT5:
      return student_t(rng, 5);
    case SourceLaw::Logistic: {
      const double u = rng.uniform_open();
      return std::log(u / (1.0 - u));
    }
    case SourceLaw::Weibull:
      return std::cbrt(-std::log(rng.uniform_open()));
    case SourceLaw::ExpPlusNormal:
      return rng.exponential(spec.param.value_or(10.0)) + rng.normal();
    case SourceLaw::ExpPlusUniform:
      return rng.exponential(1.0) + rng.uniform();
    case SourceLaw::MixtureExp: {
      const double e = rng.exponential(1.0);
      return rng.uniform() < w ? e : -e;
    }
    case SourceLaw::MixtureExpNormal:
      return rng.uniform() < w ? rng.exponential(1.0) : rng.normal();
    case SourceLaw::GaussMultimodal: {
      const double a = spec.param.value_or(3.0);
      return (rng.uniform() < w ? -a : a) + rng.normal();
    }
    case SourceLaw::GaussUnimodal:
      return rng.uniform() < w ? rng.normal() : spec.param.value_or(3.0) * rng.normal();
    default:
      break;
  }
  throw Error(ErrorKind::InvalidArgument,
              "unknown or paired source id " + std::to_string(spec.id) + "; expand paired cases");
}

}  // namespace

std::string law_name(int id) {
  static const char* names[] = {"N(0,1)",
                                "exp(1)",
                                "t(3)",
                                "lognormal(1,1)",
                                "t(5)",
                                "logistic(0,1)",
                                "Weibull(3,1)",
                                "exp(10)+N(0,1)",
                                "exp(1)+U(0,1)",
                                "mixture exp",
                                "mixture exp/normal",
                                "Gaussian mixture (multimodal)",
                                "Gaussian mixture (unimodal)",
                                "exp(1) vs N(0,1)",
                                "lognormal(1,1) vs N(0,1)",
                                "Weibull(3,1) vs exp(1)"};
  if (id < 0 || id > 15) throw Error(ErrorKind::InvalidArgument, "unknown source id");
  return names[id];
}

std::vector<SourceSpec> expand_case(int id, Eigen::Index m) {
  if (id < 0 || id > 15) {
    throw Error(ErrorKind::InvalidArgument, "unknown source id " + std::to_string(id));
  }
  if (id <= 12) return std::vector<SourceSpec>(static_cast<std::size_t>(m), source_spec(id));
  if (m != 2) {
    throw Error(ErrorKind::InvalidArgument,
                "paired source case " + std::to_string(id) + " needs m = 2");
  }
  switch (static_cast<SourceLaw>(id)) {
    case SourceLaw::ExpVsNormal:
      return {source_spec(1), source_spec(0)};
    case SourceLaw::LogNormalVsNormal:
      return {source_spec(3), source_spec(0)};
    default:
      return {source_spec(6), source_spec(1)};
  }
}

Eigen::VectorXd sample_raw(const SourceSpec& spec, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "sample_source: n must be >= 1");
  if (spec.mixture_weight && !(*spec.mixture_weight >= 0.0 && *spec.mixture_weight <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "sample_source: mixture weight outside [0, 1]");
  }
  Rng rng(seed);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = draw(spec, rng);
  return x;
}

Eigen::VectorXd standardize(const Eigen::VectorXd& x) {
  Eigen::VectorXd out = x.array() - x.mean();
  const double med = lower_abs_median({out.data(), static_cast<std::size_t>(out.size())});
  if (!(med > 0.0)) {
    throw Error(ErrorKind::DegenerateSample, "standardize: zero absolute median");
  }
  out /= med;
  return out;
}

Eigen::VectorXd sample_source(const SourceSpec& spec, Eigen::Index n, std::uint64_t seed) {
  Eigen::VectorXd x = sample_raw(spec, n, seed);
  return spec.standardize ? standardize(x) : x;
}

Eigen::MatrixXd mixing_preset(const std::string& name, Eigen::Index m) {
  if (m < 1) throw Error(ErrorKind::InvalidArgument, "mixing preset: m must be >= 1");
  if (name == "identity") return Eigen::MatrixXd::Identity(m, m);
  if (name == "table3") {
    if (m != 2) throw Error(ErrorKind::InvalidArgument, "preset table3 needs m = 2");
    Eigen::MatrixXd W(2, 2);
    W << 2, 1, 2, 3;
    return W;
  }
  if (name == "figure2") {
    Eigen::MatrixXd W = Eigen::MatrixXd::Identity(m, m);
    const double md = static_cast<double>(m);
    for (Eigen::Index j = 1; j <= m; ++j)
      for (Eigen::Index k = 1; k <= m; ++k)
        W(j - 1, k - 1) += static_cast<double>(j) / (md * md) + static_cast<double>(k - 1) / md;
    return W;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown mixing preset '" + name + "'");
}

void ExperimentSpec::validate() const {
  if (m < 1 || n < 1) throw Error(ErrorKind::InvalidArgument, name + ": m and n must be >= 1");
  if (replications < 1) {
    throw Error(ErrorKind::InvalidArgument, name + ": replications must be >= 1");
  }
  if (static_cast<Eigen::Index>(sources.size()) != m) {
    throw Error(ErrorKind::InvalidArgument, name + ": need one source per channel");
  }
  if (W_true.rows() != m || W_true.cols() != m) {
    throw Error(ErrorKind::InvalidArgument, name + ": W_true must be m x m");
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(W_true);
  if (!lu.isInvertible()) throw Error(ErrorKind::InvalidArgument, name + ": W_true is singular");
}

std::uint64_t replication_seed(std::uint64_t experiment_seed, int replication_index) {
  return derive_seed(experiment_seed, static_cast<std::uint64_t>(replication_index));
}

std::uint64_t channel_seed(std::uint64_t replication_seed, Eigen::Index channel) {
  // Offset keeps channel streams disjoint from other children of the same seed.
  return derive_seed(replication_seed, 0x100000000ULL + static_cast<std::uint64_t>(channel));
}

GeneratedData make_dataset(const ExperimentSpec& spec, int replication_index) {
  spec.validate();
  const std::uint64_t rep_seed = replication_seed(spec.seed, replication_index);
  GeneratedData out;
  out.S.resize(spec.m, spec.n);
  for (Eigen::Index k = 0; k < spec.m; ++k) {
    out.S.row(k) = sample_source(spec.sources[k], spec.n, channel_seed(rep_seed, k)).transpose();
  }
  out.W_true = spec.W_true;
  out.X = Eigen::PartialPivLU<Eigen::MatrixXd>(spec.W_true).solve(out.S);
  return out;
}

}  // namespace effica
