#include "covshift/model.hpp"

#include <cmath>

namespace covshift {

namespace {

double m_norm_sq(const Matrix& M, const Vector& w) { return w.dot(M * w); }

std::string noise_name(NoiseKind k) { return k == NoiseKind::Gaussian ? "gaussian" : "rademacher"; }

NoiseKind noise_from_name(const std::string& s) {
  if (s == "gaussian") return NoiseKind::Gaussian;
  if (s == "rademacher") return NoiseKind::Rademacher;
  throw InvalidArgument("unknown noise kind: " + s);
}

}  // namespace

void validate(const ProblemInstance& inst) {
  const Eigen::Index d = inst.S.rows();
  if (d < 1) throw InvalidArgument("instance: dimension must be at least 1");
  if (inst.S.cols() != d || inst.T.rows() != d || inst.T.cols() != d || inst.M.rows() != d ||
      inst.M.cols() != d || inst.w_star.size() != d)
    throw InvalidArgument("instance: inconsistent dimensions");
  if (!(inst.sigma2 >= 0.0)) throw InvalidArgument("instance: sigma2 must be nonnegative");
  if (!(inst.psi >= 1.0)) throw InvalidArgument("instance: psi must be at least 1");
  const double s_min = min_eigenvalue(inst.S);
  if (s_min <= 0.0) throw NotPSD("instance: S is not positive definite", s_min);
  const double m_min = min_eigenvalue(inst.M);
  if (m_min <= 0.0) throw NotPSD("instance: M is not positive definite", m_min);
  const double t_min = min_eigenvalue(inst.T);
  if (t_min < -default_clamp_tol(inst.T)) throw NotPSD("instance: T is not PSD", t_min);
  const double wm = m_norm_sq(inst.M, inst.w_star);
  if (wm > 1.0 + 1e-12) throw InvalidArgument("instance: ||w*||_M^2 exceeds 1");
}

SpectralTriple whiten(const ProblemInstance& inst) {
  SpectralTriple out;
  out.M_sqrt = psd_sqrt(inst.M);
  out.M_inv_sqrt = pd_inv_sqrt(inst.M);
  out.S_prime = symmetrize(out.M_inv_sqrt * inst.S * out.M_inv_sqrt);
  out.T_prime = symmetrize(out.M_inv_sqrt * inst.T * out.M_inv_sqrt);
  out.eig_S_prime = eigh(out.S_prime);
  return out;
}

void validate(const PowerLawSpec& spec) {
  if (spec.d < 1) throw InvalidArgument("power law: d must be at least 1");
  if (!(spec.a > 1.0)) throw InvalidArgument("power law: a must exceed 1");
  if (!(spec.nu >= 0.0 && spec.nu <= 1.0)) throw InvalidArgument("power law: nu must lie in [0, 1]");
  if (spec.nu != 0.0 && spec.nu != 1.0)
    throw InvalidArgument("power law: only nu = 0 (diagonal) and nu = 1 (rank one) are constructible");
  if (spec.d0 && *spec.d0 < 1) throw InvalidArgument("power law: d0 must be at least 1");
  if (!(spec.rho > 0.0 && spec.rho <= 1.0)) throw InvalidArgument("power law: rho must lie in (0, 1]");
  if (!(spec.sigma2 >= 0.0)) throw InvalidArgument("power law: sigma2 must be nonnegative");
  if (spec.placement == WStarPlacement::Coordinate &&
      (spec.w_star_index < 1 || spec.w_star_index > spec.d))
    throw InvalidArgument("power law: w_star_index out of range");
}

ProblemInstance make_power_law_instance(const PowerLawSpec& spec, std::uint64_t seed) {
  validate(spec);
  const int d = spec.d;
  const double dt = (1.0 + spec.r) * spec.a;
  Vector lambda(d), m(d), t(d);
  for (int k = 0; k < d; ++k) {
    const double i = k + 1.0;
    lambda(k) = std::pow(i, -spec.a);
    m(k) = std::pow(lambda(k), 1.0 - spec.s);
    const double it = spec.d0 ? std::max(i, static_cast<double>(*spec.d0)) : i;
    t(k) = std::pow(it, -dt);
  }

  ProblemInstance inst;
  inst.S = lambda.asDiagonal();
  inst.M = m.asDiagonal();
  if (spec.nu == 1.0) {
    const Vector w = t.cwiseSqrt();
    inst.T = w * w.transpose();
  } else {
    inst.T = t.asDiagonal();
  }
  inst.sigma2 = spec.sigma2;
  inst.psi = 3.0;
  inst.noise = spec.noise;

  Vector w(d);
  if (spec.placement == WStarPlacement::Coordinate) {
    w.setZero();
    const int k = spec.w_star_index - 1;
    w(k) = 1.0 / std::sqrt(m(k));
  } else {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    for (int k = 0; k < d; ++k) {
      const double mag = std::pow(k + 1.0, -0.51) / std::sqrt(m(k));
      w(k) = coin(rng) ? mag : -mag;
    }
  }
  inst.w_star = w * (spec.rho / std::sqrt(m_norm_sq(inst.M, w)));

  inst.c_finite = spectral_norm(whiten(inst).S_prime);
  if (spec.r <= std::max(1.0 / spec.a - 2.0, -spec.s))
    inst.warnings.push_back("r <= max(1/a - 2, -s): outside the rate optimality region");
  return inst;
}

double excess_risk(const ProblemInstance& inst, const Vector& w) {
  if (w.size() != inst.w_star.size()) throw InvalidArgument("excess_risk: dimension mismatch");
  const Vector e = w - inst.w_star;
  return e.dot(inst.T * e);
}

SourceSampler::SourceSampler(const ProblemInstance& inst, std::uint64_t seed)
    : w_star_(inst.w_star),
      sigma_(std::sqrt(inst.sigma2)),
      noise_(inst.noise),
      z_(inst.d()),
      rng_(seed) {
  const Matrix off = inst.S - Matrix(inst.S.diagonal().asDiagonal());
  diagonal_ = off.cwiseAbs().maxCoeff() == 0.0;
  if (diagonal_) {
    if ((inst.S.diagonal().array() < 0.0).any())
      throw NotPSD("sampler: S has a negative diagonal entry", inst.S.diagonal().minCoeff());
    sqrt_diag_ = inst.S.diagonal().cwiseSqrt();
  } else {
    sqrt_S_ = psd_sqrt(inst.S);
  }
}

void SourceSampler::next_x(Vector& x) {
  for (Eigen::Index i = 0; i < z_.size(); ++i) z_(i) = normal_(rng_);
  if (diagonal_) {
    x = sqrt_diag_.cwiseProduct(z_);
  } else {
    x.noalias() = sqrt_S_ * z_;
  }
}

double SourceSampler::next_noise() {
  if (sigma_ == 0.0) return 0.0;
  if (noise_ == NoiseKind::Gaussian) return sigma_ * normal_(rng_);
  return (rng_() & 1u) ? sigma_ : -sigma_;
}

void SourceSampler::next_into(Vector& x, double& y, double* eps) {
  next_x(x);
  const double e = next_noise();
  y = x.dot(w_star_) + e;
  if (eps) *eps = e;
}

Sample SourceSampler::next() {
  Sample s;
  next_into(s.x, s.y);
  return s;
}

std::vector<Sample> sample_source(const ProblemInstance& inst, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample_source: n must be at least 1");
  SourceSampler sampler(inst, seed);
  std::vector<Sample> out(static_cast<size_t>(n));
  for (auto& s : out) s = sampler.next();
  return out;
}

nlohmann::json matrix_to_json(const Matrix& X) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < X.cols(); ++j) row.push_back(X(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw InvalidArgument("matrix json: expected a nonempty array of rows");
  const size_t r = j.size();
  const size_t c = j[0].size();
  Matrix X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (size_t i = 0; i < r; ++i) {
    if (j[i].size() != c) throw InvalidArgument("matrix json: ragged rows");
    for (size_t k = 0; k < c; ++k)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
  }
  return X;
}

nlohmann::json vector_to_json(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json to_json(const ProblemInstance& inst) {
  return {{"d", inst.d()},
          {"S", matrix_to_json(inst.S)},
          {"T", matrix_to_json(inst.T)},
          {"M", matrix_to_json(inst.M)},
          {"w_star", vector_to_json(inst.w_star)},
          {"sigma2", inst.sigma2},
          {"psi", inst.psi},
          {"c_finite", inst.c_finite},
          {"noise", noise_name(inst.noise)}};
}

ProblemInstance instance_from_json(const nlohmann::json& j) {
  ProblemInstance inst;
  inst.S = symmetrize(matrix_from_json(j.at("S")));
  inst.T = symmetrize(matrix_from_json(j.at("T")));
  inst.M = symmetrize(matrix_from_json(j.at("M")));
  inst.w_star = vector_from_json(j.at("w_star"));
  inst.sigma2 = j.at("sigma2").get<double>();
  inst.psi = j.value("psi", 3.0);
  inst.noise = noise_from_name(j.value("noise", std::string("gaussian")));
  if (j.contains("d") && j.at("d").get<int>() != inst.d())
    throw InvalidArgument("instance json: d does not match the matrices");
  validate(inst);
  const double c_min = spectral_norm(whiten(inst).S_prime);
  inst.c_finite = j.value("c_finite", c_min);
  if (inst.c_finite < c_min * (1.0 - 1e-12))
    throw InvalidArgument("instance json: c_finite is below ||S'||");
  return inst;
}

nlohmann::json to_json(const PowerLawSpec& spec) {
  nlohmann::json j = {{"kind", "powerlaw"}, {"d", spec.d},         {"a", spec.a},
                      {"s", spec.s},        {"r", spec.r},         {"nu", spec.nu},
                      {"rho", spec.rho},    {"sigma2", spec.sigma2}, {"noise", noise_name(spec.noise)}};
  j["d0"] = spec.d0 ? nlohmann::json(*spec.d0) : nlohmann::json(nullptr);
  if (spec.placement == WStarPlacement::Coordinate) j["w_star_index"] = spec.w_star_index;
  return j;
}

PowerLawSpec power_law_from_json(const nlohmann::json& j) {
  if (j.value("kind", std::string("powerlaw")) != "powerlaw")
    throw InvalidArgument("power law json: kind must be \"powerlaw\"");
  PowerLawSpec spec;
  spec.d = j.value("d", spec.d);
  spec.a = j.at("a").get<double>();
  spec.s = j.value("s", spec.s);
  spec.r = j.value("r", spec.r);
  spec.nu = j.value("nu", spec.nu);
  if (j.contains("d0") && !j.at("d0").is_null()) spec.d0 = j.at("d0").get<int>();
  spec.rho = j.value("rho", spec.rho);
  spec.sigma2 = j.value("sigma2", spec.sigma2);
  spec.noise = noise_from_name(j.value("noise", std::string("gaussian")));
  if (j.contains("w_star_index")) {
    spec.placement = WStarPlacement::Coordinate;
    spec.w_star_index = j.at("w_star_index").get<int>();
  }
  validate(spec);
  return spec;
}

}  // namespace covshift
