#include "bsem/likelihood/posterior.hpp"
#include "bsem/simulation/presets.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

namespace bsem {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

ModelSpec with_ordinal(ModelSpec m, int categories = 4) {
  for (std::size_t j = 0; j < m.items.size(); j += 2) m.items[j] = {m.items[j].name, ItemKind::ordinal, categories};
  return m;
}

ModelSpec categorical(Variant v, Link l, bool ordinal) {
  auto m = presets::bundle_model(v, ItemKind::binary);
  m.link = l;
  if (ordinal) m = with_ordinal(m);
  return m;
}

TEST(Prior, ClosedFormNormalTerms) {
  EXPECT_NEAR(density::normal_lpdf(0.0, 0.0, 0.01), 1.3836, 5e-5);
  EXPECT_NEAR(-0.5 * std::log(2 * std::numbers::pi * 0.01), density::normal_lpdf(0.0, 0.0, 0.01), 1e-14);
  EXPECT_NEAR(density::normal_lpdf(0.0, 0.0, 100.0), -3.2215, 5e-5);
}

TEST(Prior, HeywoodGuardWithIdentityCovariance) {
  const auto vs = validate_spec(presets::bundle_model(Variant::EZ, ItemKind::continuous));
  const auto ctx = make_prior_context(vs, Matrix::Identity(6, 6));
  for (Eigen::Index j = 0; j < 6; ++j) EXPECT_DOUBLE_EQ(ctx.heywood_scale[j], 1.5);
  // InvGamma(2.5, 1.5) density at 1: 2.5 log 1.5 - lgamma(2.5) - 1.5
  EXPECT_NEAR(psi_log_prior(vs.spec.priors.psi_prior, 1.0, 1.5), 2.5 * std::log(1.5) - std::lgamma(2.5) - 1.5, 1e-14);
}

TEST(Prior, LogPriorSumsActiveTerms) {
  const auto vs = validate_spec(presets::bundle_model(Variant::AZ, ItemKind::continuous));
  ParameterSet P;
  P.alpha = Vector::Zero(6);
  P.Lambda = Matrix::Zero(6, 2);
  P.Phi = Matrix::Identity(2, 2);
  P.Omega = Matrix::Identity(6, 6);
  P.psi = Vector::Ones(6);
  const auto ctx = make_prior_context(vs, Matrix::Identity(6, 6));
  double expected = 6 * density::normal_lpdf(0, 0, 100) + 6 * density::normal_lpdf(0, 0, 1) +
                    6 * density::normal_lpdf(0, 0, 0.01) + density::lkj_lpdf(0.0, 2, 2.0) +
                    6 * density::inv_gamma_lpdf(1.0, 2.5, 1.5);
  // IW(I, 12) at I: -0.5*12*6*log 2 - lmgamma(6, 6) - 0.5*6
  expected += -36.0 * std::numbers::ln2 - density::lmgamma(6, 6.0) - 3.0;
  EXPECT_NEAR(log_prior(P, vs, ctx), expected, 1e-10);
  P.Phi(0, 1) = P.Phi(1, 0) = 1.5;
  EXPECT_THROW((void)log_prior(P, vs, ctx), NumericalError);
}

TEST(Prior, LkjNormalizer) {
  // k = 2: integral over r of (1 - r^2)^(eta - 1) is 2^(2 eta - 1) B(eta, eta).
  for (double eta : {0.5, 1.0, 2.0, 3.5}) {
    const double beta = std::exp(2 * std::lgamma(eta) - std::lgamma(2 * eta));
    EXPECT_NEAR(density::lkj_log_normalizer(2, eta), std::log(std::pow(2.0, 2 * eta - 1) * beta), 1e-12);
  }
  EXPECT_NEAR(density::lkj_log_normalizer(3, 1.0), std::log(std::pow(std::numbers::pi, 2) / 2), 1e-12);
  // k = 3, eta = 2: midpoint rule over the cube of correlations.
  const int m = 240;
  const double h = 2.0 / m;
  double total = 0.0;
  for (int a = 0; a < m; ++a) {
    const double r12 = -1 + (a + 0.5) * h;
    for (int b = 0; b < m; ++b) {
      const double r13 = -1 + (b + 0.5) * h;
      for (int c = 0; c < m; ++c) {
        const double r23 = -1 + (c + 0.5) * h;
        const double det = 1 - r12 * r12 - r13 * r13 - r23 * r23 + 2 * r12 * r13 * r23;
        if (det > 0) total += det;
      }
    }
  }
  total *= h * h * h;
  EXPECT_NEAR(std::log(total), density::lkj_log_normalizer(3, 2.0), 2e-3);
}

TEST(Likelihood, StandardNormalAtZero) {
  ModelSpec m;
  m.items = presets::items(1, ItemKind::continuous);
  m.k = 1;
  m.pattern = presets::simple_structure({1}, false);
  const auto vs = validate_spec(m);
  Dataset d{m.items, Matrix::Zero(1, 1)};
  ParameterSet P;
  P.alpha = Vector::Zero(1);
  P.Lambda = Matrix::Zero(1, 1);
  P.Phi = Matrix::Identity(1, 1);
  P.psi = Vector::Ones(1);
  EXPECT_NEAR(loglik_continuous(d, P, vs), -0.9189, 5e-5);
  EXPECT_NEAR(loglik_continuous(d, P, vs), -0.5 * kLog2Pi, 1e-15);
}

TEST(Likelihood, TwoItemDenseSolve) {
  ModelSpec m;
  m.items = presets::items(2, ItemKind::continuous);
  m.k = 1;
  m.pattern = presets::simple_structure({2}, false);
  const auto vs = validate_spec(m);
  ParameterSet P;
  P.alpha = Vector::Zero(2);
  P.Lambda = Matrix(2, 1);
  P.Lambda << 1.0, 0.8;
  P.Phi = Matrix::Identity(1, 1);
  P.psi = Vector::Ones(2);
  Matrix Y(3, 2);
  Y << 0, 0, 1.0, -0.5, 0.3, 2.0;
  Dataset d{m.items, Y};
  Matrix S(2, 2);
  S << 2, 0.8, 0.8, 1.64;
  const Matrix Sinv = S.inverse();
  double expected = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Vector y = Y.row(i).transpose();
    expected += -kLog2Pi - 0.5 * std::log(S.determinant()) - 0.5 * y.dot(Sinv * y);
  }
  EXPECT_NEAR(loglik_continuous(d, P, vs), expected, 1e-12);
  EXPECT_NEAR(-kLog2Pi - 0.5 * std::log(S.determinant()),
              loglik_continuous(Dataset{m.items, Matrix::Zero(1, 2)}, P, vs), 1e-14);
}

// Augmented density p(y) = E_{z,u} N(y | alpha + Lambda z + u, Psi), one row
// at a time, by plain Monte Carlo.
TEST(Likelihood, MarginalMatchesMonteCarloAugmented) {
  const auto vs = validate_spec(presets::bundle_model(Variant::AZ, ItemKind::continuous));
  const ParameterLayout layout(vs, 0);
  std::mt19937_64 rng(77);
  const auto P = unpack(testing::random_vector(layout.dim(), rng, 0.4), layout).params;
  Dataset d = testing::random_dataset(vs.spec.items, 10, rng);
  const double marginal = loglik_continuous(d, P, vs);

  const Eigen::LLT<Matrix> lphi(P.Phi), lomega(*P.Omega);
  const Matrix Lp = lphi.matrixL(), Lo = lomega.matrixL();
  std::normal_distribution<double> nd;
  const int draws = 200000;
  double est = 0.0, var = 0.0;
  for (Eigen::Index i = 0; i < 10; ++i) {
    double s = 0.0, s2 = 0.0;
    for (int r = 0; r < draws; ++r) {
      Vector a(2), b(6);
      for (auto& e : a) e = nd(rng);
      for (auto& e : b) e = nd(rng);
      const Vector mu = P.alpha + P.Lambda * (Lp * a) + Lo * b;
      double lw = 0.0;
      for (Eigen::Index j = 0; j < 6; ++j) lw += density::normal_lpdf(d.values(i, j), mu[j], (*P.psi)[j]);
      const double w = std::exp(lw);
      s += w;
      s2 += w * w;
    }
    const double mean = s / draws;
    const double sd = std::sqrt(std::max(0.0, s2 / draws - mean * mean));
    est += std::log(mean);
    const double se_log = sd / (mean * std::sqrt(static_cast<double>(draws)));
    var += se_log * se_log;
  }
  EXPECT_LE(std::abs(est - marginal), 3.0 * std::sqrt(var)) << "marginal " << marginal << " mc " << est;
}

TEST(Likelihood, CategoricalClosedForms) {
  EXPECT_NEAR(link::binary(Link::logit, 1, 0.0).value, -0.6931, 5e-5);
  EXPECT_NEAR(link::binary(Link::logit, 1, 1.0).value, -0.3133, 5e-5);
  Vector tau(2);
  tau << -1.0, 1.0;
  const double v = link::ordinal(Link::logit, 1, tau, 0.0).value;
  // log(0.46212) = -0.77194
  EXPECT_NEAR(v, -0.7719, 5e-5);
  const double s1 = 1 / (1 + std::exp(-1.0));
  EXPECT_NEAR(v, std::log(s1 - (1 - s1)), 1e-14);
}

TEST(Likelihood, AllZeroLogitIsMinusNpLog2) {
  const auto vs = validate_spec(categorical(Variant::EFA, Link::logit, false));
  std::mt19937_64 rng(3);
  const std::size_t n = 25;
  Dataset d = testing::random_dataset(vs.spec.items, n, rng);
  ParameterSet P;
  P.alpha = Vector::Zero(6);
  P.Lambda = Matrix::Zero(6, 2);
  P.Phi = Matrix::Identity(2, 2);
  P.z = Matrix::Zero(n, 2);
  // Exact up to the rounding of summing n p identical terms.
  EXPECT_NEAR(loglik_observations(d, P, vs), -static_cast<double>(n * 6) * std::numbers::ln2, 1e-12);
  EXPECT_NEAR(loglik_categorical(d, P, vs),
              -static_cast<double>(n * 6) * std::numbers::ln2 - static_cast<double>(n) * kLog2Pi, 1e-10);
}

TEST(Likelihood, ProbitAndLogitAgreeAtZeroAndOrder) {
  EXPECT_EQ(link::binary(Link::logit, 1, 0.0).value, link::binary(Link::probit, 1, 0.0).value);
  EXPECT_EQ(link::binary(Link::logit, 0, 0.0).value, link::binary(Link::probit, 0, 0.0).value);
  double prev_l = -1, prev_p = -1;
  for (double e = -3.0; e <= 3.0; e += 0.05) {
    const double pl = std::exp(link::binary(Link::logit, 1, e).value);
    const double pp = std::exp(link::binary(Link::probit, 1, e).value);
    EXPECT_GT(pl, prev_l);
    EXPECT_GT(pp, prev_p);
    EXPECT_EQ(pl > 0.5, pp > 0.5) << e;
    EXPECT_EQ(pl < 0.5, pp < 0.5) << e;
    prev_l = pl;
    prev_p = pp;
  }
}

TEST(Likelihood, CodeOutOfRange) {
  const auto vs = validate_spec(categorical(Variant::EZ, Link::logit, false));
  Dataset d{vs.spec.items, Matrix::Zero(2, 6)};
  d.values(1, 3) = 2.0;
  EXPECT_THROW(Posterior(vs, d), InputError);
}

TEST(Likelihood, StableTails) {
  for (double e : {-40.0, -10.0, 10.0, 40.0}) {
    for (Link l : {Link::logit, Link::probit}) {
      const auto t0 = link::binary(l, 0, e);
      const auto t1 = link::binary(l, 1, e);
      EXPECT_TRUE(std::isfinite(t0.value) && std::isfinite(t1.value));
      EXPECT_TRUE(std::isfinite(t0.d_eta) && std::isfinite(t1.d_eta));
      EXPECT_GE(t0.value, link::kLogFloor);
    }
  }
  // Mills-ratio series for log Phi(-40).
  const double x = 40.0;
  const double series = 1 - 1 / (x * x) + 3 / std::pow(x, 4) - 15 / std::pow(x, 6) + 105 / std::pow(x, 8);
  EXPECT_NEAR(link::log_ndtr(-x), -0.5 * x * x - std::log(x) - 0.5 * kLog2Pi + std::log(series), 1e-9);
  EXPECT_NEAR(link::log_ndtr(-20.0), std::log(0.5 * std::erfc(20.0 / std::numbers::sqrt2)), 1e-9);
}

struct GradCase {
  std::string label;
  ModelSpec spec;
  std::size_t n;
  int points;
};

void PrintTo(const GradCase& c, std::ostream* os) { *os << c.label; }

std::vector<GradCase> gradient_cases() {
  std::vector<GradCase> out;
  const char* names[] = {"EZ", "AZ", "EFA", "EFA_C"};
  int vi = 0;
  for (auto v : {Variant::EZ, Variant::AZ, Variant::EFA, Variant::EFA_C}) {
    const std::string vn = names[vi++];
    out.push_back({vn + "/continuous", presets::bundle_model(v, ItemKind::continuous), 40, 200});
    for (Link l : {Link::logit, Link::probit}) {
      const std::string ln = l == Link::logit ? "logit" : "probit";
      out.push_back({vn + "/binary/" + ln, categorical(v, l, false), 5, 200});
      out.push_back({vn + "/ordinal/" + ln, categorical(v, l, true), 5, 200});
    }
  }
  auto cov = presets::bundle_model(Variant::AZ, ItemKind::continuous);
  cov.phi_form = PhiForm::covariance;
  cov.pattern->at(0, 0) = LoadingEntry::fixed_at(1.0);
  cov.pattern->at(3, 1) = LoadingEntry::fixed_at(1.0);
  out.push_back({"AZ/continuous/phi-covariance", cov, 40, 50});
  auto cov_cat = categorical(Variant::EZ, Link::probit, true);
  cov_cat.phi_form = PhiForm::covariance;
  cov_cat.pattern->at(0, 0) = LoadingEntry::fixed_at(1.0);
  cov_cat.pattern->at(3, 1) = LoadingEntry::fixed_at(1.0);
  out.push_back({"EZ/ordinal/phi-covariance", cov_cat, 5, 50});
  auto pos = presets::bundle_model(Variant::AZ, ItemKind::continuous);
  pos.leading_sign = LeadingSign::positive;
  out.push_back({"AZ/continuous/positive-leading", pos, 40, 50});
  auto pos_cat = categorical(Variant::AZ, Link::logit, false);
  pos_cat.leading_sign = LeadingSign::positive;
  out.push_back({"AZ/binary/positive-leading", pos_cat, 5, 50});
  auto coupled = presets::bundle_model(Variant::EZ, ItemKind::continuous);
  coupled.priors.coupled_loading_prior = true;
  out.push_back({"EZ/continuous/coupled", coupled, 40, 50});
  auto ig = presets::bundle_model(Variant::EZ, ItemKind::continuous);
  ig.priors.psi_prior = PsiPrior::inv_gamma(1.0, 0.5);
  out.push_back({"EZ/continuous/inv-gamma", ig, 40, 50});
  auto hc = presets::bundle_model(Variant::EZ, ItemKind::continuous);
  hc.priors.psi_prior = PsiPrior::half_cauchy(1.0);
  out.push_back({"EZ/continuous/half-cauchy", hc, 40, 50});
  auto un = presets::bundle_model(Variant::AZ, ItemKind::continuous);
  un.priors.psi_prior = PsiPrior::uniform(5.0);
  out.push_back({"AZ/continuous/uniform", un, 40, 50});
  for (Link l : {Link::logit, Link::probit}) {
    auto red = categorical(Variant::AZ, l, true);
    red.augmentation = Augmentation::reduced;
    out.push_back({std::string("AZ/ordinal/reduced/") + (l == Link::logit ? "logit" : "probit"), red, 5, 100});
    auto red_c = categorical(Variant::EFA_C, l, false);
    red_c.augmentation = Augmentation::reduced;
    out.push_back({std::string("EFA_C/binary/reduced/") + (l == Link::logit ? "logit" : "probit"), red_c, 5, 100});
  }
  auto one = presets::ftnd_model("1F-C");
  out.push_back({"1F-C/binary", one, 5, 50});
  auto three = presets::bundle_model(Variant::AZ, ItemKind::continuous, 3, 2);
  out.push_back({"AZ/continuous/k3", three, 40, 50});
  return out;
}

class GradientTest : public ::testing::TestWithParam<GradCase> {};

TEST_P(GradientTest, MatchesFiniteDifferences) {
  const auto& c = GetParam();
  const auto vs = validate_spec(c.spec);
  std::mt19937_64 rng(std::hash<std::string>{}(c.label) & 0xffffffff);
  const Dataset d = testing::random_dataset(vs.spec.items, c.n, rng);
  const Posterior post(vs, d);
  auto f = [&](const Vector& x) { return post(x, false).value; };
  double worst = 0.0;
  for (int rep = 0; rep < c.points; ++rep) {
    const Vector x = testing::random_vector(post.dim(), rng, 0.5);
    const auto r = post(x, true);
    ASSERT_TRUE(std::isfinite(r.value)) << c.label;
    ASSERT_EQ(static_cast<std::size_t>(r.gradient.size()), post.dim());
    worst = std::max(worst, testing::scaled_error(r.gradient, testing::fd_gradient(f, x, 1e-5)));
  }
  EXPECT_LE(worst, 1e-5) << c.label;
}

INSTANTIATE_TEST_SUITE_P(AllVariants, GradientTest, ::testing::ValuesIn(gradient_cases()),
                         [](const auto& info) {
                           std::string s = info.param.label;
                           for (auto& ch : s) {
                             if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
                           }
                           return s;
                         });

class DecompositionTest : public ::testing::TestWithParam<GradCase> {};

TEST_P(DecompositionTest, ValueIsPriorPlusLikelihoodPlusJacobian) {
  const auto& c = GetParam();
  const auto vs = validate_spec(c.spec);
  std::mt19937_64 rng(123);
  const Dataset d = testing::random_dataset(vs.spec.items, c.n, rng);
  const Posterior post(vs, d);
  for (int rep = 0; rep < 10; ++rep) {
    const Vector x = testing::random_vector(post.dim(), rng, 0.5);
    const auto u = unpack(x, post.layout());
    const double lp = log_prior(u.params, vs, post.prior_context());
    const double ll = vs.family == DataFamily::continuous ? loglik_continuous(d, u.params, vs)
                                                          : loglik_categorical(d, u.params, vs);
    const double total = post(x, false).value;
    EXPECT_NEAR(total, lp + ll + u.log_jacobian, 1e-10 * std::max(1.0, std::abs(total))) << c.label;
  }
}

INSTANTIATE_TEST_SUITE_P(AllVariants, DecompositionTest, ::testing::ValuesIn(gradient_cases()),
                         [](const auto& info) {
                           std::string s = info.param.label;
                           for (auto& ch : s) {
                             if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
                           }
                           return s;
                         });

TEST(Posterior, InterceptScoreVanishesAtSampleMean) {
  const auto vs = validate_spec(presets::bundle_model(Variant::EZ, ItemKind::continuous));
  std::mt19937_64 rng(8);
  Dataset d = testing::random_dataset(vs.spec.items, 60, rng);
  d.values.array() += 3.0;
  const Posterior post(vs, d);
  Vector x = testing::random_vector(post.dim(), rng, 0.3);
  const Vector ybar = d.values.colwise().mean();
  for (std::size_t j = 0; j < 6; ++j) x[post.layout().alpha_index(j)] = ybar[static_cast<Eigen::Index>(j)];
  const auto r = post(x, true);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_NEAR(r.gradient[post.layout().alpha_index(j)], -ybar[static_cast<Eigen::Index>(j)] / 100.0, 1e-9);
  }
}

TEST(Posterior, DegenerateInteriorIsMinusInfinity) {
  const auto vs = validate_spec(presets::bundle_model(Variant::EZ, ItemKind::continuous));
  std::mt19937_64 rng(9);
  const Dataset d = testing::random_dataset(vs.spec.items, 20, rng);
  const Posterior post(vs, d);
  Vector x = Vector::Zero(static_cast<Eigen::Index>(post.dim()));
  for (std::size_t j = 0; j < 6; ++j) x[static_cast<Eigen::Index>(post.layout().psi_offset() + j)] = -800.0;
  for (const auto& s : post.layout().loadings()) x[static_cast<Eigen::Index>(s.index)] = 0.0;
  EXPECT_EQ(post(x, true).value, -std::numeric_limits<double>::infinity());
  Vector bad = Vector::Zero(static_cast<Eigen::Index>(post.dim()));
  bad[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW((void)log_posterior(bad, d, vs), InputError);
}

}  // namespace
}  // namespace bsem
