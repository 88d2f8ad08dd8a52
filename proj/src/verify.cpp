#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "qlayer/catalog.hpp"
#include "qlayer/cli.hpp"
#include "qlayer/errors.hpp"
#include "qlayer/parabolicity.hpp"
#include "qlayer/quadrature.hpp"

namespace qlayer {

namespace {

constexpr double kPi = std::numbers::pi;

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::vector<CheckResult> check_lemma51() {
  std::vector<CheckResult> out;
  double worst = 0.0, odd = 0.0;
  bool positive = true;
  for (double a : {0.1, 0.4, 1.0, 3.0}) {
    const auto mu = mu_coefficients(a, 12);
    double scale = 0.0;
    for (double m : mu) scale = std::max(scale, std::abs(m));
    for (int k = 0; k <= 12; ++k) {
      const double q = mu_quadrature(a, k);
      if (k == 0 || k % 2 == 1) {
        odd = std::max({odd, std::abs(mu[k]) / scale, std::abs(q) / scale});
      } else {
        worst = std::max(worst, std::abs(mu[k] - q) / std::abs(q));
        positive = positive && mu[k] > 0.0;
      }
    }
  }
  out.push_back({"mu_2k closed form vs quadrature", worst < 1e-10, "max relative error " + num(worst)});
  out.push_back({"mu_0 and odd mu vanish", odd < 1e-12, "max |mu| / scale " + num(odd)});
  out.push_back({"mu_2k positive", positive, positive ? "all positive" : "a nonpositive moment"});
  return out;
}

std::vector<CheckResult> check_corollary15() {
  double worst = 0.0;
  for (double a : {0.1, 0.4, 1.0, 3.0}) {
    const double lhs = mu_coefficients(a, 4)[4] * 4.0 * kPi * kPi / 3.0;
    const double rhs = 16.0 * (kPi * kPi / 6.0 - 1.0) * a * a * a;
    worst = std::max(worst, std::abs(lhs - rhs) / rhs);
  }
  return {{"mu_4(a) 4 pi^2 / 3 = 16 (pi^2/6 - 1) a^3", worst < 1e-10, "max relative error " + num(worst)}};
}

std::vector<CheckResult> check_example41() {
  bool below = true, decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  std::string detail;
  for (double R : {5.0, 10.0, 1e2, 1e3}) {
    const double e = log_cutoff_energy(R);
    const double bound = 2.0 * kPi * (4.0 / 3.0) / std::log(R);
    below = below && e <= bound;
    decreasing = decreasing && e < prev;
    prev = e;
    detail += "R=" + num(R) + ": " + num(e) + " <= " + num(bound) + "; ";
  }
  return {{"log-cutoff energy below 2 pi (4/3) / log R", below, detail},
          {"log-cutoff energy strictly decreasing", decreasing, detail}};
}

// Curvature data of the S^1 x R^2 example along t (theta, phi fixed).
struct TubeSample {
  ShapeData shape;
  double area = 0.0;         // sqrt det g
  double orientation = 1.0;  // sign of N against (cos th, sin th, -s' cos ph, -s' sin ph)
};

TubeSample tube_sample(const SurfaceChart& chart, double t) {
  constexpr double th = 0.3, ph = 0.7;
  Vec x(3);
  x << th, t, ph;
  const FundamentalForms ff = fundamental_forms(chart, x);
  const double s1 = logtube_sigma().df(t);
  Vec ref(4);
  ref << std::cos(th), std::sin(th), -s1 * std::cos(ph), -s1 * std::sin(ph);
  return {shape_data(ff), std::sqrt(ff.g.determinant()), ff.N.dot(ref) < 0.0 ? -1.0 : 1.0};
}

std::vector<CheckResult> check_example_s1xr2() {
  std::vector<CheckResult> out;
  const double T = 1e4;
  const SurfaceChart chart = logtube_chart(T * 1.01);
  const RadialProfile sg = logtube_sigma();

  // principal curvatures against the three closed forms
  double worst = 0.0;
  for (int k = 0; k <= 200; ++k) {
    const double t = 0.5 + 0.05 * k * k;
    const double s = sg.f(t), s1 = sg.df(t), s2 = sg.d2f(t);
    const double w = std::sqrt(1.0 + s1 * s1);
    std::array<double, 3> expect{s2 / (w * w * w), -1.0 / (s * w), s1 / (t * w)};
    std::sort(expect.begin(), expect.end());
    const TubeSample ts = tube_sample(chart, t);
    std::array<double, 3> got{};
    for (int i = 0; i < 3; ++i) got[i] = ts.orientation * ts.shape.principal[i];
    std::sort(got.begin(), got.end());
    for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(got[i] - expect[i]));
  }
  out.push_back({"principal curvatures match the closed forms", worst < 1e-8, "max abs error " + num(worst)});

  // c_2(A) sqrt(det g) integrated over t; the torus directions contribute 4 pi^2
  std::vector<double> breaks{1e-3, 1.0, 2.0, 3.0};
  for (int k = 0; k <= 20; ++k) breaks.push_back(3.0 + 0.1 * k / 20.0);
  for (double t = 3.2; t < T; t *= 1.15) breaks.push_back(t);
  breaks.push_back(T);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  auto c2_density = [&](double t) {
    const TubeSample ts = tube_sample(chart, t);
    return ts.shape.elem_sym[2] * ts.area;
  };
  auto sub_integrand = [&](double t) {
    const double s1 = sg.df(t), s2 = sg.d2f(t);
    const double w = std::sqrt(1.0 + s1 * s1);
    return -t * s2 / (w * w * w) - s1 / w;
  };
  auto partial = [&](const std::function<double(double)>& f, double upto) {
    std::vector<double> b;
    for (double x : breaks)
      if (x < upto) b.push_back(x);
    b.push_back(upto);
    return quad::composite(f, b, 8);
  };

  const double sub = partial(sub_integrand, T);
  out.push_back({"transverse sub-integral equals -1", std::abs(sub + 1.0) < 1e-6,
                 "value " + num(sub) + " (times 4 pi^2: " + num(4.0 * kPi * kPi * sub) + ")"});

  const double total = 4.0 * kPi * kPi * partial(c2_density, T);
  const double bound = 4.0 * kPi * kPi * (std::log(6.0) - std::log(3.0 + std::sqrt(10.0)) - 1.0) + 0.05;
  out.push_back({"total int c_2(A) negative", total < 0.0, "value " + num(total)});
  out.push_back({"total int c_2(A) below 4 pi^2 (log 6 - log(3 + sqrt 10) - 1)", total <= bound,
                 num(total) + " <= " + num(bound)});

  double spread = 0.0;
  std::vector<double> partials;
  for (double upto : {1e3, 2e3, 5e3, 1e4}) partials.push_back(4.0 * kPi * kPi * partial(c2_density, upto));
  for (double p : partials) spread = std::max(spread, std::abs(p - partials.back()));
  out.push_back({"c_2 tail integrable beyond t = 1e3", spread < 1e-3, "partial integrals spread " + num(spread)});
  return out;
}

std::vector<CheckResult> check_hartman() {
  std::vector<CheckResult> out;
  for (const char* id : {"plane", "paraboloid", "gaussian-bump"}) {
    const HartmanReport h = hartman(catalog_chart(id, {}, 60.0));
    out.push_back({std::string("Hartman residual, ") + id, std::abs(h.residual) < 0.02,
                   "residual " + num(h.residual) + ", int K = " + num(h.total_curvature)});
  }
  return out;
}

}  // namespace

const std::vector<std::string>& paper_example_ids() {
  static const std::vector<std::string> ids{"lemma51", "example41", "example-s1xr2", "hartman", "corollary15"};
  return ids;
}

std::vector<CheckResult> verify_example(const std::string& id) {
  try {
    if (id == "lemma51") return check_lemma51();
    if (id == "corollary15") return check_corollary15();
    if (id == "example41") return check_example41();
    if (id == "example-s1xr2") return check_example_s1xr2();
    if (id == "hartman") return check_hartman();
  } catch (const Error& e) {
    return {{id, false, e.what()}};
  }
  throw ConfigError("unknown example id '" + id + "'");
}

nlohmann::ordered_json checks_to_json(const std::string& id, const std::vector<CheckResult>& checks) {
  nlohmann::ordered_json j;
  j["example"] = id;
  j["checks"] = nlohmann::ordered_json::array();
  bool all = true;
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    all = all && c.pass;
  }
  j["pass"] = all;
  return j;
}

}  // namespace qlayer
