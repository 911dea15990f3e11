#include <cmath>
#include <limits>

#include "taste/error.hpp"
#include "taste/eval.hpp"

namespace taste {

Stance author_vote(std::span<const UtterancePrediction> predictions) {
  if (predictions.empty()) throw ValidationError("cannot vote over zero predictions");
  std::size_t pro = 0;
  double pro_mass = 0.0;
  for (const auto& p : predictions) {
    if (p.predicted == Stance::kPro) ++pro;
    pro_mass += p.pro_probability;
  }
  const std::size_t con = predictions.size() - pro;
  if (pro != con) return pro > con ? Stance::kPro : Stance::kCon;
  return pro_mass / static_cast<double>(predictions.size()) >= 0.5 ? Stance::kPro : Stance::kCon;
}

double accuracy(std::span<const Stance> predicted, std::span<const Stance> gold) {
  if (predicted.size() != gold.size()) throw ValidationError("prediction and gold lengths differ");
  if (predicted.empty()) throw ValidationError("accuracy of an empty sample");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == gold[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The fraction converges fast for x < (a+1)/(a+b+2); use the symmetry otherwise.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw ValidationError("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("paired samples differ in length");
  if (a.size() < 2) throw ValidationError("paired t-test needs at least two pairs");
  const auto n = static_cast<double>(a.size());

  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  bool all_zero = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) all_zero = false;
    ss += (d - mean) * (d - mean);
  }

  TTestResult r;
  r.dof = static_cast<int>(a.size()) - 1;
  if (all_zero) {
    r.degenerate = true;
    return r;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) {
    // Constant non-zero difference.
    r.degenerate = true;
    r.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
    r.p = 0.0;
    return r;
  }
  r.t = mean / (sd / std::sqrt(n));
  r.p = student_t_two_sided_p(r.t, r.dof);
  return r;
}

std::map<std::string, BucketStat> error_by_activity(std::span<const AuthorOutcome> outcomes) {
  std::map<std::string, BucketStat> out{{"1-2", {}}, {"3-9", {}}, {"10-19", {}}, {"20+", {}}};
  for (const auto& o : outcomes) {
    const char* bucket = o.utterances <= 2 ? "1-2" : o.utterances <= 9 ? "3-9" : o.utterances <= 19 ? "10-19" : "20+";
    BucketStat& b = out[bucket];
    ++b.authors;
    if (!o.correct) ++b.errors;
  }
  for (auto& [name, b] : out) {
    b.error_rate = b.authors ? static_cast<double>(b.errors) / static_cast<double>(b.authors) : 0.0;
  }
  return out;
}

}  // namespace taste
