#include "ncf/constellation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "ncf/common.hpp"

namespace ncf {

namespace {

std::vector<double> pam_levels(int order) {
  std::vector<double> out(order);
  for (int i = 0; i < order; ++i) out[i] = 2.0 * i - (order - 1);
  return out;
}

}  // namespace

Modulation parse_modulation(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "bpsk") return Modulation::bpsk;
  if (lower == "4pam") return Modulation::pam4;
  if (lower == "8pam") return Modulation::pam8;
  if (lower == "4qam") return Modulation::qam4;
  if (lower == "16qam") return Modulation::qam16;
  throw ConfigError("unsupported modulation '" + std::string(name) + "'");
}

std::string_view to_string(Modulation m) {
  switch (m) {
    case Modulation::bpsk: return "bpsk";
    case Modulation::pam4: return "4pam";
    case Modulation::pam8: return "8pam";
    case Modulation::qam4: return "4qam";
    case Modulation::qam16: return "16qam";
  }
  throw ConfigError("unknown modulation tag");
}

Constellation Constellation::build(Modulation scheme, double power) {
  if (!(power > 0.0) || !std::isfinite(power)) throw ArgumentError("constellation power must be positive");
  Constellation c;
  c.scheme_ = scheme;
  c.power_ = power;
  int order = 0;
  switch (scheme) {
    case Modulation::bpsk: order = 2; c.dim_ = 1; break;
    case Modulation::pam4: order = 4; c.dim_ = 1; break;
    case Modulation::pam8: order = 8; c.dim_ = 1; break;
    case Modulation::qam4: order = 2; c.dim_ = 2; break;
    case Modulation::qam16: order = 4; c.dim_ = 2; break;
  }
  const auto amp = pam_levels(order);
  double energy = 0.0;
  for (double a : amp) energy += a * a;
  energy /= order;
  if (c.dim_ == 1) {
    const double scale = std::sqrt(power / energy);
    for (double a : amp) c.points_.push_back(a * scale);
  } else {
    // Each dimension carries half the power.
    const double scale = std::sqrt(power / (2.0 * energy));
    for (double i : amp)
      for (double q : amp) {
        c.points_.push_back(i * scale);
        c.points_.push_back(q * scale);
      }
  }
  const int m = static_cast<int>(c.points_.size()) / c.dim_;
  c.prior_.assign(m, 1.0 / m);
  return c;
}

std::span<const double> Constellation::point(int index) const {
  if (index < 0 || index >= size()) throw ArgumentError("symbol index out of range");
  return std::span<const double>(points_).subspan(static_cast<std::size_t>(index) * dim_, dim_);
}

int Constellation::index_of(std::span<const double> p) const {
  if (static_cast<int>(p.size()) != dim_) throw ArgumentError("point dimensionality mismatch");
  for (int i = 0; i < size(); ++i) {
    auto s = point(i);
    if (std::equal(s.begin(), s.end(), p.begin())) return i;
  }
  throw ArgumentError("point is not a constellation symbol");
}

std::vector<double> Constellation::levels() const {
  std::vector<double> out;
  for (double v : points_) out.push_back(v);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double Constellation::average_power() const {
  double acc = 0.0;
  for (int i = 0; i < size(); ++i) {
    double e = 0.0;
    for (double v : point(i)) e += v * v;
    acc += prior_[i] * e;
  }
  return acc;
}

std::span<const double> symbol_of(int w, const Constellation& c) {
  if (w < 1 || w > c.size()) throw ArgumentError("symbol index w must lie in 1..|X|");
  return c.point(w - 1);
}

}  // namespace ncf
