#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ncf {

enum class Modulation { bpsk, pam4, pam8, qam4, qam16 };

/// Accepts "bpsk", "4pam", "8pam", "4qam", "16qam" in any letter case.
Modulation parse_modulation(std::string_view name);
std::string_view to_string(Modulation m);

/// Finite alphabet with uniform prior, scaled so that E||X||^2 equals the
/// requested power.
///
/// Ordering: PAM symbols ascend by amplitude. QAM symbols are row-major over
/// (in-phase ascending, quadrature ascending), so index = i_I * L + i_Q for an
/// L x L grid. No Gray labeling is applied.
class Constellation {
 public:
  static Constellation build(Modulation scheme, double power);

  Modulation scheme() const { return scheme_; }
  int size() const { return static_cast<int>(prior_.size()); }
  int dim() const { return dim_; }
  double power() const { return power_; }
  std::span<const double> prior() const { return prior_; }

  /// Zero-based symbol lookup.
  std::span<const double> point(int index) const;
  /// Inverse of point(); throws ArgumentError if `p` is not a symbol.
  int index_of(std::span<const double> p) const;
  /// Distinct per-dimension amplitudes (the PAM factor of a QAM grid).
  std::vector<double> levels() const;
  double average_power() const;

 private:
  Modulation scheme_ = Modulation::bpsk;
  int dim_ = 1;
  double power_ = 1.0;
  std::vector<double> points_;  // size() x dim_, row-major
  std::vector<double> prior_;
};

/// One-based symbol mapping W -> X used at the source.
std::span<const double> symbol_of(int w, const Constellation& c);

}  // namespace ncf
