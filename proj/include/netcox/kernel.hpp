#pragma once

// Compactly supported smoothing kernels on [-1, 1], their moment and L2
// constants, local-linear equivalent kernels, and the asymptotic bandwidth
// transfer factor between two order-one kernels.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>

#include "netcox/error.hpp"
#include "netcox/quadrature.hpp"

namespace netcox {

enum class KernelShape { Triangular, Epanechnikov, Uniform, OneSided, LocalLinearEquivalent };

class Kernel {
 public:
  static Kernel triangular() { return Kernel(KernelShape::Triangular); }
  static Kernel epanechnikov() { return Kernel(KernelShape::Epanechnikov); }
  static Kernel uniform() { return Kernel(KernelShape::Uniform); }

  /// K*(u) = 2 K(u) on [-1, 0]. Only defined for the symmetric base shapes.
  static Kernel one_sided(const Kernel& inner);

  /// L(u) = K(u) (M2 - u M1) / (M2 - M1^2).
  static Kernel local_linear_equivalent(const Kernel& inner);

  /// Same shape with every value multiplied by `factor` (> 0).
  Kernel scaled(double factor) const {
    require(factor > 0.0 && std::isfinite(factor), "kernel scale must be positive");
    Kernel k = *this;
    k.scale_ *= factor;
    return k;
  }

  double operator()(double u) const {
    if (u < lo_ || u > hi_) return 0.0;
    return scale_ * shape_value(u);
  }

  KernelShape shape() const { return shape_; }
  const Kernel* inner() const { return inner_.get(); }
  double scale() const { return scale_; }
  double support_lo() const { return lo_; }
  double support_hi() const { return hi_; }
  bool is_base() const {
    return shape_ == KernelShape::Triangular || shape_ == KernelShape::Epanechnikov ||
           shape_ == KernelShape::Uniform;
  }

  /// Integral of the kernel over [a, b]; closed form for the base shapes and
  /// their one-sided versions, quadrature otherwise.
  double integral(double a, double b) const;

  std::string name() const;

 private:
  explicit Kernel(KernelShape shape) : shape_(shape) {}

  double shape_value(double u) const {
    switch (shape_) {
      case KernelShape::Triangular: return 1.0 - std::abs(u);
      case KernelShape::Epanechnikov: return 0.75 * (1.0 - u * u);
      case KernelShape::Uniform: return 0.5;
      case KernelShape::OneSided: return 2.0 * (*inner_)(u);
      case KernelShape::LocalLinearEquivalent:
        return (*inner_)(u) * (m2_ - u * m1_) / (m2_ - m1_ * m1_);
    }
    return 0.0;
  }

  // Antiderivative of the unscaled base shape, F(-1) = 0.
  double base_cdf(double u) const {
    u = std::clamp(u, -1.0, 1.0);
    switch (shape_) {
      case KernelShape::Triangular:
        return u <= 0.0 ? 0.5 * (u + 1.0) * (u + 1.0) : 1.0 - 0.5 * (1.0 - u) * (1.0 - u);
      case KernelShape::Epanechnikov: return 0.75 * (u - u * u * u / 3.0) + 0.5;
      case KernelShape::Uniform: return 0.5 * (u + 1.0);
      default: return 0.0;
    }
  }

  KernelShape shape_;
  std::shared_ptr<const Kernel> inner_;
  double scale_ = 1.0;
  double lo_ = -1.0;
  double hi_ = 1.0;
  double m1_ = 0.0;
  double m2_ = 0.0;
};

namespace detail {

inline constexpr double kQuadTol = 1e-10;

template <class F>
double integrate_over_support(const Kernel& k, const F& f) {
  const std::array<double, 1> breaks{0.0};
  return quad::piecewise(f, k.support_lo(), k.support_hi(), breaks, kQuadTol);
}

}  // namespace detail

inline double kernel_eval(const Kernel& k, double u) { return k(u); }

/// Integral of u^order k(u) over the kernel support.
inline double kernel_moment(const Kernel& k, int order) {
  require(order >= 0, "moment order must be nonnegative");
  return detail::integrate_over_support(
      k, [&](double u) { return std::pow(u, order) * k(u); });
}

inline double kernel_l2(const Kernel& k) {
  return detail::integrate_over_support(k, [&](double u) {
    const double v = k(u);
    return v * v;
  });
}

inline Kernel Kernel::one_sided(const Kernel& inner) {
  require(inner.is_base(), "one-sided kernels require a symmetric base kernel");
  Kernel k(KernelShape::OneSided);
  k.inner_ = std::make_shared<const Kernel>(inner);
  k.lo_ = -1.0;
  k.hi_ = 0.0;
  return k;
}

inline Kernel Kernel::local_linear_equivalent(const Kernel& inner) {
  const double m1 = kernel_moment(inner, 1);
  const double m2 = kernel_moment(inner, 2);
  if (m2 - m1 * m1 <= 1e-12) {
    fail(ErrorCode::InvalidArgument, "degenerate kernel: M2 - M1^2 <= 1e-12");
  }
  Kernel k(KernelShape::LocalLinearEquivalent);
  k.inner_ = std::make_shared<const Kernel>(inner);
  k.lo_ = inner.support_lo();
  k.hi_ = inner.support_hi();
  k.m1_ = m1;
  k.m2_ = m2;
  return k;
}

inline Kernel equivalent_local_linear(const Kernel& k) {
  return Kernel::local_linear_equivalent(k);
}

inline double Kernel::integral(double a, double b) const {
  a = std::max(a, lo_);
  b = std::min(b, hi_);
  if (!(b > a)) return 0.0;
  if (is_base()) return scale_ * (base_cdf(b) - base_cdf(a));
  if (shape_ == KernelShape::OneSided) {
    return scale_ * 2.0 * inner_->scale() * (inner_->base_cdf(b) - inner_->base_cdf(a));
  }
  const std::array<double, 1> breaks{0.0};
  return quad::piecewise([this](double u) { return (*this)(u); }, a, b, breaks,
                         detail::kQuadTol);
}

inline std::string Kernel::name() const {
  std::string base;
  switch (shape_) {
    case KernelShape::Triangular: base = "triangular"; break;
    case KernelShape::Epanechnikov: base = "epanechnikov"; break;
    case KernelShape::Uniform: base = "uniform"; break;
    case KernelShape::OneSided: base = inner_->name() + "+one_sided"; break;
    case KernelShape::LocalLinearEquivalent:
      base = inner_->name() + "+local_linear_equivalent";
      break;
  }
  return base;
}

/**
 * Factor f with h_to = f * h_from, equating the asymptotically MSE-optimal
 * bandwidths of two order-one kernels:
 *
 *   f = [ (int to^2 / M2(to)^2) * (M2(from)^2 / int from^2) ]^(1/5)
 */
inline double bandwidth_transfer_factor(const Kernel& from, const Kernel& to) {
  for (const Kernel* k : {&from, &to}) {
    if (std::abs(kernel_moment(*k, 1)) > 1e-6) {
      fail(ErrorCode::InvalidArgument, "bandwidth transfer requires order-one kernels: " +
                                           k->name() + " has a nonzero first moment");
    }
  }
  const double m2_from = kernel_moment(from, 2);
  const double m2_to = kernel_moment(to, 2);
  if (std::abs(m2_from) < 1e-12 || std::abs(m2_to) < 1e-12) {
    fail(ErrorCode::InvalidArgument, "bandwidth transfer requires nonzero second moments");
  }
  const double ratio =
      (kernel_l2(to) / (m2_to * m2_to)) * ((m2_from * m2_from) / kernel_l2(from));
  return std::pow(ratio, 0.2);
}

/// Parses "triangular", "epanechnikov" or "uniform", optionally followed by
/// "+one_sided" and/or "+local_linear_equivalent" modifiers applied left to right.
inline Kernel parse_kernel(std::string_view text) {
  auto next = [&](std::string_view& rest) {
    const auto pos = rest.find('+');
    std::string_view token = rest.substr(0, pos);
    rest = pos == std::string_view::npos ? std::string_view{} : rest.substr(pos + 1);
    return token;
  };
  std::string_view rest = text;
  const std::string_view base = next(rest);
  Kernel k = Kernel::triangular();
  if (base == "triangular") {
    k = Kernel::triangular();
  } else if (base == "epanechnikov") {
    k = Kernel::epanechnikov();
  } else if (base == "uniform") {
    k = Kernel::uniform();
  } else {
    fail(ErrorCode::InvalidArgument, "unknown kernel '" + std::string(base) + "'");
  }
  while (!rest.empty()) {
    const std::string_view mod = next(rest);
    if (mod == "one_sided") {
      k = Kernel::one_sided(k);
    } else if (mod == "local_linear_equivalent") {
      k = Kernel::local_linear_equivalent(k);
    } else {
      fail(ErrorCode::InvalidArgument, "unknown kernel modifier '" + std::string(mod) + "'");
    }
  }
  return k;
}

}  // namespace netcox
