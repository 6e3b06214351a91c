#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace odt {

template <class R> inline constexpr R pi_v = R(3.141592653589793238462643383279502884L);
template <class R> inline constexpr R two_pi_v = R(2) * pi_v<R>;

inline constexpr double pi = pi_v<double>;
inline constexpr double two_pi = two_pi_v<double>;

/// Library-wide error with a stable machine-readable kind tag.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

[[noreturn]] inline void fail(const std::string& kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool ok, const std::string& kind, const std::string& message) {
  if (!ok) fail(kind, message);
}

/// Squared modulus without the hypot path, so that sqrt(|z|^2) and the
/// amplitude used by the residual agree bit-for-bit.
template <class R> inline R abs_sq(const std::complex<R>& z) {
  return z.real() * z.real() + z.imag() * z.imag();
}

template <class R> inline R modulus(const std::complex<R>& z) {
  return std::sqrt(abs_sq(z));
}

}  // namespace odt
