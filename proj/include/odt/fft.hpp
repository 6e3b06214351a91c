#pragma once

#include <fftw3.h>

#include <array>
#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include "odt/common.hpp"

namespace odt {
namespace fft {

template <class R> struct fftw_api;

template <> struct fftw_api<double> {
  using plan = fftw_plan;
  using cplx = fftw_complex;
  static plan plan_many(int rank, const int* n, cplx* in, cplx* out, int sign) {
    return fftw_plan_dft(rank, n, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  static void execute(plan p, cplx* in, cplx* out) { fftw_execute_dft(p, in, out); }
};

template <> struct fftw_api<float> {
  using plan = fftwf_plan;
  using cplx = fftwf_complex;
  static plan plan_many(int rank, const int* n, cplx* in, cplx* out, int sign) {
    return fftwf_plan_dft(rank, n, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  static void execute(plan p, cplx* in, cplx* out) { fftwf_execute_dft(p, in, out); }
};

/// Process-wide plan cache. Plan creation is serialized (FFTW requirement);
/// execution through the new-array interface is thread-safe.
template <class R>
class PlanCache {
public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  typename fftw_api<R>::plan get(const std::vector<int>& dims, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(dims, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;

    std::size_t n = 1;
    for (int d : dims) n *= std::size_t(d);
    std::vector<std::complex<R>> a(n), b(n);
    auto plan = fftw_api<R>::plan_many(
        int(dims.size()), dims.data(),
        reinterpret_cast<typename fftw_api<R>::cplx*>(a.data()),
        reinterpret_cast<typename fftw_api<R>::cplx*>(b.data()), sign);
    require(plan != nullptr, "fft", "FFTW plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

private:
  std::mutex mutex_;
  std::map<std::pair<std::vector<int>, int>, typename fftw_api<R>::plan> plans_;
};

/// Out-of-place c2c transform. Forward is unnormalized; inverse carries 1/N
/// so that inverse(forward(x)) == x.
template <class R>
void transform(const std::vector<std::complex<R>>& in, std::vector<std::complex<R>>& out,
               const std::vector<int>& dims, int sign) {
  std::size_t n = 1;
  for (int d : dims) n *= std::size_t(d);
  require(in.size() == n, "fft", "transform: buffer size does not match dims");
  out.resize(n);
  auto plan = PlanCache<R>::instance().get(dims, sign);
  // in != out is required: plans are created out-of-place.
  fftw_api<R>::execute(
      plan,
      reinterpret_cast<typename fftw_api<R>::cplx*>(
          const_cast<std::complex<R>*>(in.data())),
      reinterpret_cast<typename fftw_api<R>::cplx*>(out.data()));
  if (sign == FFTW_BACKWARD) {
    R scale = R(1) / R(n);
    for (auto& z : out) z *= scale;
  }
}

template <class R>
std::vector<std::complex<R>> forward2(const std::vector<std::complex<R>>& in, int nx, int ny) {
  std::vector<std::complex<R>> out;
  transform<R>(in, out, {nx, ny}, FFTW_FORWARD);
  return out;
}

template <class R>
std::vector<std::complex<R>> inverse2(const std::vector<std::complex<R>>& in, int nx, int ny) {
  std::vector<std::complex<R>> out;
  transform<R>(in, out, {nx, ny}, FFTW_BACKWARD);
  return out;
}

template <class R>
std::vector<std::complex<R>> forward3(const std::vector<std::complex<R>>& in, int nz, int nx,
                                      int ny) {
  std::vector<std::complex<R>> out;
  transform<R>(in, out, {nz, nx, ny}, FFTW_FORWARD);
  return out;
}

template <class R>
std::vector<std::complex<R>> inverse3(const std::vector<std::complex<R>>& in, int nz, int nx,
                                      int ny) {
  std::vector<std::complex<R>> out;
  transform<R>(in, out, {nz, nx, ny}, FFTW_BACKWARD);
  return out;
}

}  // namespace fft
}  // namespace odt
