#pragma once

// Scalar types and dense matrices shared by the kernel. Quad precision comes
// from GCC's __float128 through Boost.Multiprecision; Eigen picks up its
// NumTraits from boost/multiprecision/eigen.hpp.

#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/float128.hpp>

#include <Eigen/Dense>

#include <complex>
#include <type_traits>

#include "kpc/types.hpp"

namespace kpc {

using Quad = boost::multiprecision::float128;

template <class T>
struct real_of {
  using type = T;
};
template <class T>
struct real_of<std::complex<T>> {
  using type = T;
};
template <class T>
using real_of_t = typename real_of<T>::type;

template <class T>
inline constexpr bool is_complex_v = !std::is_same_v<real_of_t<T>, T>;

/// Dense matrix with inline storage for up to kMaxModes rows/columns.
template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                             static_cast<int>(kMaxModes), static_cast<int>(kMaxModes)>;

/// Point in KP coordinates carried at working precision.
template <class Real>
struct BasicPoint {
  Real x{0};
  Real y{0};
  Real t{0};
};

template <class Real>
BasicPoint<Real> lift(const EvalPoint& p) {
  return {Real(p.x), Real(p.y), Real(p.t)};
}

template <class Real>
double to_double(const Real& v) {
  return static_cast<double>(v);
}

template <class Real>
double to_double(const std::complex<Real>& v) {
  return static_cast<double>(v.real());
}

template <class Scalar>
real_of_t<Scalar> real_part(const Scalar& v) {
  if constexpr (is_complex_v<Scalar>)
    return v.real();
  else
    return v;
}

}  // namespace kpc
