// fieldasr/common.h
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FIELDASR_COMMON_H_
#define FIELDASR_COMMON_H_

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <Eigen/Core>

namespace fieldasr {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Index = Eigen::Index;

// Read-only matrix argument; the scalar is taken from the other arguments.
template <typename Scalar>
using ConstMatrixRef = Eigen::Ref<const Matrix<std::type_identity_t<Scalar>>>;

// Broad failure classes. The CLI maps these onto its exit codes.
enum class ErrorKind { kConfig, kData, kTraining, kUsage };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

#define FIELDASR_DEFINE_ERROR(Name, Kind)                                 \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string &what) : Error(ErrorKind::Kind, what) {} \
  };

FIELDASR_DEFINE_ERROR(ConfigError, kConfig)
FIELDASR_DEFINE_ERROR(ParseError, kData)
FIELDASR_DEFINE_ERROR(ReferenceError, kData)
FIELDASR_DEFINE_ERROR(SchemaError, kData)
FIELDASR_DEFINE_ERROR(RangeError, kData)
FIELDASR_DEFINE_ERROR(FormatError, kData)
FIELDASR_DEFINE_ERROR(IoError, kData)
FIELDASR_DEFINE_ERROR(OovError, kData)
FIELDASR_DEFINE_ERROR(CoverageError, kData)
FIELDASR_DEFINE_ERROR(AlignmentError, kData)
FIELDASR_DEFINE_ERROR(InfeasibleTargetError, kData)
FIELDASR_DEFINE_ERROR(ShapeError, kData)
FIELDASR_DEFINE_ERROR(TrainingError, kTraining)
FIELDASR_DEFINE_ERROR(UsageError, kUsage)

#undef FIELDASR_DEFINE_ERROR

template <typename Scalar>
constexpr Scalar kLogZero = -std::numeric_limits<Scalar>::infinity();

// log(exp(a) + exp(b)) without overflow; kLogZero is the identity.
template <typename Scalar>
inline Scalar log_add(Scalar a, Scalar b) {
  if (a < b) std::swap(a, b);
  if (b == kLogZero<Scalar>) return a;
  return a + std::log1p(std::exp(b - a));
}

// Row-wise log-softmax of a T x K matrix.
template <typename Derived>
Matrix<typename Derived::Scalar> log_softmax_rows(
    const Eigen::MatrixBase<Derived> &logits) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out(logits.rows(), logits.cols());
  for (Index t = 0; t < logits.rows(); ++t) {
    const Scalar peak = logits.row(t).maxCoeff();
    const Scalar log_norm =
        peak + std::log((logits.row(t).array() - peak).exp().sum());
    out.row(t) = logits.row(t).array() - log_norm;
  }
  return out;
}

// Deterministic 64-bit mixing, used to derive named sub-seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, const std::string &name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ h);
}

inline std::uint64_t derive_seed(std::uint64_t seed, const std::string &name,
                                 std::uint64_t index) {
  return splitmix64(derive_seed(seed, name) + index);
}

}  // namespace fieldasr

#endif  // FIELDASR_COMMON_H_
