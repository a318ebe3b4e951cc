#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace exportcast {

// Dense storage used across the library. Rows are countries (or stacked
// country-years), columns are products.
template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = DenseMatrix<double>;
using Vector = DenseVector<double>;
using BinaryMatrix = DenseMatrix<std::uint8_t>;
using BinaryVector = DenseVector<std::uint8_t>;

// Error taxonomy. Every failure surfaced by the library derives from Error so
// the CLI can report it uniformly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A requested year, product or country is not part of the data.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Malformed input text. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Per-(country, product) coverage of assembled outputs is broken.
class AssemblyError : public Error {
 public:
  using Error::Error;
};

using Engine = std::mt19937_64;

// Derives an independent stream seed from a master seed and a tuple of
// identifiers (product, fold, tree, ...). The result depends only on the
// inputs, never on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> keys) {
  std::seed_seq::result_type parts[16];
  std::size_t n = 0;
  parts[n++] = static_cast<std::uint32_t>(master);
  parts[n++] = static_cast<std::uint32_t>(master >> 32);
  for (std::uint64_t key : keys) {
    if (n + 2 > std::size(parts)) break;
    parts[n++] = static_cast<std::uint32_t>(key);
    parts[n++] = static_cast<std::uint32_t>(key >> 32);
  }
  std::seed_seq seq(parts, parts + n);
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace exportcast
