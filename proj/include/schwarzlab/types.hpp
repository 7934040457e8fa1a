#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace schwarzlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};
class NotSpd : public Error {
 public:
  using Error::Error;
};
class NotSymmetric : public Error {
 public:
  using Error::Error;
};
class RankDeficient : public Error {
 public:
  using Error::Error;
};
class NotComplementary : public Error {
 public:
  using Error::Error;
};
class TooCoarse : public Error {
 public:
  using Error::Error;
};
class EmptyElementSet : public Error {
 public:
  using Error::Error;
};
class NotOnBoundary : public Error {
 public:
  using Error::Error;
};
class IndivisibleBlocks : public Error {
 public:
  using Error::Error;
};
class OverlapTooLarge : public Error {
 public:
  using Error::Error;
};
class NotInG : public Error {
 public:
  using Error::Error;
};
class DenseCapExceeded : public Error {
 public:
  using Error::Error;
};
class MissingConstant : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace schwarzlab
