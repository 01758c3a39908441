#pragma once

#include <stdexcept>
#include <string>

namespace hlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// Horizon policy did not reach the requested certificate level.
class IncompletePath : public Error {
 public:
  IncompletePath(const std::string& what, double achieved_ratio)
      : Error(what), ratio_(achieved_ratio) {}
  double ratio() const { return ratio_; }

 private:
  double ratio_;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace hlab
