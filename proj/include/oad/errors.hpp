#pragma once

#include <stdexcept>
#include <string>

namespace oad {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Checkpoint or manifest content that cannot be decoded.
class LoadError : public Error {
 public:
  using Error::Error;
};

class DegenerateCrop : public Error {
 public:
  using Error::Error;
};

// Raised by line/spectrum estimators when an image has no usable edges.
class NoStructure : public Error {
 public:
  using Error::Error;
};

class MethodNotApplicable : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(int epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace oad
