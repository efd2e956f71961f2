#pragma once

#include <stdexcept>
#include <string>

namespace qpt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class InvalidMatrix : public Error {
 public:
  using Error::Error;
};

/// Measured intensities admit no physical gate (e.g. a cosine outside [-1, 1]).
class NonPhysicalData : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class MalformedModel : public Error {
 public:
  using Error::Error;
};

class CorruptModelFile : public MalformedModel {
 public:
  using MalformedModel::MalformedModel;
};

class ModelVersionError : public MalformedModel {
 public:
  using MalformedModel::MalformedModel;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace qpt
