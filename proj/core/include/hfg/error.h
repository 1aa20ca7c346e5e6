/**
 *  Copyright (c) 2026 by Contributors
 * @file hfg/error.h
 * @brief Exception hierarchy shared by every module.
 */
#ifndef HFG_ERROR_H_
#define HFG_ERROR_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hfg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent shapes, dimensions, or layered structure.
class StructuralError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class OwnershipError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Connection, timeout, or remote-side failure of an RPC.
class TransportError : public Error {
 public:
  using Error::Error;
};

class CollectiveError : public Error {
 public:
  using Error::Error;
};

/// A mini-batch could not be produced; carries the sequence number.
class PipelineError : public Error {
 public:
  PipelineError(std::uint64_t seq_no, const std::string& what)
      : Error("mini-batch " + std::to_string(seq_no) + ": " + what),
        seq_no_(seq_no) {}
  std::uint64_t seq_no() const { return seq_no_; }

 private:
  std::uint64_t seq_no_;
};

class IncompleteBatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace hfg

#endif  // HFG_ERROR_H_
