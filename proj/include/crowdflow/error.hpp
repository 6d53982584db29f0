#pragma once

#include <stdexcept>
#include <string>

namespace crowdflow {

// Malformed or unreadable input data (files, CSV cells, image headers).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or violated preconditions supplied by the caller.
class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace crowdflow
