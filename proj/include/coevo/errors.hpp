#pragma once

#include <stdexcept>
#include <string>

namespace coevo {

/// A model or operation argument outside its documented domain.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The request exceeds what an exhaustive routine can enumerate.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// An operation was invoked in a state that does not allow it.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace coevo
