#pragma once

#include <stdexcept>
#include <string>

namespace mavmpc {

/// Rejected input: non-finite values, bad dimensions, invalid parameters.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Newton iteration on the implicit integrator stages did not converge.
class IntegratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The vehicle left the model validity region during simulation.
class SimulationFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EstimatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mavmpc
