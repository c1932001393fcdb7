#pragma once

#include <stdexcept>
#include <string>

namespace epbolt {

/// An iterative solver (Newton or Picard) failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// A time loop aborted; carries the index of the failing step.
class StepError : public std::runtime_error {
public:
    StepError(int step, const std::string& what)
        : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}

    int step() const noexcept { return step_; }

private:
    int step_;
};

}  // namespace epbolt
