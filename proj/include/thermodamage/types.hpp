#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <string>

namespace thermodamage {

using Vec    = Eigen::VectorXd;
using Vec2   = Eigen::Vector2d;
using Mat2   = Eigen::Matrix2d;
using SpMat  = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Thrown for malformed meshes, inadmissible states, broken invariants.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown for unreadable / inconsistent configuration input.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown for file I/O problems.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when an implicit solve diverges; carries the offending time step.
struct StepFailure : std::runtime_error {
    StepFailure(int step_, const std::string& what_)
        : std::runtime_error("step " + std::to_string(step_) + ": " + what_),
          step(step_) {}
    int step;
};

} // namespace thermodamage
