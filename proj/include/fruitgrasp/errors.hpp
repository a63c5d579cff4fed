#pragma once

#include <stdexcept>
#include <string>

namespace fruitgrasp {

// Error taxonomy shared across the pipeline. Every rejection the benchmark
// counts as a distinct failure mode gets its own type so callers can catch
// and tally them without string matching.

/// Angle or parameter left its admissible range (e.g. grasp angles past +-pi/4).
class OutOfRangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input cloud too small for the requested operation (outlier rejection minimum).
class TooFewPointsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cloud below the fixed sample size after downsampling; the sample is skipped.
class InsufficientPointsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Geometric construction has no unique solution (coplanar quadruple, zero direction).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Learned estimator produced an implausibly small radius; treated as a sensing defect.
class DegenerateOutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// RANSAC never reached the minimum inlier fraction.
class NoConsensusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hough accumulator had no bin with enough votes to define a sphere.
class EmptyAccumulatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyDatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint or tensor shapes disagree with the declared configuration.
class ShapeMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed dataset/report/config content; carries the 1-based line number
/// when the source is a line-oriented file (0 when not applicable).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                    : message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fruitgrasp
