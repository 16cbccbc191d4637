#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace plurigreen {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StencilOutOfDomain : public Error {
 public:
  explicit StencilOutOfDomain(const std::string& what) : Error("stencil out of domain: " + what) {}
};

class EvaluationAtPole : public Error {
 public:
  explicit EvaluationAtPole(const std::string& what) : Error("evaluation at pole: " + what) {}
};

class InfeasibleBackground : public Error {
 public:
  explicit InfeasibleBackground(const std::string& what) : Error("infeasible background: " + what) {}
};

class InfeasibleProblem : public Error {
 public:
  explicit InfeasibleProblem(const std::string& what) : Error("infeasible problem: " + what) {}
};

class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error("invalid input: " + what) {}
};

class RadiusOutOfRange : public Error {
 public:
  explicit RadiusOutOfRange(const std::string& what) : Error("radius out of range: " + what) {}
};

class InsufficientRadii : public Error {
 public:
  explicit InsufficientRadii(const std::string& what) : Error("insufficient radii: " + what) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& expected)
      : Error("parse error at " + std::to_string(position) + ": expected " + expected), position_(position)
  {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class ConvergenceFailure : public Error {
 public:
  explicit ConvergenceFailure(const std::string& what) : Error("no convergence: " + what) {}
};

class GaugeFailure : public Error {
 public:
  explicit GaugeFailure(const std::string& what) : Error("gauge failure: " + what) {}
};

class SymmetryViolation : public Error {
 public:
  explicit SymmetryViolation(const std::string& what) : Error("symmetry violation: " + what) {}
};

class PivotDegenerate : public Error {
 public:
  explicit PivotDegenerate(const std::string& what) : Error("degenerate pivot: " + what) {}
};

class NotASection : public Error {
 public:
  explicit NotASection(const std::string& what) : Error("not a section: " + what) {}
};

class HypothesisViolated : public Error {
 public:
  explicit HypothesisViolated(const std::string& what) : Error("hypothesis violated: " + what) {}
};

class NotPositive : public Error {
 public:
  explicit NotPositive(const std::string& what) : Error("not positive: " + what) {}
};

class StageFailure : public Error {
 public:
  StageFailure(int stage, const std::string& what)
      : Error("stage " + std::to_string(stage) + " failed: " + what), stage_(stage)
  {}
  int stage() const { return stage_; }

 private:
  int stage_;
};

}  // namespace plurigreen
