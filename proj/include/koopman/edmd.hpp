#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "koopman/observable.hpp"
#include "koopman/system.hpp"

namespace koopman {

/// Ordered list of state observables; Psi(x) stacks their values as a
/// column vector.
class Dictionary {
 public:
  Dictionary(std::string name, std::vector<Observable> observables);

  const std::string& name() const { return name_; }
  std::size_t size() const { return obs_.size(); }
  const std::vector<Observable>& observables() const { return obs_; }
  std::vector<std::string> labels() const;
  Eigen::VectorXcd operator()(const State& x) const;

 private:
  std::string name_;
  std::vector<Observable> obs_;
};

/// All monomials of total degree <= degree, graded (constant first, then
/// degree 1, ...), lexicographic within a degree. Nested in the degree.
Dictionary monomial_dictionary(const StateSpace& space, unsigned degree);
/// 1{x = s} for every state s, in declaration order. Finite spaces only.
Dictionary indicator_dictionary(const StateSpace& space);
/// "monomial" (with degree) or "indicator"; ConfigError otherwise.
Dictionary dictionary_by_name(const StateSpace& space, const std::string& name, unsigned degree);

struct Sample {
  State x;
  InputId u;
  State x_next;
};

class TrainingSet {
 public:
  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  std::size_t count(InputId u) const;
  void add(Sample s) { samples_.push_back(std::move(s)); }

  /// Columns: state components, input label, next-state components.
  void write_csv(std::ostream& os, const ControlSystem& sys) const;
  /// Reads what write_csv wrote; states and inputs are resolved against sys.
  static TrainingSet read_csv(std::istream& is, const ControlSystem& sys);

 private:
  std::vector<Sample> samples_;
};

/// `resolution` points per coordinate, endpoints included.
struct GridOnBox {
  std::size_t resolution;
};
struct UniformRandom {
  std::size_t n;
  std::uint64_t seed;
};
struct ExhaustiveFinite {};
using Sampler = std::variant<GridOnBox, UniformRandom, ExhaustiveFinite>;

/// With per_input every sampled state is paired with every input; without
/// it inputs are assigned round robin. ExhaustiveFinite always takes all
/// pairs. Throws ConfigError when the sampler produces too few samples and
/// UnsupportedError when it does not fit the state space.
TrainingSet collect_data(const ControlSystem& sys, const Sampler& sampler, bool per_input = true);

inline constexpr double kRidge = 1e-10;
inline constexpr double kConditionLimit = 1e12;

/// Psi(x+) ~ A(u) Psi(x) with A(u) looked up per input label.
class SeparableModel {
 public:
  SeparableModel(std::vector<std::string> dictionary_labels, std::vector<std::string> input_labels);

  const std::vector<std::string>& dictionary_labels() const { return dict_labels_; }
  const std::vector<std::string>& input_labels() const { return input_labels_; }
  std::size_t dimension() const { return dict_labels_.size(); }

  bool has(InputId u) const;
  /// Throws DomainError when no matrix was fitted for u.
  const Eigen::MatrixXcd& matrix(InputId u) const;
  void set(InputId u, Eigen::MatrixXcd a);

  /// Per-label row-major real and imaginary parts plus dictionary labels.
  std::string to_json() const;
  static SeparableModel from_json(const std::string& text);

 private:
  std::vector<std::string> dict_labels_;
  std::vector<std::string> input_labels_;
  std::vector<std::optional<Eigen::MatrixXcd>> a_;
};

struct InputFit {
  std::string input;
  std::size_t samples = 0;
  double residual = 0.0;               // ||Y - A X||_F^2 / samples
  std::vector<double> target_residual; // same, one entry per dictionary element
  double condition = 0.0;              // of the Gram matrix
  bool rank_deficient = false;
};

struct FitReport {
  std::vector<InputFit> inputs;        // fitted inputs, in input order
  std::vector<std::string> missing;    // inputs with no samples
  bool rank_deficient() const;
};

struct FitResult {
  SeparableModel model;
  FitReport report;
};

/// Least squares A = argmin ||Y - A X||_F with columns as samples, via the
/// ridge-regularized normal equations (X X^H + ridge I) A^H = X Y^H,
/// followed by `refinements` iterated-Tikhonov correction steps.
Eigen::MatrixXcd fit_least_squares(const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& Y,
                                   double ridge = kRidge, std::size_t refinements = 1);

FitResult fit_kcf(const Dictionary& dict, const TrainingSet& data, const ControlSystem& sys,
                  double ridge = kRidge);

/// z_0 = Psi(x0), z_{j+1} = A(seq(j)) z_j; k+1 vectors.
std::vector<Eigen::VectorXcd> predict(const SeparableModel& model, const Dictionary& dict,
                                      const State& x0, const InputSequence& seq, std::size_t k);

/// e_j = max_i |z_j(i) - Psi(x_j)(i)| against simulate.
std::vector<double> prediction_error(const SeparableModel& model, const Dictionary& dict,
                                     const ControlSystem& sys, const State& x0,
                                     const InputSequence& seq, std::size_t k);

}  // namespace koopman
