#include "koopman/edmd.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "koopman/errors.hpp"
#include "koopman/sampling.hpp"

namespace koopman {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string format_coord(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_state(std::ostream& os, const State& x, const StateSpace& X) {
  if (X.is_finite()) {
    os << X.labels()[x.index()];
    return;
  }
  const auto c = x.coords();
  for (std::size_t i = 0; i < c.size(); ++i) os << (i ? "," : "") << format_coord(c[i]);
}

State read_state(const std::vector<std::string>& cells, std::size_t& pos, const StateSpace& X) {
  if (X.is_finite()) return X.find(cells.at(pos++));
  std::vector<double> c(X.dimension());
  for (auto& v : c) {
    const std::string& s = cells.at(pos++);
    std::size_t used = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw ConfigError("not a number in training CSV: '" + s + "'");
  }
  State x = State::real(std::move(c));
  X.require(x);
  return x;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = (i + 1 == n) ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

std::vector<State> grid(const StateSpace& X, std::size_t r) {
  const std::size_t d = X.dimension();
  std::vector<std::vector<double>> axes;
  for (std::size_t i = 0; i < d; ++i) axes.push_back(linspace(X.lower()[i], X.upper()[i], r));
  std::vector<State> out;
  std::vector<std::size_t> idx(d, 0);
  while (true) {
    std::vector<double> c(d);
    for (std::size_t i = 0; i < d; ++i) c[i] = axes[i][idx[i]];
    out.push_back(State::real(std::move(c)));
    std::size_t i = d;
    while (i > 0 && ++idx[i - 1] == r) idx[--i] = 0;
    if (i == 0) break;
  }
  return out;
}

}  // namespace

Dictionary::Dictionary(std::string name, std::vector<Observable> observables)
    : name_(std::move(name)), obs_(std::move(observables)) {
  if (obs_.empty()) throw ContractError("a dictionary needs at least one observable");
  for (const auto& f : obs_)
    if (f.domain() != DomainTag::StateOnly)
      throw DomainMismatch("dictionary element '" + f.label() + "' is not a state observable");
}

std::vector<std::string> Dictionary::labels() const {
  std::vector<std::string> out;
  for (const auto& f : obs_) out.push_back(f.label());
  return out;
}

Eigen::VectorXcd Dictionary::operator()(const State& x) const {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(obs_.size()));
  for (std::size_t i = 0; i < obs_.size(); ++i) v(static_cast<Eigen::Index>(i)) = obs_[i](x);
  return v;
}

Dictionary monomial_dictionary(const StateSpace& space, unsigned degree) {
  const std::size_t n = space.dimension();
  std::vector<Observable> out;
  std::vector<unsigned> e(n, 0);
  // exponent vectors of total degree exactly `left`, lexicographically
  // descending in the first coordinate (x0^2 before x0*x1 before x1^2)
  auto emit = [&](auto&& self, std::size_t i, unsigned left) -> void {
    if (i + 1 == n) {
      e[i] = left;
      out.push_back(monomial(space, e));
      e[i] = 0;
      return;
    }
    for (unsigned k = left + 1; k-- > 0;) {
      e[i] = k;
      self(self, i + 1, left - k);
    }
    e[i] = 0;
  };
  for (unsigned d = 0; d <= degree; ++d) emit(emit, 0, d);
  return Dictionary("monomial:" + std::to_string(degree), std::move(out));
}

Dictionary indicator_dictionary(const StateSpace& space) {
  if (!space.is_finite()) throw UnsupportedError("indicator dictionary needs a finite state space");
  std::vector<Observable> out;
  for (std::size_t i = 0; i < space.size(); ++i) out.push_back(indicator(space, space.at(i)));
  return Dictionary("indicator", std::move(out));
}

Dictionary dictionary_by_name(const StateSpace& space, const std::string& name, unsigned degree) {
  if (name == "monomial") return monomial_dictionary(space, degree);
  if (name == "indicator") return indicator_dictionary(space);
  throw ConfigError("unknown dictionary '" + name + "' (expected monomial or indicator)");
}

std::size_t TrainingSet::count(InputId u) const {
  std::size_t n = 0;
  for (const auto& s : samples_) n += s.u == u;
  return n;
}

void TrainingSet::write_csv(std::ostream& os, const ControlSystem& sys) const {
  const StateSpace& X = sys.states();
  const std::size_t d = X.dimension();
  for (std::size_t i = 0; i < d; ++i) os << "x" << i << ",";
  os << "u";
  for (std::size_t i = 0; i < d; ++i) os << ",next_x" << i;
  os << "\n";
  for (const auto& s : samples_) {
    write_state(os, s.x, X);
    os << "," << sys.inputs().label(s.u) << ",";
    write_state(os, s.x_next, X);
    os << "\n";
  }
}

TrainingSet TrainingSet::read_csv(std::istream& is, const ControlSystem& sys) {
  const StateSpace& X = sys.states();
  const std::size_t width = 2 * X.dimension() + 1;
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("training CSV is empty");
  if (split(line, ',').size() != width) throw ConfigError("training CSV header has the wrong width");
  TrainingSet out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != width)
      throw ConfigError("training CSV line " + std::to_string(lineno) + " has " +
                        std::to_string(cells.size()) + " fields, expected " + std::to_string(width));
    std::size_t pos = 0;
    State x = read_state(cells, pos, X);
    const InputId u = sys.inputs().find(cells.at(pos++));
    State y = read_state(cells, pos, X);
    out.add({std::move(x), u, std::move(y)});
  }
  return out;
}

TrainingSet collect_data(const ControlSystem& sys, const Sampler& sampler, bool per_input) {
  const StateSpace& X = sys.states();
  std::vector<State> states;
  bool all_pairs = per_input;
  if (const auto* g = std::get_if<GridOnBox>(&sampler)) {
    if (X.is_finite()) throw UnsupportedError("grid sampling needs a box state space");
    if (g->resolution < 2) throw ConfigError("grid resolution must be at least 2");
    states = grid(X, g->resolution);
  } else if (const auto* r = std::get_if<UniformRandom>(&sampler)) {
    if (r->n == 0) throw ConfigError("uniform sampling needs at least one sample");
    Rng rng(r->seed);
    for (std::size_t i = 0; i < r->n; ++i) states.push_back(sample_state(X, rng));
  } else {
    if (!X.is_finite()) throw UnsupportedError("exhaustive sampling needs a finite state space");
    for (std::size_t i = 0; i < X.size(); ++i) states.push_back(State::finite(i));
    all_pairs = true;
  }
  const std::size_t m = sys.inputs().size();
  if (!all_pairs && states.size() < m)
    throw ConfigError("round-robin sampling with " + std::to_string(states.size()) +
                      " states leaves some of the " + std::to_string(m) + " inputs without data");
  TrainingSet out;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (all_pairs) {
      for (InputId u : sys.inputs().all()) out.add({states[i], u, sys.step(states[i], u)});
    } else {
      const InputId u{i % m};
      out.add({states[i], u, sys.step(states[i], u)});
    }
  }
  return out;
}

SeparableModel::SeparableModel(std::vector<std::string> dictionary_labels,
                               std::vector<std::string> input_labels)
    : dict_labels_(std::move(dictionary_labels)),
      input_labels_(std::move(input_labels)),
      a_(input_labels_.size()) {}

bool SeparableModel::has(InputId u) const { return u.value < a_.size() && a_[u.value].has_value(); }

const Eigen::MatrixXcd& SeparableModel::matrix(InputId u) const {
  if (!has(u))
    throw DomainError("no fitted matrix for input " +
                      (u.value < input_labels_.size() ? "'" + input_labels_[u.value] + "'"
                                                      : std::to_string(u.value)));
  return *a_[u.value];
}

void SeparableModel::set(InputId u, Eigen::MatrixXcd a) {
  if (u.value >= a_.size()) throw DomainError("input index out of range");
  const auto n = static_cast<Eigen::Index>(dimension());
  if (a.rows() != n || a.cols() != n) throw ContractError("matrix does not match the dictionary size");
  a_[u.value] = std::move(a);
}

std::string SeparableModel::to_json() const {
  using nlohmann::ordered_json;
  ordered_json mats = ordered_json::object();
  for (std::size_t k = 0; k < a_.size(); ++k) {
    if (!a_[k]) continue;
    const auto& a = *a_[k];
    std::vector<double> re, im;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        re.push_back(a(i, j).real());
        im.push_back(a(i, j).imag());
      }
    mats[input_labels_[k]] = {{"rows", a.rows()}, {"cols", a.cols()}, {"re", re}, {"im", im}};
  }
  ordered_json out = {{"dictionary", dict_labels_}, {"inputs", input_labels_}, {"A", mats}};
  return out.dump(2) + "\n";
}

SeparableModel SeparableModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    SeparableModel m(j.at("dictionary").get<std::vector<std::string>>(),
                     j.at("inputs").get<std::vector<std::string>>());
    for (std::size_t k = 0; k < m.input_labels_.size(); ++k) {
      const auto it = j.at("A").find(m.input_labels_[k]);
      if (it == j.at("A").end()) continue;
      const auto rows = it->at("rows").get<Eigen::Index>();
      const auto cols = it->at("cols").get<Eigen::Index>();
      const auto re = it->at("re").get<std::vector<double>>();
      const auto im = it->at("im").get<std::vector<double>>();
      if (re.size() != static_cast<std::size_t>(rows * cols) || im.size() != re.size())
        throw ConfigError("model matrix for '" + m.input_labels_[k] + "' has the wrong size");
      Eigen::MatrixXcd a(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
          const auto idx = static_cast<std::size_t>(r * cols + c);
          a(r, c) = Complex(re[idx], im[idx]);
        }
      m.set(InputId{k}, std::move(a));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model JSON: ") + e.what());
  }
}

bool FitReport::rank_deficient() const {
  for (const auto& f : inputs)
    if (f.rank_deficient) return true;
  return false;
}

Eigen::MatrixXcd fit_least_squares(const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& Y,
                                   double ridge, std::size_t refinements) {
  if (X.cols() != Y.cols()) throw ContractError("X and Y need the same number of samples");
  const Eigen::MatrixXcd G =
      X * X.adjoint() + ridge * Eigen::MatrixXcd::Identity(X.rows(), X.rows());
  const auto solver = G.ldlt();
  Eigen::MatrixXcd AH = solver.solve(X * Y.adjoint());
  // iterated Tikhonov: removes the O(ridge) shrinkage on well-posed
  // directions, null-space directions stay regularized
  for (std::size_t k = 0; k < refinements; ++k)
    AH += solver.solve(X * (Y.adjoint() - X.adjoint() * AH));
  return AH.adjoint();
}

FitResult fit_kcf(const Dictionary& dict, const TrainingSet& data, const ControlSystem& sys,
                  double ridge) {
  SeparableModel model(dict.labels(), sys.inputs().labels());
  FitReport report;
  const auto n = static_cast<Eigen::Index>(dict.size());
  for (InputId u : sys.inputs().all()) {
    const std::size_t m = data.count(u);
    if (m == 0) {
      report.missing.push_back(sys.inputs().label(u));
      continue;
    }
    Eigen::MatrixXcd X(n, static_cast<Eigen::Index>(m)), Y(n, static_cast<Eigen::Index>(m));
    Eigen::Index col = 0;
    for (const auto& s : data.samples()) {
      if (!(s.u == u)) continue;
      X.col(col) = dict(s.x);
      Y.col(col) = dict(s.x_next);
      ++col;
    }
    Eigen::MatrixXcd A = fit_least_squares(X, Y, ridge);

    InputFit fit;
    fit.input = sys.inputs().label(u);
    fit.samples = m;
    const Eigen::MatrixXcd R = Y - A * X;
    fit.residual = R.squaredNorm() / static_cast<double>(m);
    for (Eigen::Index i = 0; i < n; ++i)
      fit.target_residual.push_back(R.row(i).squaredNorm() / static_cast<double>(m));
    const Eigen::VectorXd ev =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(X * X.adjoint(), Eigen::EigenvaluesOnly)
            .eigenvalues();
    const double lo = ev.minCoeff(), hi = ev.maxCoeff();
    fit.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    fit.rank_deficient = !(fit.condition <= kConditionLimit);
    report.inputs.push_back(std::move(fit));
    model.set(u, std::move(A));
  }
  return {std::move(model), std::move(report)};
}

std::vector<Eigen::VectorXcd> predict(const SeparableModel& model, const Dictionary& dict,
                                      const State& x0, const InputSequence& seq, std::size_t k) {
  if (model.dimension() != dict.size())
    throw ContractError("model and dictionary sizes differ");
  std::vector<Eigen::VectorXcd> z;
  z.reserve(k + 1);
  z.push_back(dict(x0));
  for (std::size_t j = 0; j < k; ++j) z.push_back(model.matrix(seq.at(j)) * z.back());
  return z;
}

std::vector<double> prediction_error(const SeparableModel& model, const Dictionary& dict,
                                     const ControlSystem& sys, const State& x0,
                                     const InputSequence& seq, std::size_t k) {
  const auto z = predict(model, dict, x0, seq, k);
  const auto traj = simulate(sys, x0, seq, k);
  std::vector<double> e;
  for (std::size_t j = 0; j <= k; ++j) e.push_back((z[j] - dict(traj[j])).cwiseAbs().maxCoeff());
  return e;
}

}  // namespace koopman
