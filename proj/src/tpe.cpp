#include "timeagg/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "timeagg/errors.hpp"

namespace timeagg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Dim {
  enum class Type { Categorical, Continuous };
  Type type;
  std::vector<double> choices;  // categorical: raw values
  double lo = 0.0, hi = 0.0;    // continuous: bounds in sampling space
  bool log_scale = false;
  double raw_lo = 0.0, raw_hi = 0.0;

  double encode(double raw) const {
    if (type == Type::Categorical) {
      for (std::size_t i = 0; i < choices.size(); ++i) {
        if (choices[i] == raw) return static_cast<double>(i);
      }
      throw DataError("tpe: value outside categorical grid");
    }
    return log_scale ? std::log(raw) : raw;
  }
  double decode(double coded) const {
    if (type == Type::Categorical) return choices.at(static_cast<std::size_t>(coded));
    const double raw = log_scale ? std::exp(coded) : coded;
    return std::clamp(raw, raw_lo, raw_hi);  // absorb transform round-off
  }
};

std::vector<Dim> make_dims(const SearchSpace& s) {
  std::vector<double> units(s.unit_choices.begin(), s.unit_choices.end());
  std::vector<Dim> dims;
  dims.push_back({Dim::Type::Categorical, units});
  dims.push_back({Dim::Type::Categorical, units});
  dims.push_back({Dim::Type::Categorical, units});
  dims.push_back({Dim::Type::Continuous, {}, std::log(s.l1_min), std::log(s.l1_max), true,
                  s.l1_min, s.l1_max});
  dims.push_back({Dim::Type::Continuous, {}, std::log(s.l2_min), std::log(s.l2_max), true,
                  s.l2_min, s.l2_max});
  dims.push_back({Dim::Type::Continuous, {}, s.dropout_min, s.dropout_max, false,
                  s.dropout_min, s.dropout_max});
  if (s.tune_conv_kernel) {
    std::vector<double> kernels(s.kernel_choices.begin(), s.kernel_choices.end());
    dims.push_back({Dim::Type::Categorical, kernels});
  }
  return dims;
}

std::vector<double> encode_point(const HyperParams& hp, const std::vector<Dim>& dims) {
  std::vector<double> x;
  x.push_back(dims[0].encode(hp.units_input));
  x.push_back(dims[1].encode(hp.units_agg));
  x.push_back(dims[2].encode(hp.units_dense));
  x.push_back(dims[3].encode(hp.l1));
  x.push_back(dims[4].encode(hp.l2));
  x.push_back(dims[5].encode(hp.dropout));
  if (dims.size() > 6) x.push_back(dims[6].encode(hp.conv_kernel));
  return x;
}

HyperParams decode_point(const std::vector<double>& x, const std::vector<Dim>& dims) {
  HyperParams hp;
  hp.units_input = static_cast<int>(dims[0].decode(x[0]));
  hp.units_agg = static_cast<int>(dims[1].decode(x[1]));
  hp.units_dense = static_cast<int>(dims[2].decode(x[2]));
  hp.l1 = dims[3].decode(x[3]);
  hp.l2 = dims[4].decode(x[4]);
  hp.dropout = dims[5].decode(x[5]);
  hp.conv_kernel = dims.size() > 6 ? static_cast<int>(dims[6].decode(x[6])) : 2;
  return hp;
}

double uniform_coordinate(const Dim& dim, Rng& rng) {
  if (dim.type == Dim::Type::Categorical) {
    return static_cast<double>(rng.index(dim.choices.size()));
  }
  return rng.uniform(dim.lo, dim.hi);
}

/// Per-dimension density: categorical masses or a Gaussian KDE. Both carry a
/// uniform prior component (Laplace count / one range-wide mixture weight) so
/// fresh regions keep nonzero mass, and the KDE bandwidth never drops below
/// the range/(1+m) clip the cited optimizer ships with.
struct DimDensity {
  const Dim* dim;
  std::vector<double> mass;    // categorical, Laplace-smoothed, sums to 1
  std::vector<double> points;  // continuous KDE centers
  double bandwidth = 1.0;

  static DimDensity fit(const Dim& dim, const std::vector<double>& coords,
                        const TpeConfig& cfg) {
    DimDensity d;
    d.dim = &dim;
    if (dim.type == Dim::Type::Categorical) {
      const std::size_t k = dim.choices.size();
      d.mass.assign(k, 1.0);  // Laplace prior count
      for (double c : coords) d.mass[static_cast<std::size_t>(c)] += 1.0;
      const double total = static_cast<double>(coords.size()) + static_cast<double>(k);
      for (double& m : d.mass) m /= total;
    } else {
      d.points = coords;
      const auto m = static_cast<double>(d.points.size());
      double mean = 0.0;
      for (double p : d.points) mean += p;
      mean /= m;
      double var = 0.0;
      for (double p : d.points) var += (p - mean) * (p - mean);
      var /= m;
      const double scott = std::sqrt(var) * std::pow(m, -0.2);
      const double range_clip = (dim.hi - dim.lo) / (1.0 + m);
      d.bandwidth = std::max({cfg.bandwidth_floor, range_clip, scott});
    }
    return d;
  }

  double sample(Rng& rng) const {
    if (dim->type == Dim::Type::Categorical) {
      double u = rng.uniform();
      for (std::size_t i = 0; i < mass.size(); ++i) {
        u -= mass[i];
        if (u < 0.0) return static_cast<double>(i);
      }
      return static_cast<double>(mass.size() - 1);
    }
    // one mixture slot belongs to the uniform prior
    const std::size_t slot = rng.index(points.size() + 1);
    if (slot == points.size()) return rng.uniform(dim->lo, dim->hi);
    return std::clamp(rng.normal(points[slot], bandwidth), dim->lo, dim->hi);
  }

  double log_pdf(double x) const {
    if (dim->type == Dim::Type::Categorical) {
      return std::log(mass[static_cast<std::size_t>(x)]);
    }
    // log of the KDE-plus-prior mixture via logsumexp
    const double norm = -std::log(bandwidth) - 0.5 * std::log(2.0 * M_PI);
    double max_term = std::log(1.0 / (dim->hi - dim->lo));  // uniform component
    std::vector<double> terms = {max_term};
    for (double p : points) {
      const double zd = (x - p) / bandwidth;
      terms.push_back(-0.5 * zd * zd + norm);
      max_term = std::max(max_term, terms.back());
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - max_term);
    return max_term + std::log(acc) - std::log(static_cast<double>(points.size() + 1));
  }
};

}  // namespace

void SearchSpace::validate() const {
  if (unit_choices.empty()) throw DataError("search space: unit_choices empty");
  if (tune_conv_kernel && kernel_choices.empty()) {
    throw DataError("search space: kernel_choices empty");
  }
  if (!(l1_min > 0.0 && l1_min <= l1_max) || !(l2_min > 0.0 && l2_min <= l2_max)) {
    throw DataError("search space: log-uniform bounds must be ordered and positive");
  }
  if (!(dropout_min <= dropout_max) || dropout_min < 0.0 || dropout_max >= 1.0) {
    throw DataError("search space: dropout bounds invalid");
  }
}

HyperParams suggest(const std::vector<Trial>& history, const SearchSpace& space,
                    Rng& rng, const TpeConfig& cfg) {
  space.validate();
  const std::vector<Dim> dims = make_dims(space);

  std::vector<const Trial*> completed;
  for (const auto& t : history) {
    if (t.complete && std::isfinite(t.objective)) completed.push_back(&t);
  }

  if (static_cast<int>(completed.size()) < cfg.n_startup) {
    std::vector<double> x(dims.size());
    for (std::size_t d = 0; d < dims.size(); ++d) x[d] = uniform_coordinate(dims[d], rng);
    return decode_point(x, dims);
  }

  // stable sort by objective keeps the split deterministic under ties
  std::stable_sort(completed.begin(), completed.end(),
                   [](const Trial* a, const Trial* b) { return a->objective < b->objective; });
  const auto n = static_cast<long>(completed.size());
  const long n_good = std::clamp(
      static_cast<long>(std::ceil(cfg.gamma * static_cast<double>(n))), 1L, n - 1);

  std::vector<std::vector<double>> good, bad;
  for (long i = 0; i < n; ++i) {
    (i < n_good ? good : bad).push_back(encode_point(completed[i]->hp, dims));
  }

  // Each dimension runs its own candidate draw and ratio argmax, so an
  // uninformative dimension cannot drown out a decisive one.
  std::vector<double> best_x(dims.size());
  for (std::size_t d = 0; d < dims.size(); ++d) {
    std::vector<double> gc, bc;
    for (const auto& p : good) gc.push_back(p[d]);
    for (const auto& p : bad) bc.push_back(p[d]);
    const DimDensity l = DimDensity::fit(dims[d], gc, cfg);
    const DimDensity g = DimDensity::fit(dims[d], bc, cfg);

    double best_score = -kInf;
    for (int c = 0; c < cfg.n_candidates; ++c) {
      const double x = l.sample(rng);
      const double score = l.log_pdf(x) - g.log_pdf(x);
      if (score > best_score) {
        best_score = score;
        best_x[d] = x;
      }
    }
  }
  return decode_point(best_x, dims);
}

StudyResult run_study(const Objective& objective, const SearchSpace& space,
                      int n_trials, std::uint64_t seed, const TpeConfig& cfg) {
  if (n_trials < 1) throw DataError("run_study: n_trials must be >= 1");
  Rng rng(seed);
  StudyResult result;
  for (int i = 0; i < n_trials; ++i) {
    Trial trial;
    trial.hp = suggest(result.trials, space, rng, cfg);
    trial.seed = seed + static_cast<std::uint64_t>(i);
    try {
      trial.objective = objective(trial.hp, trial.seed);
      trial.complete = std::isfinite(trial.objective);
    } catch (const NumericError&) {
      trial.complete = false;
    }
    if (!trial.complete) trial.objective = kInf;
    result.trials.push_back(trial);
  }

  const Trial* best = nullptr;
  for (const auto& t : result.trials) {
    if (t.complete && (best == nullptr || t.objective < best->objective)) best = &t;
  }
  if (best == nullptr) throw NumericError("run_study: all trials failed");
  result.best = *best;
  return result;
}

StudyResult tune_architecture(ArchKind kind, const GridSet& train_set,
                              const GridSet& val_set, int n_trials,
                              std::uint64_t seed, TrainConfig base_cfg,
                              SearchSpace space) {
  space.tune_conv_kernel =
      kind == ArchKind::TddCnnValid || kind == ArchKind::TddCnnCausal;
  const Objective objective = [&](const HyperParams& hp, std::uint64_t trial_seed) {
    TrainConfig cfg = base_cfg;
    cfg.seed = trial_seed;
    return train(kind, hp, train_set, val_set, cfg).best_val_loss;
  };
  return run_study(objective, space, n_trials, seed);
}

}  // namespace timeagg
