#include "timeagg/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "timeagg/errors.hpp"

namespace timeagg {

namespace {

constexpr int kDmardCount = 5;  // mtx, hcq, ssz, lef, biologic
constexpr double kCdaiMax = 76.0;
// The temporal terms (AR persistence, trend momentum, treatment response)
// deliberately dominate the static severity offset: the forecasting signal
// lives in the windows, not in a per-patient constant.
constexpr double kSeverityScale = 8.0;
constexpr double kArCoeff = 0.7;        // scaled by signal_strength
constexpr double kMomentumCoeff = 0.3;  // scaled by signal_strength
constexpr double kDmardRelief = 4.0;    // per active DMARD (capped at 3)
constexpr double kPrednisoneRelief = 4.0;
constexpr double kCdaiNoise = 5.5;
constexpr double kGapSigma = 0.35;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clamp_cdai(double x) { return std::clamp(x, 0.0, kCdaiMax); }

struct DmardState {
  std::array<bool, kDmardCount> on{};
  int active() const {
    int n = 0;
    for (bool b : on) n += b ? 1 : 0;
    return n;
  }
};

struct PatientDraft {
  Patient patient;
  double next_cdai = 0.0;
};

// Treatment relief only bites while disease is active: response scales with
// the current activity level, an interaction the aggregation layer has to
// model per window.
double drift(const GeneratorConfig& cfg, int active_dmards, bool prednisone,
             double cdai_level) {
  const double response = logistic((cdai_level - 15.0) / 5.0);
  return -cfg.signal_strength * response *
         (kDmardRelief * std::min(active_dmards, 3) +
          (prednisone ? kPrednisoneRelief : 0.0));
}

/// One full cohort generation for a fixed population anchor. Replayed by the
/// calibration loop with the same seed, so the output is a pure function of
/// (config, anchor).
std::vector<PatientDraft> generate_pass(const GeneratorConfig& cfg, double anchor) {
  const Rng root(cfg.seed);
  const double gap_mu = std::log(cfg.visit_gap_median);
  std::vector<PatientDraft> drafts;
  drafts.reserve(cfg.n_patients);

  for (int pi = 0; pi < cfg.n_patients; ++pi) {
    Rng rng = root.fork(static_cast<std::uint64_t>(pi));
    PatientDraft draft;
    Patient& p = draft.patient;
    {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s%05d", cfg.id_prefix.c_str(), pi);
      p.id = buf;
    }

    const double severity = rng.normal();
    const double mean_i = anchor + cfg.signal_strength * kSeverityScale * severity;
    const int n_visits = 2 + rng.poisson(std::max(0.0, cfg.mean_visits - 2.0));

    std::vector<int> days(n_visits);
    days[0] = 0;
    for (int t = 1; t < n_visits; ++t) {
      const int gap = std::max(1, static_cast<int>(std::lround(
                                      rng.lognormal(gap_mu, kGapSigma))));
      days[t] = days[t - 1] + gap;
    }

    DmardState dmards;
    const std::array<double, kDmardCount> start_rates = {0.55, 0.30, 0.18, 0.10, 0.22};
    for (int d = 0; d < kDmardCount; ++d) {
      dmards.on[d] = rng.bernoulli(std::clamp(start_rates[d] * cfg.dmard_rate_scale, 0.0, 1.0));
    }

    double cdai_prev = 0.0, cdai_curr = 0.0;
    bool prednisone = false;
    for (int t = 0; t < n_visits; ++t) {
      const int active_before = dmards.active();
      double latent;
      if (t == 0) {
        latent = mean_i + rng.normal(0.0, 6.0);
      } else {
        const double momentum =
            t >= 2 ? cfg.signal_strength * kMomentumCoeff * (cdai_curr - cdai_prev) : 0.0;
        latent = mean_i + cfg.signal_strength * kArCoeff * (cdai_curr - mean_i) +
                 momentum + drift(cfg, active_before, prednisone, cdai_curr) +
                 rng.normal(0.0, kCdaiNoise);
      }
      cdai_prev = cdai_curr;
      cdai_curr = clamp_cdai(latent);

      // ESR rises steeply out of remission then saturates
      const double esr = std::max(
          0.0, 2.0 + 16.0 * std::log1p(0.25 * cdai_curr) + rng.normal(0.0, 5.0));
      // CRP stays flat through low activity then climbs convexly
      const double active_excess = std::max(0.0, cdai_curr - 12.0);
      const double crp = std::max(
          0.0, 0.2 + 0.18 * active_excess * (1.0 + 0.04 * active_excess) +
                   rng.normal(0.0, 1.0));
      prednisone = rng.bernoulli(
          std::clamp(logistic((cdai_curr - cfg.prednisone_midpoint) / 6.0), 0.02, 0.95));

      // regimen update: high activity favors adding/swapping, low favors dropping
      bool switched = false;
      const double switch_prob =
          std::clamp(0.05 + 0.5 * logistic((cdai_curr - cfg.switch_midpoint) / 7.0), 0.0, 0.8);
      if (rng.bernoulli(switch_prob)) {
        std::vector<int> active_idx, inactive_idx;
        for (int d = 0; d < kDmardCount; ++d) {
          (dmards.on[d] ? active_idx : inactive_idx).push_back(d);
        }
        if (active_idx.empty()) {
          dmards.on[inactive_idx[rng.index(inactive_idx.size())]] = true;
          switched = true;
        } else if (cdai_curr > cfg.switch_midpoint && !inactive_idx.empty()) {
          dmards.on[active_idx[rng.index(active_idx.size())]] = false;
          dmards.on[inactive_idx[rng.index(inactive_idx.size())]] = true;
          switched = true;
        } else {
          dmards.on[active_idx[rng.index(active_idx.size())]] = false;
          switched = true;
        }
      }

      Visit visit;
      visit.day = days[t];
      // CDAI is scored at a minority of visits; the inflammatory markers
      // are the routine labs it has to be read through
      if (rng.bernoulli(0.8)) visit.observations["cdai"] = cdai_curr;
      if (rng.bernoulli(0.85)) visit.observations["esr"] = esr;
      if (rng.bernoulli(0.85)) visit.observations["crp"] = crp;
      if (rng.bernoulli(0.93)) visit.observations["prednisone"] = prednisone ? 1.0 : 0.0;
      static const std::array<const char*, kDmardCount> names = {"mtx", "hcq", "ssz",
                                                                 "lef", "biologic"};
      if (rng.bernoulli(0.93)) {
        for (int d = 0; d < kDmardCount; ++d) {
          visit.observations[names[d]] = dmards.on[d] ? 1.0 : 0.0;
        }
        visit.observations["dmard_switch"] = switched ? 1.0 : 0.0;
      }
      p.visits.push_back(std::move(visit));
    }
    p.index_day = p.visits.back().day;

    // simulated next visit drives the label; never observed
    const double momentum =
        n_visits >= 2 ? cfg.signal_strength * kMomentumCoeff * (cdai_curr - cdai_prev) : 0.0;
    const double next_latent = mean_i +
                               cfg.signal_strength * kArCoeff * (cdai_curr - mean_i) +
                               momentum + drift(cfg, dmards.active(), prednisone, cdai_curr) +
                               rng.normal(0.0, kCdaiNoise);
    draft.next_cdai = clamp_cdai(next_latent);
    drafts.push_back(std::move(draft));
  }
  return drafts;
}

double measured_prevalence(const std::vector<PatientDraft>& drafts, double threshold) {
  long n = 0;
  for (const auto& d : drafts) n += d.next_cdai > threshold ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(drafts.size());
}

}  // namespace

void GeneratorConfig::validate() const {
  if (n_patients < 1) throw DataError("generator: n_patients must be >= 1");
  if (mean_visits <= 0.0) throw DataError("generator: mean_visits must be positive");
  if (visit_gap_median <= 0.0) throw DataError("generator: visit_gap_median must be positive");
  if (signal_strength < 0.0 || signal_strength > 1.0) {
    throw DataError("generator: signal_strength must be in [0,1]");
  }
  if (prevalence_target <= 0.0 || prevalence_target >= 1.0) {
    throw DataError("generator: prevalence_target must be in (0,1)");
  }
}

Schema synthetic_schema() {
  Schema schema;
  auto add = [&](const char* name, VarKind kind) {
    schema.variables.push_back({name, kind, schema.size()});
  };
  add("cdai", VarKind::Continuous);
  add("esr", VarKind::Continuous);
  add("crp", VarKind::Continuous);
  add("prednisone", VarKind::Binary);
  add("mtx", VarKind::Binary);
  add("hcq", VarKind::Binary);
  add("ssz", VarKind::Binary);
  add("lef", VarKind::Binary);
  add("biologic", VarKind::Binary);
  add("dmard_switch", VarKind::Binary);
  return schema;
}

Cohort generate_cohort(const GeneratorConfig& config) {
  config.validate();

  // Calibrate the population anchor so the label prevalence hits the target:
  // regenerate with the same seed, shifting the anchor by the gap between the
  // threshold and the matching quantile of next-visit CDAI.
  double anchor = config.cdai_threshold + 4.0;
  std::vector<PatientDraft> drafts;
  for (int pass = 0; pass < 6; ++pass) {
    drafts = generate_pass(config, anchor);
    const double prevalence = measured_prevalence(drafts, config.cdai_threshold);
    if (std::abs(prevalence - config.prevalence_target) <= 0.02) break;
    std::vector<double> next_values;
    next_values.reserve(drafts.size());
    for (const auto& d : drafts) next_values.push_back(d.next_cdai);
    std::sort(next_values.begin(), next_values.end());
    const double q = 1.0 - config.prevalence_target;
    const auto idx = static_cast<std::size_t>(std::clamp(
        q * static_cast<double>(next_values.size()), 0.0,
        static_cast<double>(next_values.size() - 1)));
    anchor += config.cdai_threshold - next_values[idx];
  }

  Cohort cohort;
  cohort.schema = synthetic_schema();
  cohort.patients.reserve(drafts.size());
  for (auto& d : drafts) {
    d.patient.outcome = d.next_cdai > config.cdai_threshold ? Outcome::Uncontrolled
                                                            : Outcome::Controlled;
    cohort.patients.push_back(std::move(d.patient));
  }
  cohort.validate();
  return cohort;
}

std::pair<Cohort, Cohort> make_benchmark_pair(std::uint64_t seed) {
  // ids carry a short seed tag so cohorts from different seeds never collide
  char tag[16];
  std::snprintf(tag, sizeof(tag), "%04x", static_cast<unsigned>(mix64(seed) & 0xffff));

  GeneratorConfig uc;
  uc.n_patients = 578;
  uc.prevalence_target = 0.40;
  uc.seed = mix64(seed ^ 0x7563ULL);
  uc.id_prefix = std::string("uc") + tag + "_";

  GeneratorConfig sn;
  sn.n_patients = 242;
  sn.prevalence_target = 0.55;
  sn.prednisone_midpoint = 16.0;
  sn.dmard_rate_scale = 0.7;
  sn.switch_midpoint = 20.0;
  sn.seed = mix64(seed ^ 0x736eULL);
  sn.id_prefix = std::string("sn") + tag + "_";

  return {generate_cohort(uc), generate_cohort(sn)};
}

}  // namespace timeagg
