#include "satrad/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <numbers>

#include "satrad/csv.hpp"
#include "satrad/error.hpp"
#include "satrad/rng.hpp"

namespace satrad {

namespace {

std::string at_line(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;
  std::size_t n = 0;
};

MeanSem mean_sem(const std::vector<double>& xs) {
  MeanSem m;
  m.n = xs.size();
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    const double n = static_cast<double>(xs.size());
    m.sem = std::sqrt(ss / (n - 1.0) / n);
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Telemetry

std::vector<TelemetryRecord> parse_telemetry(const std::string& text, const std::string& source) {
  const auto doc = csv::parse(text, source);
  struct Entry {
    TelemetryRecord record;
    std::size_t line;
  };
  std::vector<Entry> entries;
  for (const auto& row : doc.rows) {
    if (entries.empty() && !row.fields.empty() && csv::to_lower(row.fields[0]) == "day") {
      continue;
    }
    if (row.fields.size() != 4) {
      throw Error(ErrorKind::parse, at_line(source, row.line) +
                                        ": expected `day, detector, temp_C, dcr_cps`");
    }
    Entry e{{}, row.line};
    e.record.day = csv::to_double(row.fields[0], source, row.line);
    e.record.detector = row.fields[1];
    e.record.temperature = csv::to_double(row.fields[2], source, row.line);
    e.record.dcr = csv::to_double(row.fields[3], source, row.line);
    if (e.record.detector.empty()) {
      throw Error(ErrorKind::parse, at_line(source, row.line) + ": empty detector id");
    }
    if (!(e.record.dcr >= 0.0)) {
      throw Error(ErrorKind::validation, at_line(source, row.line) + ": negative dark count rate");
    }
    if (!(e.record.day >= 0.0)) {
      throw Error(ErrorKind::validation, at_line(source, row.line) + ": negative mission day");
    }
    entries.push_back(std::move(e));
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.record.day != b.record.day) return a.record.day < b.record.day;
    return a.record.detector < b.record.detector;
  });
  std::vector<TelemetryRecord> out;
  out.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i].record.day == entries[i - 1].record.day &&
        entries[i].record.detector == entries[i - 1].record.detector) {
      throw Error(ErrorKind::validation,
                  at_line(source, entries[i].line) + ": duplicate (day, detector) also on line " +
                      std::to_string(entries[i - 1].line));
    }
    out.push_back(entries[i].record);
  }
  return out;
}

std::vector<TelemetryRecord> ingest_telemetry(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_telemetry(text.str(), path.filename().string());
}

std::vector<Epoch> find_epochs(const std::vector<TelemetryRecord>& records, double gap_days) {
  std::vector<double> days;
  for (const auto& r : records) days.push_back(r.day);
  std::sort(days.begin(), days.end());
  std::vector<Epoch> epochs;
  for (double d : days) {
    if (epochs.empty() || d - epochs.back().end_day > gap_days) {
      epochs.push_back({epochs.size(), d, d});
    } else {
      epochs.back().end_day = d;
    }
  }
  return epochs;
}

// ---------------------------------------------------------------------------
// Temperature normalization

ModelSet fit_epochs(const std::vector<TelemetryRecord>& records, const TempFitOptions& options) {
  const auto epochs = find_epochs(records, options.epoch_gap_days);
  auto epoch_of = [&](double day) {
    for (const auto& e : epochs) {
      if (day >= e.start_day && day <= e.end_day) return e.index;
    }
    return epochs.size();
  };
  std::map<std::string, std::vector<std::vector<TempSample>>> grouped;
  for (const auto& r : records) {
    auto& per_epoch = grouped[r.detector];
    per_epoch.resize(epochs.size());
    per_epoch[epoch_of(r.day)].push_back({r.temperature, r.dcr});
  }

  ModelSet models;
  for (const auto& [detector, per_epoch] : grouped) {
    // Pooled rate: common slope with a free intercept per epoch.
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& samples : per_epoch) {
      if (samples.size() < 2) continue;
      double mx = 0.0;
      double my = 0.0;
      for (const auto& s : samples) {
        if (!(s.dcr > 0.0)) {
          throw Error(ErrorKind::validation, "non-positive DCR for detector " + detector);
        }
        mx += s.temperature;
        my += std::log(s.dcr);
      }
      mx /= static_cast<double>(samples.size());
      my /= static_cast<double>(samples.size());
      for (const auto& s : samples) {
        sxx += (s.temperature - mx) * (s.temperature - mx);
        sxy += (s.temperature - mx) * (std::log(s.dcr) - my);
      }
    }
    const bool have_pooled = sxx > 0.0 && sxy / sxx > 0.0;
    const double pooled = have_pooled ? sxy / sxx : 0.0;

    for (std::size_t e = 0; e < per_epoch.size(); ++e) {
      const auto& samples = per_epoch[e];
      if (samples.empty()) continue;
      double t_lo = samples.front().temperature;
      double t_hi = t_lo;
      for (const auto& s : samples) {
        t_lo = std::min(t_lo, s.temperature);
        t_hi = std::max(t_hi, s.temperature);
      }
      const bool fittable = samples.size() >= 4 && t_hi - t_lo >= 3.0;
      EpochModel em;
      em.epoch = epochs[e];
      if (fittable && !options.pool_rate) {
        em.model = fit_temp_model(samples, options.reference_t);
      } else if (have_pooled) {
        double my = 0.0;
        double mx = 0.0;
        for (const auto& s : samples) {
          if (!(s.dcr > 0.0)) {
            throw Error(ErrorKind::validation, "non-positive DCR for detector " + detector);
          }
          mx += s.temperature - options.reference_t;
          my += std::log(s.dcr);
        }
        const double n = static_cast<double>(samples.size());
        em.model.reference_t = options.reference_t;
        em.model.rate = pooled;
        em.model.amplitude = std::exp(my / n - pooled * mx / n);
        em.model.n_samples = samples.size();
        em.pooled_rate = true;
      } else {
        throw Error(ErrorKind::statistics, "no temperature fit possible for detector " + detector +
                                               " in epoch " + std::to_string(e));
      }
      models[detector].push_back(em);
    }
  }
  return models;
}

SeriesSet normalized_series(const std::vector<TelemetryRecord>& records, const ModelSet& models,
                            double reference_t) {
  SeriesSet out;
  for (const auto& r : records) {
    auto it = models.find(r.detector);
    if (it == models.end()) {
      throw Error(ErrorKind::validation, "no temperature model for detector " + r.detector);
    }
    const EpochModel* match = nullptr;
    for (const auto& em : it->second) {
      if (r.day >= em.epoch.start_day && r.day <= em.epoch.end_day) {
        match = &em;
        break;
      }
    }
    if (match == nullptr) {
      throw Error(ErrorKind::validation, "no temperature model covers day " +
                                             std::to_string(r.day) + " for " + r.detector);
    }
    out[r.detector].push_back({r.day, normalize_dcr(match->model, r.temperature, r.dcr, reference_t),
                               r.temperature, match->epoch.index});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ratios

Baseline baseline_of(const std::vector<SeriesPoint>& series, double baseline_days) {
  Baseline b;
  if (series.empty()) return b;
  const double first = series.front().day;
  std::vector<double> xs;
  for (const auto& p : series) {
    if (p.day < first + baseline_days) xs.push_back(p.dcr);
  }
  const auto m = mean_sem(xs);
  return {m.mean, m.sem, m.n};
}

std::vector<MeasuredRatio> segment_ratios(const SeriesSet& series,
                                          const std::vector<SegmentWindow>& plan,
                                          const RatioOptions& options) {
  validate_plan(plan);
  static const std::vector<SeriesPoint> empty;
  auto find = [&](const std::string& id) -> const std::vector<SeriesPoint>& {
    auto it = series.find(id);
    return it == series.end() ? empty : it->second;
  };
  const auto& num = find(options.numerator);
  const auto& den = find(options.denominator);
  const Baseline num_base = baseline_of(num, options.baseline_days);
  const Baseline den_base = baseline_of(den, options.baseline_days);

  auto delta = [](const std::vector<SeriesPoint>& s, const Baseline& base, double lo, double hi,
                  bool last) {
    std::vector<double> xs;
    for (const auto& p : s) {
      if (p.day >= lo && (p.day < hi || (last && p.day == hi))) xs.push_back(p.dcr);
    }
    const auto m = mean_sem(xs);
    DetectorDelta d;
    d.n = m.n;
    if (m.n == 0) return d;
    d.delta = m.mean - base.mean;
    d.error = std::sqrt(m.sem * m.sem + base.error * base.error);
    return d;
  };

  std::vector<MeasuredRatio> out;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    MeasuredRatio r;
    r.segment = k;
    r.start_day = plan[k].start_day;
    r.end_day = plan[k].end_day;
    const bool last = k + 1 == plan.size();
    r.numerator = delta(num, num_base, r.start_day, r.end_day, last);
    r.denominator = delta(den, den_base, r.start_day, r.end_day, last);
    r.low_data = r.numerator.n < options.min_samples || r.denominator.n < options.min_samples;
    if (r.numerator.n == 0 || r.denominator.n == 0) {
      r.absent = true;
    } else if (!(r.numerator.delta > 0.0) || !(r.denominator.delta > 0.0)) {
      r.invalid = true;
    } else {
      const double ratio = r.numerator.delta / r.denominator.delta;
      const double a = r.numerator.error / r.numerator.delta;
      const double b = r.denominator.error / r.denominator.delta;
      r.ratio = ratio;
      r.error = ratio * std::sqrt(a * a + b * b);
    }
    out.push_back(r);
  }
  return out;
}

const char* to_string(AgreementStatus status) {
  switch (status) {
    case AgreementStatus::agree: return "agree";
    case AgreementStatus::disagree: return "disagree";
    case AgreementStatus::absent: return "absent";
    case AgreementStatus::invalid: return "invalid";
  }
  return "absent";
}

std::optional<double> series_slope(const std::vector<SeriesPoint>& series, double lo, double hi) {
  double n = 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (const auto& p : series) {
    if (p.day < lo || p.day >= hi) continue;
    n += 1.0;
    mx += p.day;
    my += p.dcr;
  }
  if (n < 2.0) return std::nullopt;
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& p : series) {
    if (p.day < lo || p.day >= hi) continue;
    sxx += (p.day - mx) * (p.day - mx);
    sxy += (p.day - mx) * (p.dcr - my);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

std::optional<double> detect_breakpoint(const OrbitProfile& orbit) {
  const auto& a = orbit.altitude;
  if (a.size() < 3) return std::nullopt;
  std::optional<double> best_day;
  double best = 0.0;
  for (std::size_t i = 1; i + 1 < a.size(); ++i) {
    const double before = (a[i].altitude_km - a[i - 1].altitude_km) / (a[i].day - a[i - 1].day);
    const double after = (a[i + 1].altitude_km - a[i].altitude_km) / (a[i + 1].day - a[i].day);
    const double change = after - before;
    if (change < best) {
      best = change;
      best_day = a[i].day;
    }
  }
  return best_day;
}

CompareReport compare_report(const std::vector<MeasuredRatio>& measured,
                             const std::vector<CumulativeSeries>& simulated,
                             const SeriesSet& series, const RatioOptions& ratio_options,
                             const CompareOptions& options, double breakpoint_day) {
  auto find = [&](const std::string& id) -> const CumulativeSeries& {
    for (const auto& s : simulated) {
      if (s.detector == id) return s;
    }
    throw Error(ErrorKind::validation, "simulated series lacks detector " + id);
  };
  const auto& num = find(ratio_options.numerator);
  const auto& den = find(ratio_options.denominator);
  if (num.points.size() != measured.size() || den.points.size() != measured.size()) {
    throw Error(ErrorKind::validation, "segment-plan mismatch: " +
                                           std::to_string(measured.size()) + " measured vs " +
                                           std::to_string(num.points.size()) + " simulated");
  }

  CompareReport report;
  for (std::size_t k = 0; k < measured.size(); ++k) {
    const auto& m = measured[k];
    const auto& a = num.points[k];
    const auto& b = den.points[k];
    if (a.segment != m.segment || b.segment != m.segment || a.end_day != m.end_day ||
        b.end_day != m.end_day) {
      throw Error(ErrorKind::validation,
                  "segment-plan mismatch at segment " + std::to_string(m.segment));
    }
    SegmentRatio s;
    s.segment = m.segment;
    s.start_day = m.start_day;
    s.end_day = m.end_day;
    s.low_data = m.low_data;
    s.measured = m.ratio;
    s.measured_error = m.error;
    const bool sim_ok = a.ddd.value > 0.0 && b.ddd.value > 0.0;
    if (sim_ok) {
      s.simulated = a.ddd.value / b.ddd.value;
      const double ra = a.ddd.error / a.ddd.value;
      const double rb = b.ddd.error / b.ddd.value;
      const double stat2 = ra * ra + rb * rb;
      const double sys = options.ratio_systematic_rel;
      s.simulated_error = s.simulated * std::sqrt(stat2 + sys * sys);
    }
    if (m.absent) {
      s.status = AgreementStatus::absent;
    } else if (m.invalid || !sim_ok) {
      s.status = AgreementStatus::invalid;
    } else {
      const double combined =
          std::sqrt(s.measured_error * s.measured_error + s.simulated_error * s.simulated_error);
      s.status = std::fabs(*s.measured - s.simulated) <= options.agreement_sigma * combined
                     ? AgreementStatus::agree
                     : AgreementStatus::disagree;
    }
    report.segments.push_back(s);
  }

  Trend& t = report.trend;
  for (const auto& p : num.points) t.increments.push_back(p.ddd_increment.value);
  const std::size_t n = t.increments.size();
  t.simulated_leveling = n >= 2 && t.increments[n - 1] < t.increments[n - 2];
  t.breakpoint_day = breakpoint_day;
  for (const auto& [detector, points] : series) {
    const auto early = series_slope(points, -1e300, breakpoint_day);
    const auto late = series_slope(points, breakpoint_day, 1e300);
    if (early) t.early_slope[detector] = *early;
    if (late) t.late_slope[detector] = *late;
    if (early && late) t.measured_leveling[detector] = *late < *early;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Synthetic telemetry

std::vector<std::pair<double, std::size_t>> default_epochs() {
  std::vector<std::pair<double, std::size_t>> e{{27.0, 8}, {35.0, 8}, {190.0, 6}};
  for (double d = 230.0; d <= 710.0; d += 30.0) e.emplace_back(d, 30);
  e.emplace_back(719.0, 30);
  return e;
}

namespace {

double normal(Rng& rng) {
  // Box-Muller; one variate per call keeps the stream layout simple.
  const double u1 = rng.uniform_open_zero();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (xs.size() == 1) return ys.front();
  std::size_t i = 0;
  while (i + 2 < xs.size() && x > xs[i + 1]) ++i;
  const double f = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return ys[i] + f * (ys[i + 1] - ys[i]);
}

}  // namespace

std::vector<TelemetryRecord> synthesize_telemetry(const SyntheticTelemetryConfig& config) {
  if (config.knot_days.empty()) throw Error(ErrorKind::config, "synthetic telemetry needs knots");
  std::vector<TelemetryRecord> out;
  constexpr double kOrbitDays = 92.9 / 1440.0;
  for (std::size_t e = 0; e < config.epochs.size(); ++e) {
    const auto [day0, n] = config.epochs[e];
    for (std::size_t d = 0; d < config.detectors.size(); ++d) {
      const std::string& id = config.detectors[d];
      auto it = config.cumulative_ddd.find(id);
      if (it == config.cumulative_ddd.end() || it->second.size() != config.knot_days.size()) {
        throw Error(ErrorKind::config, "synthetic telemetry lacks a DDD series for " + id);
      }
      const auto off = config.temperature_offset.find(id);
      const double offset = off == config.temperature_offset.end() ? 0.0 : off->second;
      Rng rng(config.seed, hash_combine(0x7E1E, d), e);
      const double epoch_t = 12.0 + 5.0 * std::sin(day0 / 60.0) + offset;
      for (std::size_t k = 0; k < n; ++k) {
        const double phase = static_cast<double>(k) / static_cast<double>(n);
        TelemetryRecord r;
        r.detector = id;
        r.day = day0 + phase * kOrbitDays;
        r.temperature = epoch_t + 4.0 * std::sin(2.0 * std::numbers::pi * phase) + 0.2 * normal(rng);
        const double ddd = interpolate(config.knot_days, it->second, r.day);
        const double at_ref = config.pre_damage_dcr + config.slope * ddd;
        r.dcr = at_ref * std::exp(config.rate * (r.temperature - config.reference_t)) *
                (1.0 + config.noise_rel * normal(rng));
        out.push_back(r);
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const TelemetryRecord& a, const TelemetryRecord& b) {
    if (a.day != b.day) return a.day < b.day;
    return a.detector < b.detector;
  });
  return out;
}

std::string telemetry_to_csv(const std::vector<TelemetryRecord>& records) {
  std::string out = "day, detector, temp_C, dcr_cps\n";
  char line[160];
  for (const auto& r : records) {
    std::snprintf(line, sizeof line, "%.6f, %s, %.4f, %.8g\n", r.day, r.detector.c_str(),
                  r.temperature, r.dcr);
    out += line;
  }
  return out;
}

}  // namespace satrad
