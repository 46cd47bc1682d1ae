#include "ofdmrad/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ofdmrad {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorKind::kConfigInvalid, msg); }

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) invalid(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) invalid("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    invalid(where + "." + key + ": " + e.what());
  }
}

template <typename T>
void maybe(const json& obj, const std::string& key, const std::string& where, T& out) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

OfdmConfig parse_config(const json& j) {
  check_keys(j, "config",
             {"preset", "carrier_freq_hz", "bandwidth_hz", "num_subcarriers", "num_symbols", "subcarrier_spacing_hz",
              "cp_duration_s", "num_tx", "num_rx", "channel_taps", "noise_power", "speed_of_light_mps", "rng_seed"});
  const std::string preset = j.contains("preset") ? get<std::string>(j, "preset", "config") : "desk";
  OfdmConfig cfg;
  if (preset == "desk") {
    cfg = OfdmConfig::desk();
  } else if (preset == "full") {
    cfg = OfdmConfig::full();
  } else {
    invalid("config.preset must be 'desk' or 'full'");
  }
  maybe(j, "carrier_freq_hz", "config", cfg.carrier_freq_hz);
  maybe(j, "bandwidth_hz", "config", cfg.bandwidth_hz);
  maybe(j, "num_subcarriers", "config", cfg.num_subcarriers);
  maybe(j, "num_symbols", "config", cfg.num_symbols);
  maybe(j, "num_tx", "config", cfg.num_tx);
  maybe(j, "num_rx", "config", cfg.num_rx);
  maybe(j, "channel_taps", "config", cfg.channel_taps);
  maybe(j, "noise_power", "config", cfg.noise_power);
  maybe(j, "speed_of_light_mps", "config", cfg.speed_of_light_mps);
  maybe(j, "rng_seed", "config", cfg.rng_seed);
  // Without an explicit CP the preset's T_cp = T/4 ratio follows N and B.
  cfg.cp_duration_s = j.contains("cp_duration_s") ? get<double>(j, "cp_duration_s", "config")
                                                  : cfg.elementary_duration_s() / 4.0;
  if (j.contains("subcarrier_spacing_hz")) {
    // Published spacings are rounded (24.41 kHz for 50 MHz / 2048).
    const double df = get<double>(j, "subcarrier_spacing_hz", "config");
    if (!(std::abs(df - cfg.subcarrier_spacing_hz()) <= 1e-3 * cfg.subcarrier_spacing_hz())) {
      invalid("config.subcarrier_spacing_hz must equal bandwidth_hz / num_subcarriers");
    }
  }
  validate_config(cfg);
  return cfg;
}

complex parse_gain(const json& t, const std::string& where, const OfdmConfig& cfg) {
  const bool has_snr = t.contains("snr_db");
  const bool has_gain = t.contains("gain");
  if (has_snr == has_gain) invalid(where + " needs exactly one of snr_db or gain");
  const double phase = to_radians(t.contains("phase_deg") ? get<double>(t, "phase_deg", where) : 0.0);
  if (has_snr) return std::polar(gain_from_snr_db(get<double>(t, "snr_db", where), cfg.noise_power), phase);
  const json& g = t.at("gain");
  if (g.is_number()) return std::polar(g.get<double>(), phase);
  if (g.is_array() && g.size() == 2 && g[0].is_number() && g[1].is_number()) {
    if (t.contains("phase_deg")) invalid(where + ": phase_deg only applies to a real gain");
    return {g[0].get<double>(), g[1].get<double>()};
  }
  invalid(where + ".gain must be a number or [re, im]");
}

Scene parse_scene(const json& j, const OfdmConfig& cfg) {
  check_keys(j, "scene", {"targets", "tx_steer_angle_deg"});
  Scene scene;
  maybe(j, "tx_steer_angle_deg", "scene", scene.tx_steer_angle_deg);
  if (!j.contains("targets")) return scene;
  if (!j.at("targets").is_array()) invalid("scene.targets must be an array");
  const double c = cfg.speed_of_light_mps;
  int index = 0;
  for (const json& t : j.at("targets")) {
    const std::string where = "scene.targets[" + std::to_string(index++) + "]";
    check_keys(t, where,
               {"snr_db", "gain", "phase_deg", "range_m", "delay_s", "velocity_mps", "normalized_doppler", "angle_deg"});
    Target target;
    target.gain = parse_gain(t, where, cfg);
    if (t.contains("range_m") == t.contains("delay_s")) invalid(where + " needs exactly one of range_m or delay_s");
    target.delay_s = t.contains("range_m") ? delay_from_range(get<double>(t, "range_m", where), c)
                                           : get<double>(t, "delay_s", where);
    if (t.contains("velocity_mps") && t.contains("normalized_doppler")) {
      invalid(where + " has both velocity_mps and normalized_doppler");
    }
    if (t.contains("velocity_mps")) target.normalized_doppler = doppler_from_velocity(get<double>(t, "velocity_mps", where), c);
    maybe(t, "normalized_doppler", where, target.normalized_doppler);
    target.angle_deg = get<double>(t, "angle_deg", where);
    scene.targets.push_back(target);
  }
  return scene;
}

EstimatorOptions parse_estimator(const json& j) {
  check_keys(j, "estimator",
             {"angle_grid", "order_gamma", "model_order", "cfo", "zero_pad_delay", "zero_pad_doppler"});
  EstimatorOptions o;
  if (j.contains("angle_grid")) {
    const json& g = j.at("angle_grid");
    check_keys(g, "estimator.angle_grid", {"start_deg", "stop_deg", "step_deg"});
    maybe(g, "start_deg", "estimator.angle_grid", o.angle_grid.start_deg);
    maybe(g, "stop_deg", "estimator.angle_grid", o.angle_grid.stop_deg);
    maybe(g, "step_deg", "estimator.angle_grid", o.angle_grid.step_deg);
    if (!(o.angle_grid.step_deg > 0.0) || !(o.angle_grid.stop_deg > o.angle_grid.start_deg)) {
      invalid("estimator.angle_grid needs step_deg > 0 and stop_deg > start_deg");
    }
  }
  maybe(j, "order_gamma", "estimator", o.order_gamma);
  if (j.contains("model_order") && !j.at("model_order").is_null()) {
    o.model_order = get<int>(j, "model_order", "estimator");
    if (*o.model_order < 0) invalid("estimator.model_order must be >= 0");
  }
  if (j.contains("cfo")) {
    const json& c = j.at("cfo");
    check_keys(c, "estimator.cfo", {"max_velocity_mps", "coarse_points", "resolution_bins"});
    maybe(c, "max_velocity_mps", "estimator.cfo", o.cfo.max_velocity_mps);
    maybe(c, "coarse_points", "estimator.cfo", o.cfo.coarse_points);
    maybe(c, "resolution_bins", "estimator.cfo", o.cfo.resolution_bins);
    if (!(o.cfo.max_velocity_mps > 0.0) || o.cfo.coarse_points < 3 || !(o.cfo.resolution_bins > 0.0)) {
      invalid("estimator.cfo needs max_velocity_mps > 0, coarse_points >= 3, resolution_bins > 0");
    }
  }
  maybe(j, "zero_pad_delay", "estimator", o.zero_pad_delay);
  maybe(j, "zero_pad_doppler", "estimator", o.zero_pad_doppler);
  if (o.zero_pad_delay < 1 || o.zero_pad_doppler < 1) invalid("estimator zero-pad factors must be >= 1");
  if (!(o.order_gamma > 0.0)) invalid("estimator.order_gamma must be > 0");
  return o;
}

SweepAxis parse_axis(const std::string& s) {
  if (s == "none") return SweepAxis::kNone;
  if (s == "snr") return SweepAxis::kSnr;
  if (s == "velocity") return SweepAxis::kVelocity;
  invalid("sweep axis must be none, snr or velocity");
}

const char* axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::kSnr:
      return "snr";
    case SweepAxis::kVelocity:
      return "velocity";
    case SweepAxis::kNone:
      break;
  }
  return "none";
}

void parse_experiment(const json& j, ExperimentConfig& e) {
  check_keys(j, "experiment", {"trials", "seed", "sweep", "fresh_symbols", "match_tolerance_deg", "threads"});
  maybe(j, "trials", "experiment", e.trials);
  maybe(j, "seed", "experiment", e.seed);
  maybe(j, "fresh_symbols", "experiment", e.fresh_symbols);
  maybe(j, "match_tolerance_deg", "experiment", e.match_tolerance_deg);
  maybe(j, "threads", "experiment", e.threads);
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, "experiment.sweep", {"axis", "values"});
    e.axis = parse_axis(get<std::string>(s, "axis", "experiment.sweep"));
    maybe(s, "values", "experiment.sweep", e.sweep_values);
  }
}

ProfileRequest parse_profile(const json& j) {
  check_keys(j, "profile", {"method", "beam_angle_deg", "slice_velocity_mps"});
  ProfileRequest p;
  if (j.contains("method")) {
    const auto m = get<std::string>(j, "method", "profile");
    if (m == "baseline") {
      p.method = ProfileMethod::kBaseline;
    } else if (m == "apes") {
      p.method = ProfileMethod::kApes;
    } else {
      invalid("profile.method must be baseline or apes");
    }
  }
  if (j.contains("beam_angle_deg")) p.beam_angle_deg = get<double>(j, "beam_angle_deg", "profile");
  if (j.contains("slice_velocity_mps")) p.slice_velocity_mps = get<double>(j, "slice_velocity_mps", "profile");
  return p;
}

json complex_json(complex z) { return json::array({z.real(), z.imag()}); }

json target_json(const TargetEstimate& t) {
  return {{"angle_deg", t.angle_deg},
          {"range_m", t.range_m},
          {"delay_s", t.delay_s},
          {"velocity_mps", t.velocity_mps},
          {"normalized_doppler", t.normalized_doppler},
          {"cfo_normalized_doppler", t.cfo_doppler},
          {"aliased_normalized_doppler", t.doppler_aliased},
          {"gain", complex_json(t.gain)},
          {"gain_abs", std::abs(t.gain)},
          {"peak_value", t.peak_value}};
}

json config_json(const OfdmConfig& cfg) {
  const DerivedParams d = derive(cfg);
  return {{"carrier_freq_hz", cfg.carrier_freq_hz},
          {"bandwidth_hz", cfg.bandwidth_hz},
          {"num_subcarriers", cfg.num_subcarriers},
          {"num_symbols", cfg.num_symbols},
          {"cp_duration_s", cfg.cp_duration_s},
          {"num_tx", cfg.num_tx},
          {"num_rx", cfg.num_rx},
          {"channel_taps", cfg.channel_taps},
          {"noise_power", cfg.noise_power},
          {"speed_of_light_mps", cfg.speed_of_light_mps},
          {"rng_seed", cfg.rng_seed},
          {"derived",
           {{"subcarrier_spacing_hz", d.subcarrier_spacing_hz},
            {"symbol_duration_s", d.symbol_duration_s},
            {"range_bin_m", d.range_bin_m},
            {"velocity_bin_mps", d.velocity_bin_mps},
            {"max_unambiguous_velocity_mps", d.max_unambiguous_velocity_mps},
            {"max_range_m", d.max_range_m},
            {"taps", cfg.taps()}}}};
}

json stats_json(const MethodStats& s) {
  return {{"range_rmse_m", s.range_rmse_m},     {"velocity_rmse_mps", s.velocity_rmse_mps},
          {"angle_rmse_deg", s.angle_rmse_deg}, {"matched", s.matched},
          {"misses", s.misses},                 {"failures", s.failures}};
}

}  // namespace

void sync_experiment(ScenarioFile& file) {
  file.experiment.cfg = file.cfg;
  file.experiment.scene = file.scene;
  file.experiment.options = file.options;
}

ScenarioFile parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    invalid(std::string("scenario is not valid JSON: ") + e.what());
  }
  check_keys(j, "scenario", {"config", "scene", "estimator", "experiment", "profile"});
  ScenarioFile f;
  if (j.contains("config")) f.cfg = parse_config(j.at("config"));
  validate_config(f.cfg);
  if (j.contains("scene")) f.scene = parse_scene(j.at("scene"), f.cfg);
  if (j.contains("estimator")) f.options = parse_estimator(j.at("estimator"));
  f.experiment.seed = f.cfg.rng_seed;
  if (j.contains("experiment")) parse_experiment(j.at("experiment"), f.experiment);
  if (j.contains("profile")) f.profile = parse_profile(j.at("profile"));
  sync_experiment(f);
  return f;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_scenario(ss.str());
}

ScenarioFile to_full_scale(ScenarioFile file) {
  file.cfg.num_subcarriers = 2048;
  file.cfg.cp_duration_s = file.cfg.elementary_duration_s() / 4.0;
  validate_config(file.cfg);
  sync_experiment(file);
  return file;
}

std::string scenario_json(const ScenarioFile& file) {
  json targets = json::array();
  for (const Target& t : file.scene.targets) {
    targets.push_back({{"gain", complex_json(t.gain)},
                       {"delay_s", t.delay_s},
                       {"normalized_doppler", t.normalized_doppler},
                       {"angle_deg", t.angle_deg}});
  }
  json cfg = config_json(file.cfg);
  cfg.erase("derived");
  const EstimatorOptions& o = file.options;
  json est = {{"angle_grid",
               {{"start_deg", o.angle_grid.start_deg}, {"stop_deg", o.angle_grid.stop_deg},
                {"step_deg", o.angle_grid.step_deg}}},
              {"order_gamma", o.order_gamma},
              {"model_order", o.model_order ? json(*o.model_order) : json(nullptr)},
              {"cfo",
               {{"max_velocity_mps", o.cfo.max_velocity_mps},
                {"coarse_points", o.cfo.coarse_points},
                {"resolution_bins", o.cfo.resolution_bins}}},
              {"zero_pad_delay", o.zero_pad_delay},
              {"zero_pad_doppler", o.zero_pad_doppler}};
  const ExperimentConfig& e = file.experiment;
  json exp = {{"trials", e.trials},
              {"seed", e.seed},
              {"sweep", {{"axis", axis_name(e.axis)}, {"values", e.sweep_values}}},
              {"fresh_symbols", e.fresh_symbols},
              {"match_tolerance_deg", e.match_tolerance_deg}};
  json prof = {{"method", file.profile.method == ProfileMethod::kApes ? "apes" : "baseline"}};
  if (file.profile.beam_angle_deg) prof["beam_angle_deg"] = *file.profile.beam_angle_deg;
  if (file.profile.slice_velocity_mps) prof["slice_velocity_mps"] = *file.profile.slice_velocity_mps;
  json out = {{"config", cfg},
              {"scene", {{"targets", targets}, {"tx_steer_angle_deg", file.scene.tx_steer_angle_deg}}},
              {"estimator", est},
              {"experiment", exp},
              {"profile", prof}};
  return out.dump(2) + "\n";
}

std::string fmt(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

std::string report_json(const OfdmConfig& cfg, const DetectionReport& report) {
  json targets = json::array();
  for (const TargetEstimate& t : report.targets) targets.push_back(target_json(t));
  std::vector<double> eig(report.eigenvalues.data(), report.eigenvalues.data() + report.eigenvalues.size());
  json cfo = json::array();
  for (const CfoEstimate& c : report.cfo_curves) {
    cfo.push_back({{"normalized_doppler", c.nu},
                   {"velocity_mps", velocity_from_doppler(c.nu, cfg.speed_of_light_mps)},
                   {"objective", c.objective},
                   {"evaluations", c.evaluations}});
  }
  json out = {{"config", config_json(cfg)},
              {"model_order", report.model_order},
              {"eigenvalues", eig},
              {"noise_floor", report.music.noise_floor},
              {"fewer_peaks_than_order", report.fewer_peaks_than_order},
              {"warnings", report.warnings},
              {"cfo", cfo},
              {"targets", targets}};
  return out.dump(2) + "\n";
}

std::string baseline_json(const OfdmConfig& cfg, const BaselineResult& result, double beam_angle_deg) {
  json t = target_json(result.estimate);
  t["angle_deg"] = beam_angle_deg;
  json out = {{"config", config_json(cfg)}, {"window", "rectangular"}, {"ici_compensation", false}, {"target", t}};
  return out.dump(2) + "\n";
}

std::string rmse_json(const RmseTable& table) {
  json rows = json::array();
  for (const RmseRow& r : table.rows) {
    rows.push_back({{"sweep_value", r.sweep_value}, {"apes", stats_json(r.apes)}, {"baseline", stats_json(r.baseline)}});
  }
  json out = {{"axis", axis_name(table.axis)}, {"trials", table.trials}, {"seed", table.seed}, {"rows", rows}};
  return out.dump(2) + "\n";
}

void write_music_csv(std::ostream& os, const DetectionReport& report) {
  os << "angle_deg,music,beamforming\n";
  for (size_t k = 0; k < report.music.grid_deg.size(); ++k) {
    os << fmt(report.music.grid_deg[k]) << ',' << fmt(report.music.values[k]) << ',' << fmt(report.beamforming[k])
       << '\n';
  }
}

void write_cfo_csv(std::ostream& os, const CfoEstimate& cfo, const OfdmConfig& cfg) {
  os << "normalized_doppler,velocity_mps,objective\n";
  for (size_t k = 0; k < cfo.grid_nu.size(); ++k) {
    os << fmt(cfo.grid_nu[k]) << ',' << fmt(velocity_from_doppler(cfo.grid_nu[k], cfg.speed_of_light_mps)) << ','
       << fmt(cfo.grid_objective[k]) << '\n';
  }
}

void write_range_velocity_csv(std::ostream& os, const DelayDopplerMap& map, const OfdmConfig& cfg,
                              double doppler_offset) {
  const double c = cfg.speed_of_light_mps;
  os << "range_m\\velocity_mps";
  for (double nu : map.doppler_axis) os << ',' << fmt(velocity_from_doppler(nu + doppler_offset, c));
  os << '\n';
  for (Eigen::Index p = 0; p < map.magnitude.rows(); ++p) {
    const double tau = map.delay_axis_s[static_cast<size_t>(p)];
    if (tau > cfg.cp_duration_s * (1.0 + 1e-12)) break;
    os << fmt(range_from_delay(tau, c));
    for (Eigen::Index q = 0; q < map.magnitude.cols(); ++q) os << ',' << fmt(map.magnitude(p, q));
    os << '\n';
  }
}

void write_profiles_csv(std::ostream& os, const std::vector<RangeProfile>& profiles, const OfdmConfig& cfg) {
  os << "label,angle_deg,velocity_slice,slice_velocity_mps,range_m,power_db\n";
  const double max_range = derive(cfg).max_range_m * (1.0 + 1e-12);
  for (const RangeProfile& p : profiles) {
    const std::string slice =
        p.velocity_slice ? fmt(velocity_from_doppler(p.slice_doppler, cfg.speed_of_light_mps)) : std::string();
    for (size_t k = 0; k < p.range_m.size() && p.range_m[k] <= max_range; ++k) {
      os << p.label << ',' << fmt(p.angle_deg) << ',' << (p.velocity_slice ? 1 : 0) << ',' << slice << ','
         << fmt(p.range_m[k]) << ',' << fmt(p.power_db[k]) << '\n';
    }
  }
}

void write_rmse_csv(std::ostream& os, const RmseTable& table) {
  os << "sweep_axis,sweep_value,method,range_rmse_m,velocity_rmse_mps,angle_rmse_deg,matched,misses,failures\n";
  for (const RmseRow& r : table.rows) {
    for (const auto& [name, s] : {std::pair<const char*, const MethodStats&>{"apes", r.apes},
                                  std::pair<const char*, const MethodStats&>{"baseline", r.baseline}}) {
      os << axis_name(table.axis) << ',' << fmt(r.sweep_value) << ',' << name << ',' << fmt(s.range_rmse_m) << ','
         << fmt(s.velocity_rmse_mps) << ',' << fmt(s.angle_rmse_deg) << ',' << s.matched << ',' << s.misses << ','
         << s.failures << '\n';
    }
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  os << content;
  if (!os) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace ofdmrad
