#include "mpspectra/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "mpspectra/conditions.hpp"
#include "mpspectra/errors.hpp"
#include "mpspectra/spectra.hpp"

namespace mpspectra {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kMaxHistogramBins = 10000;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field \"") + key + "\" has the wrong type: " + e.what());
  }
}

std::size_t positive_size(const json& value, const char* what) {
  if (!value.is_number_integer() || value.get<std::int64_t>() < 1) {
    throw ConfigError(std::string(what) + " must be a positive integer");
  }
  return value.get<std::size_t>();
}

ComplexPoint parse_point(const json& j) {
  double re = 0.0;
  double im = 0.0;
  if (j.is_object() && j.contains("re") && j.contains("im") && j["re"].is_number() &&
      j["im"].is_number()) {
    re = j["re"].get<double>();
    im = j["im"].get<double>();
  } else if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    re = j[0].get<double>();
    im = j[1].get<double>();
  } else {
    throw ConfigError("z_grid entries must be {\"re\": x, \"im\": y} or [x, y]");
  }
  if (!(im > 0.0) || !std::isfinite(re) || !std::isfinite(im)) {
    std::ostringstream msg;
    msg << "z_grid point (" << re << ", " << im << ") must have finite parts and Im z > 0";
    throw ConfigError(msg.str());
  }
  return {re, im};
}

std::vector<std::size_t> parse_size_list(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + " must be a nonempty list");
  std::vector<std::size_t> values;
  for (const auto& entry : j) values.push_back(positive_size(entry, what));
  return values;
}

void parse_dimensions(const json& j, ExperimentConfig& config) {
  if (!j.contains("p")) throw ConfigError("config needs \"p\"");
  config.p = positive_size(j["p"], "p");
  const bool has_n = j.contains("n");
  const bool has_c = j.contains("c");
  if (has_n == has_c) throw ConfigError("config needs exactly one of \"n\" and \"c\"");
  if (has_n) {
    config.n = positive_size(j["n"], "n");
  } else {
    if (!j["c"].is_number() || !(j["c"].get<double>() > 0.0)) {
      throw ConfigError("c must be a positive number");
    }
    const double c = j["c"].get<double>();
    const double n = std::round(static_cast<double>(config.p) / c);
    if (n < 1.0) throw ConfigError("c is too large: round(p / c) < 1");
    config.c = c;
    config.n = static_cast<std::size_t>(n);
  }
}

fs::path prepare_output(const ExperimentConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec || !fs::is_directory(config.output_dir)) {
    throw ConfigError("cannot create output directory " + config.output_dir.string() + ": " +
                      ec.message());
  }
  return config.output_dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void write_json(const fs::path& path, const json& document) {
  auto out = open_output(path);
  out << document.dump(2) << "\n";
  if (!out) throw ConfigError("failed writing " + path.string());
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

Spectrum draw_spectrum(const ExperimentConfig& config, const ColumnModel& model, std::size_t n,
                       Seed seed) {
  if (config.input == "mp_quantiles") {
    const MPLaw law(static_cast<double>(model.dim()) / static_cast<double>(n));
    return Spectrum(mp_quantile_spectrum(law, model.dim()), n);
  }
  return esd(sample_matrix(model, n, seed, config.max_entries));
}

json law_json(const MPLaw& law) {
  return json{{"c", law.ratio()},
              {"a", law.lower_edge()},
              {"b", law.upper_edge()},
              {"atom", law.atom()}};
}

json base_summary(const ExperimentConfig& config) {
  json seeds = json::array();
  for (const Seed& seed : config.seeds) seeds.push_back(seed_to_json(seed));
  return json{{"version", kConfigVersion},
              {"subcommand", to_string(config.command)},
              {"seeds", seeds}};
}

}  // namespace

std::optional<Subcommand> parse_subcommand(const std::string& name) {
  if (name == "esd") return Subcommand::Esd;
  if (name == "stieltjes") return Subcommand::Stieltjes;
  if (name == "check-lemma") return Subcommand::CheckLemma;
  if (name == "check-conditions") return Subcommand::CheckConditions;
  return std::nullopt;
}

std::string to_string(Subcommand command) {
  switch (command) {
    case Subcommand::Esd:
      return "esd";
    case Subcommand::Stieltjes:
      return "stieltjes";
    case Subcommand::CheckLemma:
      return "check-lemma";
    case Subcommand::CheckConditions:
      return "check-conditions";
  }
  return "unknown";
}

ColumnModel ExperimentConfig::model() const { return model_from_json(model_json, p); }

ExperimentConfig parse_config(const json& j, Subcommand command) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != kConfigVersion) {
    throw ConfigError("config needs \"version\": " + std::to_string(kConfigVersion));
  }

  ExperimentConfig config;
  config.command = command;
  config.trials = j.contains("trials") ? positive_size(j["trials"], "trials") : config.trials;
  config.output_dir = get_or<std::string>(j, "output_dir", config.output_dir.string());
  config.max_entries = get_or<std::size_t>(j, "max_entries", config.max_entries);

  if (j.contains("seeds")) {
    if (!j["seeds"].is_array()) throw ConfigError("seeds must be a list");
    for (const auto& entry : j["seeds"]) config.seeds.push_back(seed_from_json(entry));
  }
  if (config.seeds.empty()) config.seeds.push_back(Seed{});

  if (j.contains("z_grid")) {
    if (!j["z_grid"].is_array()) throw ConfigError("z_grid must be a list");
    for (const auto& entry : j["z_grid"]) config.z_grid.push_back(parse_point(entry));
  }

  if (command == Subcommand::Esd || command == Subcommand::Stieltjes) {
    parse_dimensions(j, config);
    if (!j.contains("model")) throw ConfigError("config needs a \"model\"");
    config.model_json = j["model"];
    (void)config.model();  // validates kind and parameters
    const json section = j.value(command == Subcommand::Esd ? "esd" : "stieltjes", json::object());
    config.input = get_or<std::string>(section, "input", config.input);
    if (config.input != "sample" && config.input != "mp_quantiles") {
      throw ConfigError("input must be \"sample\" or \"mp_quantiles\", got \"" + config.input +
                        "\"");
    }
    config.density_points = get_or<std::size_t>(section, "density_points", config.density_points);
    if (config.density_points < 2) throw ConfigError("density_points must be at least 2");
    if (section.contains("p_sweep")) config.p_sweep = parse_size_list(section["p_sweep"], "p_sweep");
  }

  if (command == Subcommand::Stieltjes && config.z_grid.empty()) {
    throw ConfigError("stieltjes needs a nonempty z_grid");
  }

  if (command == Subcommand::CheckLemma) {
    const json section = j.value("check_lemma", json::object());
    if (section.contains("cases")) {
      if (!section["cases"].is_number_integer() || section["cases"].get<std::int64_t>() < 1) {
        throw ConfigError("check_lemma.cases must be a positive integer");
      }
      config.lemma.cases = section["cases"].get<std::size_t>();
    }
    if (section.contains("max_p")) config.lemma.max_p = positive_size(section["max_p"], "max_p");
    config.lemma.v_min = get_or<double>(section, "v_min", config.lemma.v_min);
    config.lemma.v_max = get_or<double>(section, "v_max", config.lemma.v_max);
    if (!(config.lemma.v_min > 0.0) || !(config.lemma.v_max >= config.lemma.v_min)) {
      throw ConfigError("check_lemma needs 0 < v_min <= v_max");
    }
  }

  if (command == Subcommand::CheckConditions) {
    const json section = j.value("check_conditions", json::object());
    if (section.contains("models")) {
      if (!section["models"].is_array() || section["models"].empty()) {
        throw ConfigError("check_conditions.models must be a nonempty list");
      }
      for (const auto& m : section["models"]) config.condition_models.push_back(m);
    } else if (j.contains("model")) {
      config.condition_models.push_back(j["model"]);
    } else {
      throw ConfigError("check-conditions needs \"model\" or check_conditions.models");
    }
    if (section.contains("p_grid")) config.p_grid = parse_size_list(section["p_grid"], "p_grid");
    if (section.contains("families")) {
      config.families = get_or<std::vector<std::string>>(section, "families", {});
      if (config.families.empty()) throw ConfigError("check_conditions.families must be nonempty");
    }
    config.threshold = get_or<double>(section, "threshold", config.threshold);
    config.epsilon = get_or<double>(section, "epsilon", config.epsilon);
    if (!(config.threshold > 0.0)) throw ConfigError("threshold must be positive");
    if (!(config.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    for (const auto& m : config.condition_models) (void)model_from_json(m, config.p_grid.front());
    for (const auto& f : config.families) (void)family_from_name(f, config.p_grid.front());
  }
  return config;
}

ExperimentConfig load_config(const fs::path& path, Subcommand command) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, command);
}

Histogram freedman_diaconis_histogram(const std::vector<double>& pooled, double upper) {
  Histogram hist;
  hist.total = static_cast<double>(pooled.size());
  std::vector<double> continuous;
  continuous.reserve(pooled.size());
  for (double lambda : pooled) {
    if (lambda < kAtomThreshold) {
      ++hist.atom_count;
    } else {
      continuous.push_back(lambda);
    }
  }
  std::sort(continuous.begin(), continuous.end());

  std::size_t bins = 1;
  if (continuous.size() >= 2) {
    auto quartile = [&](double q) {
      const double pos = q * static_cast<double>(continuous.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, continuous.size() - 1);
      return continuous[lo] + (pos - static_cast<double>(lo)) * (continuous[hi] - continuous[lo]);
    };
    const double iqr = quartile(0.75) - quartile(0.25);
    const double width = 2.0 * iqr / std::cbrt(static_cast<double>(continuous.size()));
    if (width > 0.0) {
      bins = static_cast<std::size_t>(std::ceil(upper / width));
    } else {
      bins = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(continuous.size()))));
    }
    bins = std::clamp<std::size_t>(bins, 1, kMaxHistogramBins);
  }
  hist.bin_width = upper / static_cast<double>(bins);
  hist.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) hist.edges[i] = hist.bin_width * static_cast<double>(i);
  hist.edges.back() = upper;
  hist.counts.assign(bins, 0);
  for (double lambda : continuous) {
    auto index = static_cast<std::size_t>(lambda / hist.bin_width);
    hist.counts[std::min(index, bins - 1)] += 1;
  }
  return hist;
}

nlohmann::json cmd_esd(const ExperimentConfig& config) {
  const fs::path dir = prepare_output(config);
  const ColumnModel model = config.model();
  const MPLaw law(config.ratio());

  json summary = base_summary(config);
  summary["model"] = model_to_json(model);
  summary["p"] = config.p;
  summary["n"] = config.n;
  summary["ratio"] = config.ratio();
  summary["n_derived_from_c"] = config.c.has_value();
  summary["c"] = config.c ? json(*config.c) : json(nullptr);
  summary["input"] = config.input;
  summary["mp"] = law_json(law);

  std::vector<double> pooled;
  std::vector<double> ks_values;
  json atom_masses = json::array();
  json files = json::array();
  double top = 0.0;
  for (std::size_t i = 0; i < config.seeds.size(); ++i) {
    const Seed seed = config.seeds[i];
    const Spectrum spectrum = draw_spectrum(config, model, config.n, seed);
    ks_values.push_back(ks_distance(spectrum, law));
    const auto& values = spectrum.eigenvalues();
    const auto atoms = std::count_if(values.begin(), values.end(),
                                     [](double lambda) { return lambda < kAtomThreshold; });
    atom_masses.push_back(static_cast<double>(atoms) / static_cast<double>(values.size()));
    pooled.insert(pooled.end(), values.begin(), values.end());
    top = std::max(top, values.back());

    const std::string name = "eigenvalues_" + std::to_string(i) + ".csv";
    auto out = open_output(dir / name);
    write_spectrum_csv(out, spectrum, model.name(), to_string(seed));
    files.push_back(name);
  }

  const double upper = std::max(top, law.upper_edge()) + 0.5;
  const Histogram hist = freedman_diaconis_histogram(pooled, upper);
  {
    auto out = open_output(dir / "histogram.csv");
    out << "bin_left,bin_right,count,mass,density\n";
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
      const double mass = static_cast<double>(hist.counts[b]) / hist.total;
      const double width = hist.edges[b + 1] - hist.edges[b];
      out << hist.edges[b] << "," << hist.edges[b + 1] << "," << hist.counts[b] << "," << mass
          << "," << mass / width << "\n";
    }
    files.push_back("histogram.csv");
  }
  {
    auto out = open_output(dir / "mp_density.csv");
    out << "# c=" << law.ratio() << " atom=" << law.atom() << " a=" << law.lower_edge()
        << " b=" << law.upper_edge() << "\n";
    out << "x,density\n";
    std::vector<double> grid(config.density_points);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      grid[k] = upper * static_cast<double>(k) / static_cast<double>(grid.size() - 1);
    }
    grid.push_back(law.lower_edge());
    grid.push_back(law.upper_edge());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (double x : grid) out << x << "," << law.density(x) << "\n";
    files.push_back("mp_density.csv");
  }

  summary["ks"] = ks_values;
  summary["ks_mean"] = std::accumulate(ks_values.begin(), ks_values.end(), 0.0) /
                       static_cast<double>(ks_values.size());
  summary["ks_max"] = *std::max_element(ks_values.begin(), ks_values.end());
  summary["empirical_atom_mass"] = atom_masses;
  summary["histogram"] = {{"bins", hist.counts.size()},
                          {"bin_width", hist.bin_width},
                          {"upper", upper},
                          {"pooled_eigenvalues", pooled.size()},
                          {"atom_mass", static_cast<double>(hist.atom_count) / hist.total}};
  files.push_back("summary.json");
  summary["files"] = files;
  write_json(dir / "summary.json", summary);
  return summary;
}

nlohmann::json cmd_stieltjes(const ExperimentConfig& config) {
  if (config.z_grid.empty()) throw ConfigError("stieltjes needs a nonempty z_grid");
  const fs::path dir = prepare_output(config);
  const double ratio = config.c.value_or(config.ratio());
  const std::vector<std::size_t> p_values =
      config.p_sweep.empty() ? std::vector<std::size_t>{config.p} : config.p_sweep;

  auto out = open_output(dir / "stieltjes.csv");
  out << "p,n,seed,re_z,im_z,re_sn,im_sn,re_s,im_s,abs_error,abs_fixed_point_residual\n";

  struct Cell {
    std::vector<double> errors;
    std::vector<double> residuals;
  };
  // cells[p index][z index]
  std::vector<std::vector<Cell>> cells(p_values.size(), std::vector<Cell>(config.z_grid.size()));
  std::vector<std::size_t> n_values;
  double max_error = 0.0;

  for (std::size_t pi = 0; pi < p_values.size(); ++pi) {
    const std::size_t p = p_values[pi];
    const std::size_t n = config.p_sweep.empty()
                              ? config.n
                              : static_cast<std::size_t>(std::max(
                                    1.0, std::round(static_cast<double>(p) / ratio)));
    n_values.push_back(n);
    const ColumnModel model = model_from_json(config.model_json, p);
    const MPLaw law(static_cast<double>(p) / static_cast<double>(n));
    for (const Seed& seed : config.seeds) {
      const Spectrum spectrum = draw_spectrum(config, model, n, seed);
      for (std::size_t zi = 0; zi < config.z_grid.size(); ++zi) {
        const ComplexPoint z = config.z_grid[zi];
        const Complex sn = empirical_stieltjes(spectrum, z);
        const Complex s = law.stieltjes(z).s;
        const double error = std::abs(sn - s);
        const double residual = std::abs(fixed_point_residual(spectrum, z));
        cells[pi][zi].errors.push_back(error);
        cells[pi][zi].residuals.push_back(residual);
        max_error = std::max(max_error, error);
        out << p << "," << n << "," << to_string(seed) << "," << z.re() << "," << z.im() << ","
            << sn.real() << "," << sn.imag() << "," << s.real() << "," << s.imag() << ","
            << error << "," << residual << "\n";
      }
    }
  }
  if (!out) throw ConfigError("failed writing stieltjes.csv");

  json files = json::array({"stieltjes.csv"});
  json per_z = json::array();
  {
    auto sweep = open_output(dir / "stieltjes_sweep.csv");
    sweep << "p,n,re_z,im_z,median_abs_error,median_abs_fixed_point_residual\n";
    for (std::size_t zi = 0; zi < config.z_grid.size(); ++zi) {
      std::vector<double> medians;
      for (std::size_t pi = 0; pi < p_values.size(); ++pi) {
        const double med = median(cells[pi][zi].errors);
        medians.push_back(med);
        sweep << p_values[pi] << "," << n_values[pi] << "," << config.z_grid[zi].re() << ","
              << config.z_grid[zi].im() << "," << med << ","
              << median(cells[pi][zi].residuals) << "\n";
      }
      bool nonincreasing = true;
      for (std::size_t k = 1; k < medians.size(); ++k) nonincreasing &= medians[k] <= medians[k - 1];
      per_z.push_back({{"re", config.z_grid[zi].re()},
                       {"im", config.z_grid[zi].im()},
                       {"median_abs_error", medians},
                       {"nonincreasing", nonincreasing}});
    }
    files.push_back("stieltjes_sweep.csv");
  }

  json summary = base_summary(config);
  summary["model"] = config.model_json;
  summary["input"] = config.input;
  summary["ratio"] = ratio;
  summary["p_values"] = p_values;
  summary["n_values"] = n_values;
  summary["max_abs_error"] = max_error;
  summary["per_z"] = per_z;
  files.push_back("stieltjes_summary.json");
  summary["files"] = files;
  write_json(dir / "stieltjes_summary.json", summary);
  return summary;
}

nlohmann::json cmd_check_lemma(const ExperimentConfig& config) {
  const fs::path dir = prepare_output(config);
  LemmaFuzzConfig fuzz = config.lemma;
  fuzz.seed = config.seeds.front();
  const LemmaFuzzSummary result = run_lemma_fuzz(fuzz);

  json summary = base_summary(config);
  summary["seeds"] = json::array({seed_to_json(fuzz.seed)});
  summary["max_p"] = fuzz.max_p;
  summary["v_min"] = fuzz.v_min;
  summary["v_max"] = fuzz.v_max;
  summary["result"] = to_json(result);
  write_json(dir / "lemma1.json", summary);
  return summary;
}

nlohmann::json cmd_check_conditions(const ExperimentConfig& config) {
  const fs::path dir = prepare_output(config);
  const Seed seed = config.seeds.front();

  json models = json::array();
  for (std::size_t mi = 0; mi < config.condition_models.size(); ++mi) {
    const ColumnModel model = model_from_json(config.condition_models[mi], config.p_grid.front());
    const Seed model_seed = seed.child(mi);

    json quadform = json::array();
    bool satisfies_a = true;
    for (std::size_t fi = 0; fi < config.families.size(); ++fi) {
      const TestMatrixFamily family = family_from_name(config.families[fi], config.p_grid.front());
      const ConditionReport report =
          sweep_quadform(model, family, config.p_grid, config.trials, model_seed.child(fi));
      const bool vanishes = report.vanishes(config.threshold);
      satisfies_a = satisfies_a && vanishes;
      json entry = to_json(report);
      entry["vanishes"] = vanishes;
      quadform.push_back(entry);
    }

    json entry = {{"model", model_to_json(model)},
                  {"name", model.name()},
                  {"quadform", quadform},
                  {"verdict", satisfies_a ? "consistent with (A)" : "violates (A)"}};

    if (model.iid_entries()) {
      const Seed stat_seed = model_seed.child(config.families.size());
      const ConditionReport lindeberg =
          sweep_lindeberg(model, config.epsilon, config.p_grid, config.trials, stat_seed.child(0));
      json l = to_json(lindeberg);
      const bool lindeberg_vanishes = lindeberg.vanishes(config.threshold);
      l["vanishes"] = lindeberg_vanishes;
      entry["lindeberg"] = l;
      entry["lindeberg_verdict"] =
          lindeberg_vanishes ? "consistent with Lindeberg" : "violates Lindeberg";

      const ConditionReport weighted =
          sweep_weighted_squares(model, config.p_grid, config.trials, stat_seed.child(1));
      json w = to_json(weighted);
      w["vanishes"] = weighted.vanishes(config.threshold);
      entry["weighted_squares"] = w;

      const ConditionReport offdiag =
          sweep_offdiag(model, config.p_grid, config.trials, stat_seed.child(2));
      json o = to_json(offdiag);
      o["vanishes"] = offdiag.vanishes(config.threshold);
      entry["offdiag"] = o;
    } else {
      entry["lindeberg"] = nullptr;
      entry["lindeberg_verdict"] = "not applicable (entries not i.i.d.)";
    }
    models.push_back(entry);
  }

  json summary = base_summary(config);
  summary["seeds"] = json::array({seed_to_json(seed)});
  summary["threshold"] = config.threshold;
  summary["epsilon"] = config.epsilon;
  summary["trials"] = config.trials;
  summary["p_grid"] = config.p_grid;
  summary["families"] = config.families;
  summary["models"] = models;
  write_json(dir / "conditions.json", summary);
  return summary;
}

nlohmann::json run_command(const ExperimentConfig& config) {
  switch (config.command) {
    case Subcommand::Esd:
      return cmd_esd(config);
    case Subcommand::Stieltjes:
      return cmd_stieltjes(config);
    case Subcommand::CheckLemma:
      return cmd_check_lemma(config);
    case Subcommand::CheckConditions:
      return cmd_check_conditions(config);
  }
  throw ConfigError("unknown subcommand");
}

int run_subcommand(Subcommand command, const fs::path& config_path,
                   const std::optional<fs::path>& out_dir, const std::optional<std::uint64_t>& seed) {
  try {
    ExperimentConfig config = load_config(config_path, command);
    if (out_dir) config.output_dir = *out_dir;
    if (seed) config.seeds = {Seed{*seed, 0}};
    run_command(config);
    return kExitOk;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace mpspectra
