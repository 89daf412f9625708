#include "fastswitch/experiment/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <json.hpp>

#include "fastswitch/experiment/config.hpp"

namespace fastswitch::experiment {
namespace {

using Json = nlohmann::ordered_json;

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

Json summary_json(const EnsembleSummary& s) {
  Json stats = Json::array();
  for (const auto& st : s.statistics) {
    Json row;
    row["name"] = st.name;
    row["value"] = st.value;
    row["stderr"] = st.std_error ? Json(*st.std_error) : Json(nullptr);
    stats.push_back(std::move(row));
  }
  Json j;
  j["scenario"] = s.scenario;
  j["epsilon"] = s.eps ? Json(*s.eps) : Json(nullptr);
  j["sample_size"] = s.sample_size;
  j["statistics"] = std::move(stats);
  return j;
}

EnsembleSummary summary_from(const Json& j) {
  EnsembleSummary s;
  s.scenario = j.at("scenario").get<std::string>();
  if (!j.at("epsilon").is_null()) s.eps = j.at("epsilon").get<double>();
  s.sample_size = j.at("sample_size").get<std::size_t>();
  for (const auto& row : j.at("statistics")) {
    NamedStatistic st;
    st.name = row.at("name").get<std::string>();
    st.value = row.at("value").get<double>();
    if (!row.at("stderr").is_null()) st.std_error = row.at("stderr").get<double>();
    s.statistics.push_back(std::move(st));
  }
  return s;
}

void write_file(const std::filesystem::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing " + file.string());
}

}  // namespace

const EnsembleSummary& ConvergenceReport::at(double e) const {
  for (const auto& s : sweep) {
    if (s.eps && *s.eps == e) return s;
  }
  throw std::out_of_range("no ensemble for eps " + num(e));
}

std::string to_json(const ConvergenceReport& r) {
  Json j;
  j["scenario"] = r.scenario;
  j["process"] = r.process;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["code_version"] = r.code_version;
  j["horizon"] = r.horizon;
  j["paths"] = r.paths;
  j["epsilons"] = r.eps;
  Json sweep = Json::array();
  for (const auto& s : r.sweep) sweep.push_back(summary_json(s));
  j["sweep"] = std::move(sweep);
  j["baseline"] = summary_json(r.baseline);
  return j.dump(2) + "\n";
}

ConvergenceReport report_from_json(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    ConvergenceReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.process = j.at("process").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.code_version = j.at("code_version").get<std::string>();
    r.horizon = j.at("horizon").get<double>();
    r.paths = j.at("paths").get<std::size_t>();
    r.eps = j.at("epsilons").get<std::vector<double>>();
    for (const auto& s : j.at("sweep")) r.sweep.push_back(summary_from(s));
    r.baseline = summary_from(j.at("baseline"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed report: ") + e.what());
  }
}

std::string records_jsonl(const ConvergenceReport& r) {
  std::string out;
  auto emit = [&](const EnsembleSummary& s, bool baseline) {
    for (const auto& st : s.statistics) {
      Json row;
      row["scenario"] = r.scenario;
      row["epsilon"] = s.eps ? Json(*s.eps) : Json(nullptr);
      row["baseline"] = baseline;
      row["statistic"] = st.name;
      row["value"] = st.value;
      row["stderr"] = st.std_error ? Json(*st.std_error) : Json(nullptr);
      row["seed"] = r.seed;
      out += row.dump();
      out += '\n';
    }
  };
  for (const auto& s : r.sweep) emit(s, false);
  emit(r.baseline, true);
  return out;
}

std::string sweep_csv(const ConvergenceReport& r) {
  std::string out = "kind,epsilon,statistic,value,stderr\n";
  auto emit = [&](const EnsembleSummary& s, const char* kind) {
    for (const auto& st : s.statistics) {
      out += kind;
      out += ',' + num(s.eps.value_or(0.0)) + ',' + st.name + ',' + num(st.value) + ',';
      if (st.std_error) out += num(*st.std_error);
      out += '\n';
    }
  };
  for (const auto& s : r.sweep) emit(s, "switching");
  emit(r.baseline, "baseline");
  return out;
}

void emit_report(const ConvergenceReport& report, const std::filesystem::path& dir,
                 const std::vector<PathSample>* samples,
                 const std::vector<std::string>* regime_labels) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  write_file(dir / "report.json", to_json(report));
  write_file(dir / "records.jsonl", records_jsonl(report));
  write_file(dir / "sweep.csv", sweep_csv(report));
  if (!samples) return;

  auto label = [&](Regime r) {
    return regime_labels && r < regime_labels->size() ? (*regime_labels)[r]
                                                      : std::to_string(r);
  };
  std::ostringstream paths;
  std::ostringstream mods;
  paths << "kind,epsilon,path,t,value\n";
  mods << "epsilon,path,time,state\n";
  for (const auto& s : *samples) {
    const char* kind = s.baseline ? "baseline" : "switching";
    const std::string eps = num(s.eps);
    for (std::size_t i = 0; i < s.times.size(); ++i) {
      paths << kind << ',' << eps << ',' << s.index << ',' << num(s.times[i]) << ','
            << num(s.values[i]) << '\n';
    }
    if (s.baseline) continue;
    mods << eps << ',' << s.index << ",0," << label(s.y_initial) << '\n';
    for (std::size_t i = 0; i < s.y_jump_times.size(); ++i) {
      mods << eps << ',' << s.index << ',' << num(s.y_jump_times[i]) << ','
           << label(s.y_states[i]) << '\n';
    }
  }
  write_file(dir / "paths_sample.csv", paths.str());
  write_file(dir / "modulator_sample.csv", mods.str());
}

ConvergenceReport load_report(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return report_from_json(buf.str());
}

}  // namespace fastswitch::experiment
