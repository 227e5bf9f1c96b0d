#include "dashf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

using nlohmann::json;

namespace dashf::experiment {

const std::vector<std::string> kAllAlgorithms = {"dashf", "rucaa", "gucaa", "aauco", "gucro"};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + tmp);
    os << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot move into place: " + path);
}

std::vector<CompareRow> run_compare(const Scenario& scn, const driver::RunOptions& opt,
                                    const std::vector<std::string>& algorithms) {
  std::vector<CompareRow> rows;
  for (const std::string& alg : algorithms) {
    CompareRow row;
    row.algorithm = alg;
    try {
      const auto [sol, trace] = driver::run_algorithm(alg, scn, opt);
      const CostBreakdown c = evaluate(scn, sol.allocation);
      row.ok = true;
      row.status = "ok";
      row.scr = sol.scr_value;
      row.delay_total = c.delay_total;
      row.energy_total = c.energy_total;
      row.service_total = c.service_total;
    } catch (const std::exception& e) {
      row.ok = false;
      row.status = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ExperimentSpec spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("<document>", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("<document>", "expected a JSON object");
  if (!j.contains("schema_version") || j["schema_version"] != 1)
    throw SchemaError("schema_version", "unsupported version (expected 1)");
  if (!j.contains("kind") || j["kind"] != "experiment")
    throw SchemaError("kind", "expected \"experiment\"");
  if (!j.contains("scenario_config")) throw SchemaError("scenario_config", "missing field");

  ExperimentSpec spec;
  spec.base_config = config_from_json(j["scenario_config"].dump());
  if (j.contains("algorithms")) {
    spec.algorithms.clear();
    if (!j["algorithms"].is_array() || j["algorithms"].empty())
      throw SchemaError("algorithms", "expected a nonempty array");
    for (const auto& a : j["algorithms"]) {
      if (!a.is_string()) throw SchemaError("algorithms", "expected strings");
      spec.algorithms.push_back(a.get<std::string>());
    }
  }
  if (j.contains("epsilon")) spec.epsilon = j["epsilon"].get<double>();
  if (j.contains("seeds")) {
    spec.seeds.clear();
    for (const auto& s : j["seeds"]) spec.seeds.push_back(s.get<std::uint64_t>());
    if (spec.seeds.empty()) throw SchemaError("seeds", "expected a nonempty array");
  }

  if (j.contains("sweep")) {
    const json& sw = j["sweep"];
    if (!sw.contains("axis") || !sw["axis"].is_string())
      throw SchemaError("sweep.axis", "expected a string");
    spec.axis = sw["axis"].get<std::string>();
    if (spec.axis == "none") {
      SweepPoint p;
      p.bandwidth_hz = spec.base_config.bandwidth_max_hz;
      p.weight_delay = spec.base_config.weight_delay;
      p.weight_energy = spec.base_config.weight_energy;
      p.label = "base";
      p.bandwidth_hz = spec.base_config.bandwidth_max_hz;
      spec.points = {p};
    } else if (spec.axis == "b_max") {
      if (!sw.contains("values") || !sw["values"].is_array() || sw["values"].empty())
        throw SchemaError("sweep.values", "expected a nonempty array of bandwidths");
      for (const auto& v : sw["values"]) {
        SweepPoint p;
        p.bandwidth_hz = v.get<double>();
        p.weight_delay = spec.base_config.weight_delay;
        p.weight_energy = spec.base_config.weight_energy;
        p.label = format_double(p.bandwidth_hz);
        spec.points.push_back(p);
      }
    } else if (spec.axis == "weights") {
      if (!sw.contains("values") || !sw["values"].is_array() || sw["values"].empty())
        throw SchemaError("sweep.values", "expected a nonempty array of [wt, we] pairs");
      for (const auto& v : sw["values"]) {
        if (!v.is_array() || v.size() != 2)
          throw SchemaError("sweep.values", "each entry must be a [wt, we] pair");
        SweepPoint p;
        p.bandwidth_hz = spec.base_config.bandwidth_max_hz;
        p.weight_delay = v[0].get<double>();
        p.weight_energy = v[1].get<double>();
        p.label = format_double(p.weight_delay) + "/" + format_double(p.weight_energy);
        spec.points.push_back(p);
      }
    } else {
      throw SchemaError("sweep.axis", "unknown axis (none | b_max | weights)");
    }
  } else {
    SweepPoint p;
    p.bandwidth_hz = spec.base_config.bandwidth_max_hz;
    p.weight_delay = spec.base_config.weight_delay;
    p.weight_energy = spec.base_config.weight_energy;
    p.label = "base";
    spec.points = {p};
  }
  return spec;
}

std::string spec_to_json(const ExperimentSpec& spec) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "experiment";
  j["scenario_config"] = json::parse(config_to_json(spec.base_config));
  j["algorithms"] = spec.algorithms;
  j["epsilon"] = spec.epsilon;
  j["seeds"] = spec.seeds;
  json sw;
  sw["axis"] = spec.axis;
  if (spec.axis == "b_max") {
    json vals = json::array();
    for (const auto& p : spec.points) vals.push_back(p.bandwidth_hz);
    sw["values"] = vals;
  } else if (spec.axis == "weights") {
    json vals = json::array();
    for (const auto& p : spec.points) vals.push_back({p.weight_delay, p.weight_energy});
    sw["values"] = vals;
  }
  j["sweep"] = sw;
  return j.dump(2);
}

std::vector<SweepRow> run_sweep(const ExperimentSpec& spec, int jobs) {
  struct Task {
    std::size_t point;
    std::size_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < spec.points.size(); ++p)
    for (std::size_t s = 0; s < spec.seeds.size(); ++s) tasks.push_back({p, s});

  // results indexed by (point, seed, algorithm) for a deterministic order
  std::vector<SweepRow> rows(spec.points.size() * spec.seeds.size() * spec.algorithms.size());
  auto row_index = [&](std::size_t p, std::size_t s, std::size_t a) {
    return (p * spec.seeds.size() + s) * spec.algorithms.size() + a;
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task t = tasks[i];
      const SweepPoint& pt = spec.points[t.point];
      ScenarioConfig cfg = spec.base_config;
      cfg.seed = spec.seeds[t.seed];
      if (spec.axis == "b_max") cfg.bandwidth_max_hz = pt.bandwidth_hz;
      if (spec.axis == "weights") {
        cfg.weight_delay = pt.weight_delay;
        cfg.weight_energy = pt.weight_energy;
      }
      driver::RunOptions opt;
      opt.epsilon = spec.epsilon;
      std::vector<CompareRow> cmp;
      std::string point_error;
      try {
        const Scenario scn = generate(cfg);
        cmp = run_compare(scn, opt, spec.algorithms);
      } catch (const std::exception& e) {
        point_error = e.what();
      }
      for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
        SweepRow& row = rows[row_index(t.point, t.seed, a)];
        row.algorithm = spec.algorithms[a];
        row.point_label = pt.label;
        row.point_value = spec.axis == "weights" ? pt.weight_delay : pt.bandwidth_hz;
        row.seed = std::to_string(spec.seeds[t.seed]);
        if (!point_error.empty()) {
          row.ok = false;
          row.status = point_error;
        } else {
          const CompareRow& c = cmp[a];
          row.ok = c.ok;
          row.status = c.status;
          row.scr = c.scr;
          row.delay_total = c.delay_total;
          row.energy_total = c.energy_total;
          row.service_total = c.service_total;
        }
      }
    }
  };

  const int nthreads = std::max(1, jobs);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // aggregated mean rows per (algorithm, point) over successful seeds
  std::vector<SweepRow> means;
  for (std::size_t p = 0; p < spec.points.size(); ++p) {
    for (std::size_t a = 0; a < spec.algorithms.size(); ++a) {
      SweepRow mean;
      mean.algorithm = spec.algorithms[a];
      mean.point_label = spec.points[p].label;
      mean.point_value =
          spec.axis == "weights" ? spec.points[p].weight_delay : spec.points[p].bandwidth_hz;
      mean.seed = "mean";
      int count = 0;
      for (std::size_t s = 0; s < spec.seeds.size(); ++s) {
        const SweepRow& r = rows[row_index(p, s, a)];
        if (!r.ok) continue;
        ++count;
        mean.scr += r.scr;
        mean.delay_total += r.delay_total;
        mean.energy_total += r.energy_total;
        mean.service_total += r.service_total;
      }
      if (count > 0) {
        mean.ok = true;
        mean.status = count == static_cast<int>(spec.seeds.size()) ? "ok" : "partial";
        mean.scr /= count;
        mean.delay_total /= count;
        mean.energy_total /= count;
        mean.service_total /= count;
      } else {
        mean.status = "failed";
      }
      means.push_back(std::move(mean));
    }
  }
  rows.insert(rows.end(), means.begin(), means.end());
  return rows;
}

void write_trace_csv(const std::string& path, const std::string& scenario_hash,
                     const driver::RunTrace& trace) {
  std::ostringstream os;
  os << "# scenario_hash=" << scenario_hash << " tool_version=" << kToolVersion << "\n";
  os << "iter,y,scr,obj_part1,obj_part2,T_total,E_total,V,wall_ms\n";
  for (const auto& r : trace.rows) {
    os << r.iteration << ',' << format_double(r.y) << ',' << format_double(r.scr_value) << ','
       << format_double(r.obj_part1) << ',' << format_double(r.obj_part2) << ','
       << format_double(r.delay_total) << ',' << format_double(r.energy_total) << ','
       << format_double(r.service_total) << ',' << format_double(r.wall_ms) << "\n";
  }
  write_file_atomic(path, os.str());
}

void write_comparison_csv(const std::string& path, const std::string& scenario_hash,
                          const std::vector<CompareRow>& rows) {
  std::ostringstream os;
  os << "# scenario_hash=" << scenario_hash << " tool_version=" << kToolVersion << "\n";
  os << "algorithm,scr,T_total,E_total,V\n";
  for (const auto& r : rows) {
    os << r.algorithm << ',' << format_double(r.scr) << ',' << format_double(r.delay_total) << ','
       << format_double(r.energy_total) << ',' << format_double(r.service_total) << "\n";
  }
  write_file_atomic(path, os.str());
}

void write_sweep_csv(const std::string& path, const std::string& config_hash,
                     const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "# config_hash=" << config_hash << " tool_version=" << kToolVersion << "\n";
  os << "algorithm,point,seed,status,scr,T_total,E_total,V\n";
  for (const auto& r : rows) {
    os << r.algorithm << ',' << r.point_label << ',' << r.seed << ',' << (r.ok ? "ok" : "error")
       << ',' << format_double(r.scr) << ',' << format_double(r.delay_total) << ','
       << format_double(r.energy_total) << ',' << format_double(r.service_total) << "\n";
  }
  write_file_atomic(path, os.str());
}

void write_solution_json(const std::string& path, const std::string& scenario_hash,
                         const std::string& algorithm, const driver::Solution& sol) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = "solution";
  j["tool_version"] = kToolVersion;
  j["scenario_hash"] = scenario_hash;
  j["algorithm"] = algorithm;
  j["scr"] = sol.scr_value;
  j["converged"] = sol.converged;
  j["iterations"] = sol.iterations;
  j["allocation"] = json::parse(allocation_to_json(sol.allocation));
  write_file_atomic(path, j.dump(2) + "\n");
}

namespace {

std::string svg_header(int w, int h) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return os.str();
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

}  // namespace

void write_compare_svg(const std::string& path, const std::vector<CompareRow>& rows) {
  const int w = 640, h = 420, pad = 60;
  double maxv = 1e-12;
  for (const auto& r : rows) maxv = std::max(maxv, r.scr);
  std::ostringstream os;
  os << svg_header(w, h);
  os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << "service-cost ratio by algorithm</text>\n";
  const double band = static_cast<double>(w - 2 * pad) / std::max<std::size_t>(rows.size(), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double bh = (h - 2 * pad) * rows[i].scr / maxv;
    const double x = pad + band * i + band * 0.15;
    const double y = h - pad - bh;
    os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << band * 0.7 << "\" height=\"" << bh
       << "\" fill=\"" << kPalette[i % 6] << "\"/>\n";
    os << "<text x=\"" << x + band * 0.35 << "\" y=\"" << h - pad + 18
       << "\" text-anchor=\"middle\" font-size=\"12\">" << rows[i].algorithm << "</text>\n";
    os << "<text x=\"" << x + band * 0.35 << "\" y=\"" << y - 6
       << "\" text-anchor=\"middle\" font-size=\"11\">" << format_double(rows[i].scr).substr(0, 8)
       << "</text>\n";
  }
  os << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\""
     << h - pad << "\" stroke=\"black\"/>\n</svg>\n";
  write_file_atomic(path, os.str());
}

void write_sweep_svg(const std::string& path, const std::vector<SweepRow>& rows,
                     const std::string& x_label) {
  // plot the mean rows per algorithm
  std::vector<std::string> algs;
  std::vector<double> xs;
  for (const auto& r : rows) {
    if (r.seed != "mean" || !r.ok) continue;
    if (std::find(algs.begin(), algs.end(), r.algorithm) == algs.end()) algs.push_back(r.algorithm);
    if (std::find(xs.begin(), xs.end(), r.point_value) == xs.end()) xs.push_back(r.point_value);
  }
  std::sort(xs.begin(), xs.end());
  const int w = 720, h = 460, pad = 70;
  double ymax = 1e-12, xmin = xs.empty() ? 0.0 : xs.front(), xmax = xs.empty() ? 1.0 : xs.back();
  if (xmax <= xmin) xmax = xmin + 1.0;
  for (const auto& r : rows)
    if (r.seed == "mean" && r.ok) ymax = std::max(ymax, r.scr);
  std::ostringstream os;
  os << svg_header(w, h);
  os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << "service-cost ratio vs " << x_label << "</text>\n";
  auto px = [&](double x) { return pad + (w - 2.0 * pad) * (x - xmin) / (xmax - xmin); };
  auto py = [&](double y) { return h - pad - (h - 2.0 * pad) * y / ymax; };
  for (std::size_t a = 0; a < algs.size(); ++a) {
    std::ostringstream pts;
    for (double x : xs) {
      for (const auto& r : rows) {
        if (r.seed == "mean" && r.ok && r.algorithm == algs[a] && r.point_value == x)
          pts << px(x) << ',' << py(r.scr) << ' ';
      }
    }
    os << "<polyline fill=\"none\" stroke=\"" << kPalette[a % 6] << "\" stroke-width=\"2\" points=\""
       << pts.str() << "\"/>\n";
    os << "<text x=\"" << w - pad + 4 << "\" y=\"" << 40 + 16 * a << "\" font-size=\"12\" fill=\""
       << kPalette[a % 6] << "\">" << algs[a] << "</text>\n";
  }
  os << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\""
     << h - pad << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << h - pad
     << "\" stroke=\"black\"/>\n</svg>\n";
  write_file_atomic(path, os.str());
}

}  // namespace dashf::experiment
