#include "dpg/driver/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dpg/error.hpp"

namespace dpg::driver {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("write to '" + path.string() + "' failed");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir + "'");
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string to_csv(const ConvergenceLog& log) {
  std::ostringstream out;
  out << kCsvHeader << "\n";
  for (const auto& r : log.records)
    out << r.iter << "," << r.dofs << "," << r.elements << "," << num(r.eta) << "," << num(r.eta_star) << ","
        << num(r.qoi) << "," << num(r.qoi_rel_err) << "," << r.marked << "," << num(r.wall_ms) << "\n";
  return out.str();
}

std::string to_json(const ConvergenceLog& log) {
  using nlohmann::json;
  auto val = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  json doc;
  doc["label"] = log.label;
  doc["mode"] = log.mode;
  doc["goal"] = log.goal;
  doc["qoi_reference"] = log.qoi_reference;
  doc["normalization"] = log.normalization;
  json recs = json::array();
  for (const auto& r : log.records) {
    recs.push_back({{"iter", r.iter},
                    {"dofs", r.dofs},
                    {"elements", r.elements},
                    {"eta", val(r.eta)},
                    {"eta_star", val(r.eta_star)},
                    {"qoi", val(r.qoi)},
                    {"qoi_rel_err", val(r.qoi_rel_err)},
                    {"marked", r.marked},
                    {"wall_ms", r.wall_ms},
                    {"eta_indicators", r.eta_indicators},
                    {"eta_star_indicators", r.eta_star_indicators}});
  }
  doc["records"] = recs;
  return doc.dump(1) + "\n";
}

std::string to_svg(const std::vector<ConvergenceLog>& logs) {
  const double W = 720, H = 480, L = 80, R = 180, T = 30, B = 60;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& log : logs)
    for (const auto& r : log.records)
      if (r.dofs > 0 && r.qoi_rel_err > 0 && std::isfinite(r.qoi_rel_err)) {
        xmin = std::min(xmin, std::log10(double(r.dofs)));
        xmax = std::max(xmax, std::log10(double(r.dofs)));
        ymin = std::min(ymin, std::log10(r.qoi_rel_err));
        ymax = std::max(ymax, std::log10(r.qoi_rel_err));
      }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = -1;
    ymax = 0;
  }
  xmin = std::floor(xmin);
  xmax = std::max(std::ceil(xmax), xmin + 1);
  ymin = std::floor(ymin);
  ymax = std::max(std::ceil(ymax), ymin + 1);
  auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = int(xmin); e <= int(xmax); ++e)
    s << "<line x1=\"" << num(px(e)) << "\" y1=\"" << T << "\" x2=\"" << num(px(e)) << "\" y2=\"" << H - B
      << "\" stroke=\"#ddd\"/>\n<text x=\"" << num(px(e)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">1e" << e
      << "</text>\n";
  for (int e = int(ymin); e <= int(ymax); ++e)
    s << "<line x1=\"" << L << "\" y1=\"" << num(py(e)) << "\" x2=\"" << W - R << "\" y2=\"" << num(py(e))
      << "\" stroke=\"#ddd\"/>\n<text x=\"" << L - 8 << "\" y=\"" << num(py(e) + 4) << "\" text-anchor=\"end\">1e" << e
      << "</text>\n";
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">degrees of freedom</text>\n";
  s << "<text x=\"20\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " << (T + H - B) / 2
    << ")\">QoI relative error</text>\n";
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const char* color = kColors[i % 8];
    std::string pts;
    for (const auto& r : logs[i].records)
      if (r.dofs > 0 && r.qoi_rel_err > 0 && std::isfinite(r.qoi_rel_err))
        pts += num(px(std::log10(double(r.dofs)))) + "," + num(py(std::log10(r.qoi_rel_err))) + " ";
    if (!pts.empty()) pts.pop_back();
    s << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << pts << "\"/>\n";
    const double ly = T + 20 + 20 * double(i);
    s << "<g class=\"legend\"><line x1=\"" << W - R + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 45 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << W - R + 52 << "\" y=\"" << ly + 4 << "\">"
      << logs[i].label << "</text></g>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void emit_report(const ConvergenceLog& log, const std::string& output_dir) {
  if (log.records.empty()) throw Error("convergence log is empty");
  ensure_dir(output_dir);
  const std::filesystem::path dir(output_dir);
  write_file(dir / "convergence.csv", to_csv(log));
  write_file(dir / "convergence.json", to_json(log));
  write_file(dir / "convergence.svg", to_svg({log}));
}

ConvergenceLog read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open log '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ConfigError("'" + path + "' does not start with the convergence CSV header");
  ConvergenceLog log;
  std::filesystem::path p(path);
  log.label = p.parent_path().filename().string();
  if (log.label.empty() || log.label == ".") log.label = p.stem().string();
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw ConfigError("'" + path + "' line " + std::to_string(lineno) + ": expected 9 fields");
    IterationRecord r;
    try {
      r.iter = std::stoi(f[0]);
      r.dofs = std::stol(f[1]);
      r.elements = std::stoi(f[2]);
      r.eta = std::stod(f[3]);
      r.eta_star = std::stod(f[4]);
      r.qoi = std::stod(f[5]);
      r.qoi_rel_err = std::stod(f[6]);
      r.marked = std::stol(f[7]);
      r.wall_ms = std::stod(f[8]);
    } catch (const std::exception&) {
      throw ConfigError("'" + path + "' line " + std::to_string(lineno) + ": malformed number");
    }
    log.records.push_back(std::move(r));
  }
  return log;
}

std::string comparison_csv(const std::vector<ConvergenceLog>& logs) {
  std::ostringstream out;
  out << "run,iter,dofs,qoi_rel_err,ref_run,ref_dofs,ref_qoi_rel_err,ratio\n";
  if (logs.size() < 2 || logs[0].records.empty()) return out.str();
  const auto& ref = logs[0];
  for (std::size_t i = 1; i < logs.size(); ++i)
    for (const auto& r : logs[i].records) {
      const IterationRecord* best = &ref.records.front();
      for (const auto& c : ref.records)
        if (std::labs(c.dofs - r.dofs) < std::labs(best->dofs - r.dofs)) best = &c;
      out << logs[i].label << "," << r.iter << "," << r.dofs << "," << num(r.qoi_rel_err) << "," << ref.label << ","
          << best->dofs << "," << num(best->qoi_rel_err) << "," << num(r.qoi_rel_err / best->qoi_rel_err) << "\n";
    }
  return out.str();
}

void emit_comparison(const std::vector<ConvergenceLog>& logs, const std::string& output_dir) {
  if (logs.empty()) throw ConfigError("compare needs at least one log");
  ensure_dir(output_dir);
  const std::filesystem::path dir(output_dir);
  write_file(dir / "convergence.svg", to_svg(logs));
  write_file(dir / "comparison.csv", comparison_csv(logs));
}

}  // namespace dpg::driver
