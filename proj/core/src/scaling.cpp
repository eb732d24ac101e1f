#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "rfseq/bench.hpp"

namespace rfseq::bench {

std::vector<ScalingRow> scaling_report(ExperimentKind kind,
                                       std::span<const std::size_t> point_counts, int shots,
                                       double relaxation, Endpoint& endpoint,
                                       const sim::OverheadModel& overheads,
                                       std::optional<ExperimentParams> base) {
  ExperimentParams params = base.value_or(default_params(kind));
  params.shots = shots;
  params.relaxation = relaxation;

  std::vector<ScalingRow> rows;
  for (std::size_t n : point_counts) {
    params.points = n;
    const Dataset ds = run_experiment(kind, endpoint, params);
    ScalingRow row;
    row.kind = kind;
    row.points = n;
    row.ideal = ds.accounting.ideal;
    row.wall = sim::simulated_wall_time(ds.accounting.program_loads, ds.accounting.connections,
                                        ds.accounting.ideal, overheads);
    row.ratio = row.wall / row.ideal;
    rows.push_back(row);
  }
  return rows;
}

std::string scaling_csv(std::span<const ScalingRow> rows) {
  std::string out = "kind,points,wall_s,ideal_s,ratio\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{}\n", to_string(r.kind), r.points, r.wall, r.ideal, r.ratio);
  }
  return out;
}

namespace {

template <typename T>
T parse_field(std::string_view field, std::size_t line) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw DecodeError(fmt::format("line {}: bad number '{}'", line, field));
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    out.push_back(line.substr(pos, next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace

std::vector<ScalingRow> parse_scaling_csv(std::string_view text) {
  std::vector<ScalingRow> rows;
  std::size_t line_no = 0;
  bool header = true;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != "kind,points,wall_s,ideal_s,ratio") {
        throw DecodeError(fmt::format("line {}: unexpected header", line_no));
      }
      header = false;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 5) {
      throw DecodeError(fmt::format("line {}: expected 5 fields, got {}", line_no, fields.size()));
    }
    const auto kind = parse_experiment_kind(fields[0]);
    if (!kind) throw DecodeError(fmt::format("line {}: unknown kind '{}'", line_no, fields[0]));
    ScalingRow r;
    r.kind = *kind;
    r.points = parse_field<std::size_t>(fields[1], line_no);
    r.wall = parse_field<double>(fields[2], line_no);
    r.ideal = parse_field<double>(fields[3], line_no);
    r.ratio = parse_field<double>(fields[4], line_no);
    rows.push_back(r);
  }
  if (header) throw DecodeError("missing header");
  return rows;
}

namespace {

struct Panel {
  double x0, y0, w, h;
  double lx_min, lx_max, ly_min, ly_max;

  double px(double v) const {
    const double t = (std::log10(v) - lx_min) / std::max(lx_max - lx_min, 1e-12);
    return x0 + t * w;
  }
  double py(double v) const {
    const double t = (std::log10(v) - ly_min) / std::max(ly_max - ly_min, 1e-12);
    return y0 + h - t * h;
  }
};

Panel make_panel(double x0, double y0, std::span<const double> xs, std::span<const double> ys) {
  Panel p{x0, y0, 360.0, 240.0, 0, 1, 0, 1};
  auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
  auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
  p.lx_min = std::floor(std::log10(*xmin));
  p.lx_max = std::ceil(std::log10(*xmax));
  p.ly_min = std::floor(std::log10(*ymin));
  p.ly_max = std::ceil(std::log10(*ymax));
  if (p.lx_max == p.lx_min) p.lx_max += 1;
  if (p.ly_max == p.ly_min) p.ly_max += 1;
  return p;
}

void axes(std::ostringstream& svg, const Panel& p, std::string_view title) {
  svg << fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#444"/>)",
                     p.x0, p.y0, p.w, p.h)
      << '\n';
  svg << fmt::format(R"(<text x="{}" y="{}" font-size="13">{}</text>)", p.x0, p.y0 - 8, title)
      << '\n';
  for (double e = p.lx_min; e <= p.lx_max; e += 1) {
    const double x = p.x0 + (e - p.lx_min) / (p.lx_max - p.lx_min) * p.w;
    svg << fmt::format(R"(<text x="{}" y="{}" font-size="10" text-anchor="middle">1e{}</text>)", x,
                       p.y0 + p.h + 14, e)
        << '\n';
  }
  for (double e = p.ly_min; e <= p.ly_max; e += 1) {
    const double y = p.y0 + p.h - (e - p.ly_min) / (p.ly_max - p.ly_min) * p.h;
    svg << fmt::format(R"(<text x="{}" y="{}" font-size="10" text-anchor="end">1e{}</text>)",
                       p.x0 - 4, y + 3, e)
        << '\n';
  }
}

void polyline(std::ostringstream& svg, const Panel& p, std::span<const double> xs,
              std::span<const double> ys, std::string_view color) {
  std::string points;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    points += fmt::format("{:.2f},{:.2f} ", p.px(xs[k]), p.py(ys[k]));
  }
  svg << fmt::format(R"(<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>)",
                     points, color)
      << '\n';
}

}  // namespace

std::string scaling_svg(std::span<const ScalingRow> rows) {
  std::ostringstream svg;
  svg << R"(<svg xmlns="http://www.w3.org/2000/svg" width="880" height="320">)" << '\n';
  std::vector<double> n, wall, ideal, ratio, times;
  for (const auto& r : rows) {
    if (r.points == 0 || !(r.wall > 0) || !(r.ideal > 0)) continue;
    n.push_back(static_cast<double>(r.points));
    wall.push_back(r.wall);
    ideal.push_back(r.ideal);
    ratio.push_back(r.ratio);
  }
  if (!n.empty()) {
    times = wall;
    times.insert(times.end(), ideal.begin(), ideal.end());
    const Panel left = make_panel(60, 40, n, times);
    axes(svg, left, "wall (red) and ideal (blue) time [s] vs points");
    polyline(svg, left, n, wall, "#c0392b");
    polyline(svg, left, n, ideal, "#2e86c1");
    const Panel right = make_panel(500, 40, n, ratio);
    axes(svg, right, "wall / ideal vs points");
    polyline(svg, right, n, ratio, "#27ae60");
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace rfseq::bench
