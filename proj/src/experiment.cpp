#include "ranrc/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ranrc/node.hpp"

namespace ranrc {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "cost",        "nodes",           "radius",        "graph_seed",      "graph_file",
      "dimension",   "cond_max",        "quad_seed",     "dataset",         "feature_columns",
      "gamma",       "partition_seed",  "balanced",      "standardize",     "epsilon",
      "loss",        "loss_model",      "burst_cap",     "activation",      "activation_seed",
      "loss_seed",   "max_iters",       "hessian_floor", "variant",         "x0",
      "snapshot_stride", "divergence_mse", "out_dir",    "plot"};
  return keys;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line.substr(0, line.find_first_of("#;")));
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value, got '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    if (!known_keys().count(key))
      throw std::invalid_argument("config: unknown key '" + key + "'");
    kv[key] = trim(stripped.substr(eq + 1));
  }
  return kv;
}

double parse_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), last, v);
  if (ec != std::errc() || ptr != last)
    throw std::invalid_argument("config: key '" + key + "': cannot parse '" + value +
                                "' as a number");
  return v;
}

long long parse_int(const std::string& key, const std::string& value) {
  long long v = 0;
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), last, v);
  if (ec != std::errc() || ptr != last)
    throw std::invalid_argument("config: key '" + key + "': cannot parse '" + value +
                                "' as an integer");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw std::invalid_argument("config: key '" + key + "': cannot parse '" + value +
                              "' as a boolean");
}

std::vector<std::string> split_commas(const std::string& value) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= value.size()) {
    std::size_t end = value.find(',', start);
    if (end == std::string::npos) end = value.size();
    const std::string part = trim(value.substr(start, end - start));
    if (!part.empty()) parts.push_back(part);
    start = end + 1;
  }
  return parts;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& p : split_commas(value)) out.push_back(parse_double(key, p));
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (const auto& p : split_commas(value)) out.push_back(static_cast<int>(parse_int(key, p)));
  return out;
}

ExperimentSpec spec_from_kv(const std::map<std::string, std::string>& kv) {
  ExperimentSpec spec;
  for (const auto& [key, value] : kv) {
    if (key == "cost") spec.cost = value;
    else if (key == "nodes") spec.nodes = static_cast<int>(parse_int(key, value));
    else if (key == "radius") spec.radius = parse_double(key, value);
    else if (key == "graph_seed") spec.graph_seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "graph_file") spec.graph_file = value;
    else if (key == "dimension") spec.dimension = static_cast<int>(parse_int(key, value));
    else if (key == "cond_max") spec.cond_max = parse_double(key, value);
    else if (key == "quad_seed") spec.quad_seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "dataset") spec.dataset = value;
    else if (key == "feature_columns") spec.feature_columns = parse_int_list(key, value);
    else if (key == "gamma") spec.gamma = parse_double(key, value);
    else if (key == "partition_seed") spec.partition_seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "balanced") spec.balanced = parse_bool(key, value);
    else if (key == "standardize") spec.standardize = parse_bool(key, value);
    else if (key == "epsilon") spec.epsilons = parse_double_list(key, value);
    else if (key == "loss") spec.loss_probs = parse_double_list(key, value);
    else if (key == "loss_model") spec.loss_model = value;
    else if (key == "burst_cap") spec.burst_cap = static_cast<int>(parse_int(key, value));
    else if (key == "activation") {
      if (value == "uniform") spec.base.activation = ActivationPolicy::UniformRandom;
      else if (value == "round_robin") spec.base.activation = ActivationPolicy::RoundRobin;
      else throw std::invalid_argument("config: activation must be uniform or round_robin");
    } else if (key == "activation_seed") spec.base.activation_seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "loss_seed") spec.base.loss_seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "max_iters") spec.base.max_iters = static_cast<int>(parse_int(key, value));
    else if (key == "hessian_floor") spec.base.hessian_floor = parse_double(key, value);
    else if (key == "variant") {
      if (value == "newton") spec.base.variant = DescentVariant::NewtonRaphson;
      else if (value == "jacobi") spec.base.variant = DescentVariant::Jacobi;
      else if (value == "gradient") spec.base.variant = DescentVariant::Gradient;
      else throw std::invalid_argument("config: variant must be newton, jacobi or gradient");
    } else if (key == "x0") {
      const std::vector<double> vals = parse_double_list(key, value);
      spec.base.x0 = Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
    } else if (key == "snapshot_stride") spec.base.snapshot_stride = static_cast<int>(parse_int(key, value));
    else if (key == "divergence_mse") spec.base.divergence_mse = parse_double(key, value);
    else if (key == "out_dir") spec.out_dir = value;
    else if (key == "plot") spec.plot = parse_bool(key, value);
  }
  return spec;
}

void validate_spec(const ExperimentSpec& spec) {
  if (spec.cost != "quadratic" && spec.cost != "binomial_deviance")
    throw std::invalid_argument("config: cost must be quadratic or binomial_deviance");
  if (spec.nodes < 1) throw std::invalid_argument("config: nodes must be >= 1");
  if (spec.graph_file.empty() && !(spec.radius > 0.0))
    throw std::invalid_argument("config: radius must be > 0");
  if (spec.dimension < 1) throw std::invalid_argument("config: dimension must be >= 1");
  if (spec.cond_max < 1.0) throw std::invalid_argument("config: cond_max must be >= 1");
  if (spec.gamma < 0.0) throw std::invalid_argument("config: gamma must be >= 0");
  if (spec.epsilons.empty()) throw std::invalid_argument("config: epsilon sweep list is empty");
  for (double e : spec.epsilons)
    if (!(e > 0.0))
      throw std::invalid_argument("config: epsilon must be positive, got " + format_double(e));
  if (spec.loss_probs.empty()) throw std::invalid_argument("config: loss sweep list is empty");
  for (double p : spec.loss_probs)
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("config: loss probability must be in [0,1], got " +
                                  format_double(p));
  if (spec.loss_model != "bernoulli" && spec.loss_model != "burst")
    throw std::invalid_argument("config: loss_model must be bernoulli or burst");
  if (spec.loss_model == "burst" && spec.burst_cap < 1)
    throw std::invalid_argument("config: burst_cap must be >= 1");
  if (spec.base.max_iters < 1) throw std::invalid_argument("config: max_iters must be >= 1");
  if (!(spec.base.hessian_floor > 0.0))
    throw std::invalid_argument("config: hessian_floor must be > 0");
  if (spec.cost == "binomial_deviance") {
    if (spec.feature_columns.empty())
      throw std::invalid_argument("config: feature_columns must not be empty");
    resolve_dataset_path(spec);  // throws when no path is available
  }
}

std::string cell_csv_name(double epsilon, double loss_prob) {
  return "trace_eps" + format_double(epsilon) + "_p" + format_double(loss_prob) + ".csv";
}

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (k, log10 mse)
};

// Minimal SVG overlay of log10-MSE curves. A convenience artifact only; no
// test or tool reads it back.
void write_mse_svg(const std::vector<PlotSeries>& series, const std::string& path) {
  const double width = 860, height = 520;
  const double ml = 70, mr = 170, mt = 20, mb = 50;
  double xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!any) {
        ymin = ymax = y;
        any = true;
      }
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!any) return;
  if (ymax - ymin < 1e-9) ymax = ymin + 1.0;
  const auto px = [&](double x) { return ml + (width - ml - mr) * x / xmax; };
  const auto py = [&](double y) {
    return mt + (height - mt - mb) * (ymax - y) / (ymax - ymin);
  };
  static const char* palette[] = {"#c62828", "#1565c0", "#2e7d32", "#6a1b9a",
                                  "#ef6c00", "#00838f", "#558b2f", "#4e342e"};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_mse_svg: cannot open " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  out << "<rect x='" << ml << "' y='" << mt << "' width='" << (width - ml - mr) << "' height='"
      << (height - mt - mb) << "' fill='none' stroke='black'/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double xv = xmax * t / 5.0;
    const double yv = ymin + (ymax - ymin) * t / 5.0;
    out << "<text x='" << px(xv) << "' y='" << (height - mb + 18)
        << "' font-size='11' text-anchor='middle'>" << format_double(std::round(xv)) << "</text>\n";
    out << "<text x='" << (ml - 8) << "' y='" << (py(yv) + 4)
        << "' font-size='11' text-anchor='end'>" << format_double(std::round(yv * 100) / 100)
        << "</text>\n";
  }
  out << "<text x='" << (ml + (width - ml - mr) / 2) << "' y='" << (height - 10)
      << "' font-size='12' text-anchor='middle'>iteration k</text>\n";
  out << "<text x='16' y='" << (mt + (height - mt - mb) / 2)
      << "' font-size='12' text-anchor='middle' transform='rotate(-90 16 "
      << (mt + (height - mt - mb) / 2) << ")'>log10 MSE</text>\n";
  int idx = 0;
  for (const auto& s : series) {
    const char* color = palette[idx % 8];
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.3' points='";
    for (const auto& [x, y] : s.points) out << px(x) << ',' << py(y) << ' ';
    out << "'/>\n";
    out << "<text x='" << (width - mr + 10) << "' y='" << (mt + 16 + 16 * idx)
        << "' font-size='12' fill='" << color << "'>" << s.label << "</text>\n";
    ++idx;
  }
  out << "</svg>\n";
}

}  // namespace

ExperimentSpec parse_config_text(const std::string& text,
                                 const std::map<std::string, std::string>& overrides) {
  std::map<std::string, std::string> kv = parse_key_values(text);
  for (const auto& [key, value] : overrides) {
    if (!known_keys().count(key))
      throw std::invalid_argument("config: unknown key '" + key + "'");
    kv[key] = value;
  }
  ExperimentSpec spec = spec_from_kv(kv);
  validate_spec(spec);
  return spec;
}

ExperimentSpec parse_config(const std::string& path,
                            const std::map<std::string, std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), overrides);
}

std::string spec_to_config_text(const ExperimentSpec& spec) {
  std::ostringstream out;
  const auto list = [](const auto& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) s += ",";
      if constexpr (std::is_same_v<std::decay_t<decltype(values[i])>, double>)
        s += format_double(values[i]);
      else
        s += std::to_string(values[i]);
    }
    return s;
  };
  out << "cost = " << spec.cost << "\n";
  out << "nodes = " << spec.nodes << "\n";
  if (!spec.graph_file.empty()) out << "graph_file = " << spec.graph_file << "\n";
  else out << "radius = " << format_double(spec.radius) << "\n";
  out << "graph_seed = " << spec.graph_seed << "\n";
  if (spec.cost == "quadratic") {
    out << "dimension = " << spec.dimension << "\n";
    out << "cond_max = " << format_double(spec.cond_max) << "\n";
    out << "quad_seed = " << spec.quad_seed << "\n";
  } else {
    out << "dataset = " << resolve_dataset_path(spec) << "\n";
    out << "feature_columns = " << list(spec.feature_columns) << "\n";
    out << "gamma = " << format_double(spec.gamma) << "\n";
    out << "partition_seed = " << spec.partition_seed << "\n";
    out << "balanced = " << (spec.balanced ? 1 : 0) << "\n";
    out << "standardize = " << (spec.standardize ? 1 : 0) << "\n";
  }
  out << "epsilon = " << list(spec.epsilons) << "\n";
  out << "loss = " << list(spec.loss_probs) << "\n";
  out << "loss_model = " << spec.loss_model << "\n";
  if (spec.loss_model == "burst") out << "burst_cap = " << spec.burst_cap << "\n";
  out << "activation = "
      << (spec.base.activation == ActivationPolicy::RoundRobin ? "round_robin" : "uniform")
      << "\n";
  out << "activation_seed = " << spec.base.activation_seed << "\n";
  out << "loss_seed = " << spec.base.loss_seed << "\n";
  out << "max_iters = " << spec.base.max_iters << "\n";
  out << "hessian_floor = " << format_double(spec.base.hessian_floor) << "\n";
  out << "variant = "
      << (spec.base.variant == DescentVariant::NewtonRaphson
              ? "newton"
              : spec.base.variant == DescentVariant::Jacobi ? "jacobi" : "gradient")
      << "\n";
  if (spec.base.x0.size() != 0) {
    out << "x0 = ";
    for (long i = 0; i < spec.base.x0.size(); ++i)
      out << (i ? "," : "") << format_double(spec.base.x0[i]);
    out << "\n";
  }
  if (spec.base.snapshot_stride > 0)
    out << "snapshot_stride = " << spec.base.snapshot_stride << "\n";
  out << "divergence_mse = " << format_double(spec.base.divergence_mse) << "\n";
  out << "out_dir = " << spec.out_dir << "\n";
  out << "plot = " << (spec.plot ? 1 : 0) << "\n";
  return out.str();
}

std::string resolve_dataset_path(const ExperimentSpec& spec) {
  if (!spec.dataset.empty()) return spec.dataset;
  if (const char* env = std::getenv("RANRC_DATA"); env && *env) return env;
  throw std::invalid_argument(
      "config: cost = binomial_deviance needs a dataset path (set the dataset key or the "
      "RANRC_DATA environment variable)");
}

ExperimentProblem build_problem(const ExperimentSpec& spec) {
  validate_spec(spec);
  DirectedGraph graph = spec.graph_file.empty()
                            ? generate_connected_geometric(spec.nodes, spec.radius, spec.graph_seed)
                            : load_edge_list(spec.graph_file);
  if (!is_strongly_connected(graph))
    throw std::invalid_argument("config: topology in " + spec.graph_file +
                                " is not strongly connected");

  std::vector<std::shared_ptr<const CostModel>> models;
  if (spec.cost == "quadratic") {
    models = make_random_quadratics(graph.node_count(), spec.dimension, spec.cond_max,
                                    spec.quad_seed);
  } else {
    Dataset data = load_spambase(resolve_dataset_path(spec), spec.feature_columns);
    if (spec.standardize) standardize_features(data);
    const auto parts = partition_dataset(
        data, graph.node_count(), spec.partition_seed,
        spec.balanced ? PartitionMode::Balanced : PartitionMode::IidUniform);
    for (const auto& part : parts) {
      Eigen::MatrixXd features(static_cast<long>(part.size()), data.features.cols());
      Eigen::VectorXd labels(static_cast<long>(part.size()));
      for (std::size_t r = 0; r < part.size(); ++r) {
        features.row(static_cast<long>(r)) = data.features.row(part[r]);
        labels[static_cast<long>(r)] = data.labels[part[r]];
      }
      models.push_back(std::make_shared<BinomialDevianceCost>(std::move(features),
                                                              std::move(labels), spec.gamma));
    }
  }
  return ExperimentProblem{std::move(graph), std::move(models)};
}

bool ExperimentResult::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const ExperimentCell& c) { return c.ok; });
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  namespace fs = std::filesystem;
  validate_spec(spec);
  fs::create_directories(spec.out_dir);

  const ExperimentProblem problem = build_problem(spec);
  const int dim = problem.models.front()->dimension();
  const Eigen::VectorXd x0 =
      spec.base.x0.size() == 0 ? Eigen::VectorXd::Zero(dim) : spec.base.x0;

  ExperimentResult result;
  result.out_dir = spec.out_dir;
  result.x_star = centralized_newton(problem.models, x0);

  save_edge_list(problem.graph, (fs::path(spec.out_dir) / "graph.txt").string());
  {
    std::ofstream out(fs::path(spec.out_dir) / "resolved.ini");
    out << spec_to_config_text(spec);
  }

  std::vector<PlotSeries> series;
  for (double epsilon : spec.epsilons) {
    for (double loss_prob : spec.loss_probs) {
      SimConfig cfg = spec.base;
      cfg.epsilon = epsilon;
      cfg.loss = spec.loss_model == "burst" ? LossModel::burst(loss_prob, spec.burst_cap)
                                            : LossModel::bernoulli(loss_prob);
      ExperimentCell cell;
      cell.epsilon = epsilon;
      cell.loss_prob = loss_prob;
      cell.csv_path = (fs::path(spec.out_dir) / cell_csv_name(epsilon, loss_prob)).string();
      try {
        const Trace trace = run_simulation(problem.graph, problem.models, cfg, result.x_star);
        save_trace_csv(trace, cell.csv_path);
        cell.ok = true;
        cell.summary = trace.summary;
        if (spec.plot) {
          PlotSeries ps;
          ps.label = "eps=" + format_double(epsilon) + " p=" + format_double(loss_prob);
          const std::size_t stride = std::max<std::size_t>(1, trace.records.size() / 1500);
          for (std::size_t idx = 0; idx < trace.records.size(); idx += stride)
            ps.points.emplace_back(
                trace.records[idx].k,
                std::log10(std::max(trace.records[idx].mse, 1e-300)));
          series.push_back(std::move(ps));
        }
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
      result.cells.push_back(std::move(cell));
    }
  }

  {
    std::ofstream out(fs::path(spec.out_dir) / "summary.txt");
    out << "cost " << spec.cost << "\n";
    out << "nodes " << problem.graph.node_count() << "\n";
    out << "edges " << problem.graph.edge_count() << "\n";
    out << "x_star";
    for (long i = 0; i < result.x_star.size(); ++i) out << ' ' << format_double(result.x_star[i]);
    out << "\n";
    out << "activation_seed " << spec.base.activation_seed << "\n";
    out << "loss_seed " << spec.base.loss_seed << "\n";
    out << "graph_seed " << spec.graph_seed << "\n\n";
    out << "epsilon loss status iterations final_mse tail_slope tau_hat loss_streak diverged "
           "csv\n";
    for (const ExperimentCell& c : result.cells) {
      out << format_double(c.epsilon) << ' ' << format_double(c.loss_prob) << ' ';
      if (!c.ok) {
        out << "error - - - - - - # " << c.error << "\n";
        continue;
      }
      out << "ok " << c.summary.iterations << ' ' << format_double(c.summary.final_mse) << ' '
          << format_double(c.summary.tail_slope) << ' ' << c.summary.tau_hat << ' '
          << c.summary.loss_streak << ' ' << (c.summary.diverged ? 1 : 0) << ' '
          << fs::path(c.csv_path).filename().string() << "\n";
    }
  }

  if (spec.plot && !series.empty())
    write_mse_svg(series, (fs::path(spec.out_dir) / "plot.svg").string());
  return result;
}

}  // namespace ranrc
