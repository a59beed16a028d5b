#include "randfront/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "randfront/kpp.hpp"
#include "randfront/util.hpp"

namespace randfront {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
    return v.substr(1, v.size() - 2);
  return v;
}

double to_double(const std::string& v, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (...) {
    throw std::invalid_argument("config: bad number for " + where + ": '" + v + "'");
  }
}

long long to_int(const std::string& v, const std::string& where) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (...) {
    throw std::invalid_argument("config: bad integer for " + where + ": '" + v + "'");
  }
}

std::vector<double> to_double_list(const std::string& v, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(unquote(v));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(to_double(tok, where));
  }
  if (out.empty()) throw std::invalid_argument("config: empty list for " + where);
  return out;
}

std::vector<long> to_long_list(const std::string& v, const std::string& where) {
  std::vector<long> out;
  for (double d : to_double_list(v, where)) out.push_back(static_cast<long>(d));
  return out;
}

std::string ic_to_string(const InitialCondition& ic) {
  switch (ic.kind) {
    case InitialKind::heaviside: return "heaviside";
    case InitialKind::box: return "box";
    case InitialKind::scaled_heaviside: return "scaled_heaviside";
  }
  return "?";
}

InitialKind ic_from_string(const std::string& s) {
  if (s == "heaviside") return InitialKind::heaviside;
  if (s == "box") return InitialKind::box;
  if (s == "scaled_heaviside") return InitialKind::scaled_heaviside;
  throw std::invalid_argument("config: unknown initial condition '" + s + "'");
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out = "\"";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out + "\"";
}

std::string join_longs(const std::vector<long>& v) {
  std::string out = "\"";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out + "\"";
}

struct Binding {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Full key table: section.key -> typed accessors. Parsing rejects anything
// not listed here.
const std::map<std::string, Binding>& bindings() {
  static const std::map<std::string, Binding> table = [] {
    std::map<std::string, Binding> t;
    auto num = [&](const std::string& path, auto member) {
      t[path] = Binding{[member, path](RunConfig& c, const std::string& v) {
                          c.*member = to_double(v, path);
                        },
                        [member](const RunConfig& c) { return format_double(c.*member); }};
    };
    (void)num;

    auto def = [&](const std::string& path, auto setter, auto getter) {
      t[path] = Binding{setter, getter};
    };

    def("output_dir",
        [](RunConfig& c, const std::string& v) { c.output_dir = unquote(v); },
        [](const RunConfig& c) { return "\"" + c.output_dir + "\""; });
    def("base_seed",
        [](RunConfig& c, const std::string& v) {
          c.base_seed = static_cast<std::uint64_t>(to_int(v, "base_seed"));
        },
        [](const RunConfig& c) { return std::to_string(c.base_seed); });

    // [potential]
    def("potential.kind",
        [](RunConfig& c, const std::string& v) {
          c.potential.kind = potential_kind_from_string(unquote(v));
        },
        [](const RunConfig& c) { return "\"" + to_string(c.potential.kind) + "\""; });
#define RF_NUM(path, target)                                                     \
  def(path,                                                                      \
      [](RunConfig& c, const std::string& v) { c.target = to_double(v, path); }, \
      [](const RunConfig& c) { return format_double(c.target); })
#define RF_INT(path, target, type)                                                       \
  def(path,                                                                              \
      [](RunConfig& c, const std::string& v) { c.target = static_cast<type>(to_int(v, path)); }, \
      [](const RunConfig& c) { return std::to_string(c.target); })
    RF_NUM("potential.ei", potential.ei);
    RF_NUM("potential.es", potential.es);
    RF_NUM("potential.a", potential.bump_amplitude);
    RF_NUM("potential.epsilon", potential.mollifier_width);
    RF_NUM("potential.kernel_radius", potential.kernel_radius);
    RF_NUM("potential.cell_size", potential.cell_size);
    RF_INT("potential.seed", potential.seed, std::uint64_t);

    // [bvp]
    RF_NUM("bvp.dx", bvp.dx);
    RF_NUM("bvp.right_margin", bvp.right_margin);
    RF_NUM("bvp.eta_fd_step", bvp.eta_fd_step);
    RF_NUM("bvp.k_win", bvp.k_win);
    RF_NUM("bvp.pde_dx", bvp.pde_dx);
    RF_NUM("bvp.pde_dt", bvp.pde_dt);

    // [lyapunov]
    RF_NUM("lyapunov.eta_min", lyapunov.eta_min);
    RF_NUM("lyapunov.eta_max", lyapunov.eta_max);
    RF_INT("lyapunov.eta_points", lyapunov.eta_points, long);
    RF_INT("lyapunov.n_env", lyapunov.n_env, long);
    RF_INT("lyapunov.n_units", lyapunov.n_units, long);
    RF_INT("lyapunov.sigma_env", lyapunov.sigma_env, long);
    RF_INT("lyapunov.lag_cutoff", lyapunov.lag_cutoff, long);
    RF_NUM("lyapunov.v_lo_factor", lyapunov.v_lo_factor);
    RF_NUM("lyapunov.v_hi_factor", lyapunov.v_hi_factor);
    RF_INT("lyapunov.v_points", lyapunov.v_points, long);
    RF_INT("lyapunov.jobs", lyapunov.jobs, unsigned);

    // [pam]
    RF_NUM("pam.dx", pam.grid.dx);
    RF_NUM("pam.dt", pam.grid.dt);
    RF_NUM("pam.window_left", pam.grid.window_left);
    RF_NUM("pam.window_right", pam.grid.window_right);
    RF_NUM("pam.snapshot_dt", pam.grid.snapshot_dt);
    RF_NUM("pam.track_level", pam.grid.track_level);
    RF_NUM("pam.horizon", pam.horizon);
    RF_NUM("pam.threshold_a", pam.threshold_a);
    RF_NUM("pam.delta_prime", pam.ic.delta_prime);
    RF_NUM("pam.c_prime", pam.ic.c_prime);
    def("pam.ic",
        [](RunConfig& c, const std::string& v) { c.pam.ic.kind = ic_from_string(unquote(v)); },
        [](const RunConfig& c) { return "\"" + ic_to_string(c.pam.ic) + "\""; });

    // [kpp]
    RF_NUM("kpp.dx", kpp.grid.dx);
    RF_NUM("kpp.dt", kpp.grid.dt);
    RF_NUM("kpp.window_left", kpp.grid.window_left);
    RF_NUM("kpp.window_right", kpp.grid.window_right);
    RF_NUM("kpp.snapshot_dt", kpp.grid.snapshot_dt);
    RF_NUM("kpp.track_level", kpp.grid.track_level);
    RF_NUM("kpp.horizon", kpp.horizon);
    RF_NUM("kpp.threshold_eps", kpp.threshold_eps);
    RF_NUM("kpp.delta_prime", kpp.ic.delta_prime);
    RF_NUM("kpp.c_prime", kpp.ic.c_prime);
    def("kpp.ic",
        [](RunConfig& c, const std::string& v) { c.kpp.ic.kind = ic_from_string(unquote(v)); },
        [](const RunConfig& c) { return "\"" + ic_to_string(c.kpp.ic) + "\""; });
    def("kpp.nonlinearity",
        [](RunConfig& c, const std::string& v) { c.kpp.nonlinearity = unquote(v); },
        [](const RunConfig& c) { return "\"" + c.kpp.nonlinearity + "\""; });

    // [bbmre]
    def("bbmre.law",
        [](RunConfig& c, const std::string& v) { c.bbmre.law = unquote(v); },
        [](const RunConfig& c) { return "\"" + c.bbmre.law + "\""; });
    RF_INT("bbmre.cap", bbmre.cap, std::size_t);
    RF_INT("bbmre.reps", bbmre.reps, std::size_t);

    // [experiment]
    def("experiment.name",
        [](RunConfig& c, const std::string& v) { c.experiment.name = unquote(v); },
        [](const RunConfig& c) { return "\"" + c.experiment.name + "\""; });
    RF_INT("experiment.seeds", experiment.seeds, long);
    def("experiment.n_grid",
        [](RunConfig& c, const std::string& v) {
          c.experiment.n_grid = to_long_list(v, "experiment.n_grid");
        },
        [](const RunConfig& c) { return join_longs(c.experiment.n_grid); });
    RF_NUM("experiment.t_min", experiment.t_min);
    RF_NUM("experiment.t_max", experiment.t_max);
    def("experiment.x_grid",
        [](RunConfig& c, const std::string& v) {
          c.experiment.x_grid = to_double_list(v, "experiment.x_grid");
        },
        [](const RunConfig& c) { return join_doubles(c.experiment.x_grid); });
    RF_NUM("experiment.v", experiment.v);
    RF_INT("experiment.jobs", experiment.jobs, unsigned);
#undef RF_NUM
#undef RF_INT
    return t;
  }();
  return table;
}

const std::vector<std::pair<std::string, std::vector<std::string>>>& layout() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> sections = {
      {"", {"output_dir", "base_seed"}},
      {"potential",
       {"kind", "ei", "es", "a", "epsilon", "kernel_radius", "cell_size", "seed"}},
      {"bvp", {"dx", "right_margin", "eta_fd_step", "k_win", "pde_dx", "pde_dt"}},
      {"lyapunov",
       {"eta_min", "eta_max", "eta_points", "n_env", "n_units", "sigma_env",
        "lag_cutoff", "v_lo_factor", "v_hi_factor", "v_points", "jobs"}},
      {"pam",
       {"dx", "dt", "window_left", "window_right", "snapshot_dt", "track_level",
        "horizon", "threshold_a", "ic", "delta_prime", "c_prime"}},
      {"kpp",
       {"dx", "dt", "window_left", "window_right", "snapshot_dt", "track_level",
        "horizon", "threshold_eps", "nonlinearity", "ic", "delta_prime", "c_prime"}},
      {"bbmre", {"law", "cap", "reps"}},
      {"experiment",
       {"name", "seeds", "n_grid", "t_min", "t_max", "x_grid", "v", "jobs"}},
  };
  return sections;
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::string section;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    const std::string path = section.empty() ? key : section + "." + key;
    const auto it = bindings().find(path);
    if (it == bindings().end())
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": unknown key '" + path + "'");
    it->second.set(cfg, value);
    seen.insert(path);
  }
  // reconcile the matern/constant redundancy between es, ei, and a
  if (cfg.potential.kind == PotentialKind::matern_bump && !seen.count("potential.es"))
    cfg.potential.es = cfg.potential.ei + cfg.potential.bump_amplitude;
  if (cfg.potential.kind == PotentialKind::constant && !seen.count("potential.es"))
    cfg.potential.es = cfg.potential.ei;
  if (cfg.potential.kind == PotentialKind::constant && !seen.count("potential.ei"))
    cfg.potential.ei = cfg.potential.es;
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config file: " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  os << "# randfront run configuration\n";
  for (const auto& [section, keys] : layout()) {
    if (!section.empty()) os << "\n[" << section << "]\n";
    for (const auto& key : keys) {
      const std::string path = section.empty() ? key : section + "." + key;
      os << key << " = " << bindings().at(path).get(*this) << "\n";
    }
  }
  return os.str();
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must look like section.key=value: " +
                                assignment);
  const std::string path = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  const auto it = bindings().find(path);
  if (it == bindings().end())
    throw std::invalid_argument("override: unknown key '" + path + "'");
  it->second.set(*this, value);
  if (path == "potential.ei" || path == "potential.a") {
    if (potential.kind == PotentialKind::matern_bump)
      potential.es = potential.ei + potential.bump_amplitude;
    if (potential.kind == PotentialKind::constant) potential.es = potential.ei;
  }
}

void RunConfig::validate() const {
  potential.validate();
  bvp.validate();
  lyapunov.validate();
  pam.grid.validate();
  kpp.grid.validate();
  pam.ic.validate();
  kpp.ic.validate();
  if (!(pam.horizon > 0.0 && kpp.horizon > 0.0))
    throw std::invalid_argument("config: horizons must be positive");
  if (!(pam.threshold_a > 0.0))
    throw std::invalid_argument("config: pam threshold must be positive");
  if (!(kpp.threshold_eps > 0.0 && kpp.threshold_eps < 1.0))
    throw std::invalid_argument("config: kpp threshold must lie in (0,1)");
  if (bbmre.cap < 1 || bbmre.reps < 2)
    throw std::invalid_argument("config: bbmre cap/reps too small");
  (void)OffspringLaw::from_string(bbmre.law);  // throws on malformed laws
  if (kpp.nonlinearity != "logistic" && kpp.nonlinearity.rfind("gm:", 0) != 0 &&
      kpp.nonlinearity.rfind("offspring:", 0) != 0)
    throw std::invalid_argument("config: unknown nonlinearity '" + kpp.nonlinearity +
                                "'");
  if (experiment.seeds < 1)
    throw std::invalid_argument("config: experiment.seeds must be positive");
}

std::uint64_t RunConfig::content_hash() const {
  const std::string text = serialize();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace randfront
