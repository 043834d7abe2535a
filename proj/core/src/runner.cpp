#include "sshg/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sshg/checkpoint.hpp"

namespace sshg {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& field, const std::string& msg) {
  fail(ErrorKind::config, "config field '" + field + "': " + msg);
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) config_error(key, "expected a number");
  return v.get<double>();
}

long long get_integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) config_error(key, "expected an integer");
  return v.get<long long>();
}

int get_int(const json& v, const std::string& key) {
  const long long x = get_integer(v, key);
  if (x < -2147483647 || x > 2147483647) config_error(key, "out of range");
  return static_cast<int>(x);
}

void apply_minmax(MinmaxConfig& m, const json& obj) {
  if (!obj.is_object()) config_error("minmax", "expected an object");
  for (const auto& [key, v] : obj.items()) {
    const std::string f = "minmax." + key;
    if (key == "path_nodes") m.path_nodes = get_int(v, f);
    else if (key == "descent_step") m.descent_step = get_number(v, f);
    else if (key == "backtrack") m.backtrack = get_number(v, f);
    else if (key == "armijo") m.armijo = get_number(v, f);
    else if (key == "grad_tol") m.grad_tol = get_number(v, f);
    else if (key == "newton_tol") m.newton_tol = get_number(v, f);
    else if (key == "max_outer") m.max_outer = get_int(v, f);
    else if (key == "reparam_every") m.reparam_every = get_int(v, f);
    else if (key == "climb_switch") m.climb_switch = get_number(v, f);
    else if (key == "stall_window") m.stall_window = get_int(v, f);
    else if (key == "active_band") m.active_band = get_number(v, f);
    else if (key == "trust_fraction") m.trust_fraction = get_number(v, f);
    else if (key == "r0") m.r0 = get_number(v, f);
    else if (key == "tau") m.tau = get_number(v, f);
    else config_error(f, "unknown key");
  }
}

RunMode parse_mode(const json& v) {
  if (!v.is_string()) config_error("mode", "expected a string");
  const auto s = v.get<std::string>();
  for (RunMode m : {RunMode::spectrum, RunMode::mountain_pass, RunMode::linking, RunMode::multiplicity,
                    RunMode::probe})
    if (s == to_string(m)) return m;
  config_error("mode", "unknown mode '" + s + "'");
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<TraceRow> trace_of(const MinmaxResult& r) {
  std::vector<TraceRow> rows;
  const auto& d = r.diagnostics;
  for (std::size_t i = 0; i < d.size(); ++i) {
    TraceRow row;
    row.iteration = static_cast<int>(i);
    row.j_max = static_cast<int>(i) < r.descent_iterations && i < r.max_trace.size() ? r.max_trace[i]
                                                                                       : d.energies[i];
    row.grad_norm = d.grad_norms[i];
    rows.push_back(row);
  }
  return rows;
}

/// Diagnostics of the refined point as the last iterate of the trace.
void append_final(NamedRecord& rec, const ActionParams& params, const SpectralBasis& basis) {
  const auto cg = constrained_gradient(rec.record.point, params, basis);
  rec.diagnostics.append(rec.record.point, rec.record.level, cg, basis);
}

/// Newton polish of a deformation result when its gradient is small enough.
NamedRecord finish(std::string name, const MinmaxResult& r, const ActionParams& params,
                   const SpectralBasis& basis, const MinmaxConfig& cfg,
                   const OrthogonalityConstraint* ortho = nullptr) {
  NamedRecord out;
  out.name = std::move(name);
  out.record = r.candidate;
  out.diagnostics = r.diagnostics;
  out.trace = trace_of(r);
  if (r.candidate.grad_norm <= 1e-3) {
    try {
      out.record = newton_refine(r.candidate.point, params, basis, cfg.newton_tol, ortho);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::precondition) throw;
    }
  }
  out.converged = out.record.refined;
  if (out.record.refined) append_final(out, params, basis);
  return out;
}

struct Pipeline {
  const RunConfig& cfg;
  const SpectralBasis& basis;
  ActionParams params;
  RunOutput& out;

  void add(NamedRecord rec) {
    if (!rec.converged) {
      out.converged = false;
      out.notes.push_back(rec.name + ": deformation budget exhausted; flagged candidate written");
    }
    out.records.push_back(std::move(rec));
  }

  void probe() {
    const auto t0 = Clock::now();
    out.probe_margin = coercivity_probe(params, basis, cfg.minmax.r0, cfg.minmax.tau, cfg.probe_samples,
                                        cfg.seed);
    out.timings.emplace_back("probe", seconds_since(t0));
  }

  Endpoint mountain_pass() {
    const auto t0 = Clock::now();
    MinmaxConfig m = cfg.minmax;
    m.mode = MinmaxMode::mountain_pass;
    Endpoint ep = mountain_pass_endpoint(params, basis);
    const auto r = minmax_deform(build_path(ep.point, m.path_nodes, params, basis), m, params, basis);
    add(finish("c1", r, params, basis, m));
    out.c1 = out.records.back().record.level;
    out.timings.emplace_back("mountain_pass", seconds_since(t0));
    return ep;
  }

  LinkingConstants linking() {
    const auto t0 = Clock::now();
    MinmaxConfig m = cfg.minmax;
    m.mode = MinmaxMode::linking;
    const auto c = linking_constants(params, basis);
    out.linking = c;
    const auto r = minmax_deform(build_cylinder(c, {}, params, basis), m, params, basis);
    add(finish("c1", r, params, basis, m));
    out.c1 = out.records.back().record.level;
    out.timings.emplace_back("linking", seconds_since(t0));
    return c;
  }

  void multiplicity(bool case_one) {
    const auto& geom = basis.geometry();
    const auto chi = build_sweepout_chi(geom, cfg.epsilon_fraction * geom.volume());
    MinmaxConfig m = cfg.minmax;
    if (case_one) {
      const Endpoint ep = mountain_pass();
      auto t0 = Clock::now();
      const auto family = equivariant_family(ep.u_bar, ep.s, chi, params, basis, cfg.n_theta);
      for (std::size_t i = 0; i < family.size(); ++i) out.theta_sweep.emplace_back(family.theta[i], family.energies[i]);
      if (family.retries > 0) out.notes.push_back("family certified after " + std::to_string(family.retries) + " retries");
      out.timings.emplace_back("family", seconds_since(t0));

      t0 = Clock::now();
      const auto disk = minmax_deform(build_disk(family, cfg.n_radial, params, basis), m, params, basis);
      add(finish("c2", disk, params, basis, m));
      out.c2 = out.records.back().record.level;
      out.timings.emplace_back("disk", seconds_since(t0));

      if (std::abs(*out.c2 - *out.c1) <= 1e-6) {
        t0 = Clock::now();
        MinmaxConfig rm = m;
        rm.path_nodes = cfg.restart_path_nodes;
        const auto rs = orthogonal_restart(out.records.front().record.point.u, family, rm, params, basis);
        NamedRecord rec;
        rec.name = "restart";
        rec.record = rs.record;
        rec.diagnostics = rs.minmax.diagnostics;
        rec.trace = trace_of(rs.minmax);
        rec.converged = rs.record.refined;
        if (rec.converged) append_final(rec, params, basis);
        add(std::move(rec));
        out.theta0 = rs.theta0;
        out.restart_inner_product = rs.inner_product;
        out.timings.emplace_back("orthogonal_restart", seconds_since(t0));
      }
    } else {
      const auto c = linking();
      const auto t0 = Clock::now();
      m.mode = MinmaxMode::linking;
      const auto mesh = build_product_disk(c, chi, cfg.n_theta, cfg.n_radial, cfg.n_shells, params, basis);
      add(finish("c2", minmax_deform(mesh, m, params, basis), params, basis, m));
      out.c2 = out.records.back().record.level;
      out.timings.emplace_back("product_disk", seconds_since(t0));
      if (std::abs(*out.c2 - *out.c1) <= 1e-6)
        out.notes.push_back("c2 equals c1 and no orthogonal restart exists for the product set");
    }
    const auto& first = out.records.front().record;
    for (std::size_t i = 1; i < out.records.size(); ++i)
      if (out.records[i].converged && out.records.front().converged &&
          geometrically_distinct(first, out.records[i].record, basis))
        out.distinct = true;
  }
};

// Minimal JSON emitter: every double is written with 17 significant digits.
std::string num(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string str(const std::string& s) { return json(s).dump(); }

std::string num_array(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s + "]";
}

std::string opt(const std::optional<double>& x) { return x ? num(*x) : "null"; }

class Obj {
 public:
  Obj& field(const std::string& key, const std::string& raw) {
    body_ += (body_.empty() ? "" : ",") + str(key) + ":" + raw;
    return *this;
  }
  std::string done() const { return "{" + body_ + "}"; }

 private:
  std::string body_;
};

std::string config_json(const RunConfig& c) {
  const auto& m = c.minmax;
  Obj mm;
  mm.field("path_nodes", std::to_string(m.path_nodes))
      .field("descent_step", num(m.descent_step))
      .field("backtrack", num(m.backtrack))
      .field("armijo", num(m.armijo))
      .field("grad_tol", num(m.grad_tol))
      .field("newton_tol", num(m.newton_tol))
      .field("max_outer", std::to_string(m.max_outer))
      .field("reparam_every", std::to_string(m.reparam_every))
      .field("climb_switch", num(m.climb_switch))
      .field("stall_window", std::to_string(m.stall_window))
      .field("active_band", num(m.active_band))
      .field("trust_fraction", num(m.trust_fraction))
      .field("r0", num(m.r0))
      .field("tau", num(m.tau));
  Obj o;
  o.field("side_length", num(c.geometry.side_length))
      .field("grid_n", std::to_string(c.geometry.grid_n))
      .field("spin_delta", num_array({c.geometry.spin_delta[0], c.geometry.spin_delta[1]}));
  if (c.rho) o.field("rho", num(*c.rho));
  if (c.mu) o.field("mu", num(*c.mu));
  if (c.b) o.field("b", num(*c.b));
  o.field("mode", str(to_string(c.mode)))
      .field("output_dir", str(c.output_dir))
      .field("seed", std::to_string(c.seed))
      .field("n_theta", std::to_string(c.n_theta))
      .field("n_radial", std::to_string(c.n_radial))
      .field("n_shells", std::to_string(c.n_shells))
      .field("epsilon_fraction", num(c.epsilon_fraction))
      .field("restart_path_nodes", std::to_string(c.restart_path_nodes))
      .field("probe_samples", std::to_string(c.probe_samples))
      .field("minmax", mm.done());
  return o.done();
}

std::string record_json(const NamedRecord& n) {
  const auto& r = n.record;
  const auto& d = n.diagnostics;
  std::vector<double> un, pn;
  for (const auto& [a, b] : d.norms_trace) {
    un.push_back(a);
    pn.push_back(b);
  }
  Obj diag;
  diag.field("alpha", num_array(d.alpha))
      .field("beta", num_array(d.beta))
      .field("multiplier_norm", num_array(d.multiplier_norm))
      .field("energies", num_array(d.energies))
      .field("grad_norms", num_array(d.grad_norms))
      .field("u_norms", num_array(un))
      .field("psi_norms", num_array(pn))
      .field("bounded", d.bounded ? "true" : "false");
  Obj o;
  o.field("name", str(n.name))
      .field("level", num(r.level))
      .field("res_u", num(r.res_u))
      .field("res_psi", num(r.res_psi))
      .field("classification", str(to_string(r.classification)))
      .field("u_variance", num(r.u_variance))
      .field("u_norm", num(r.u_norm))
      .field("psi_norm", num(r.psi_norm))
      .field("multiplier_norm", num(r.multiplier_norm))
      .field("grad_norm", num(r.grad_norm))
      .field("refined", r.refined ? "true" : "false")
      .field("newton_steps", std::to_string(r.newton_steps))
      .field("converged", n.converged ? "true" : "false")
      .field("ps_diagnostics", diag.done());
  return o.done();
}

void write_csv(const std::filesystem::path& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::string s = header + "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + r[i];
    s += "\n";
  }
  write_file_atomic(path, s);
}

}  // namespace

const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::spectrum: return "spectrum";
    case RunMode::mountain_pass: return "mountain_pass";
    case RunMode::linking: return "linking";
    case RunMode::multiplicity: return "multiplicity";
    case RunMode::probe: return "probe";
  }
  return "unknown";
}

double RunConfig::coupling() const {
  if (rho) return *rho;
  return rho_from_physics(*mu, *b);
}

void RunConfig::validate() const {
  const bool has_rho = rho.has_value();
  const bool has_mu_b = mu.has_value() || b.has_value();
  if (has_rho == has_mu_b) config_error("rho", "give exactly one of rho or (mu, b)");
  if (has_mu_b && !(mu && b)) config_error(mu ? "b" : "mu", "mu and b must be given together");
  if (has_rho && !(*rho > 0.0)) config_error("rho", "must be positive");
  if (mu && !(*mu > 0.0)) config_error("mu", "must be positive");
  if (b && !(*b > 0.0)) config_error("b", "must be positive");
  if (!(geometry.side_length > 0.0)) config_error("side_length", "must be positive");
  try {
    geometry.validate();
  } catch (const Error& e) {
    fail(e.kind(), std::string("config field 'grid_n'/'spin_delta': ") + e.what());
  }
  try {
    minmax.validate();
  } catch (const Error& e) {
    fail(ErrorKind::config, std::string("config field 'minmax': ") + e.what());
  }
  if (n_theta < 32 || n_theta % 2 != 0) config_error("n_theta", "must be even and at least 32");
  if (n_radial < 2) config_error("n_radial", "must be at least 2");
  if (n_shells < 1) config_error("n_shells", "must be at least 1");
  if (!(epsilon_fraction > 0.0 && epsilon_fraction < 0.25)) config_error("epsilon_fraction", "must lie in (0, 1/4)");
  if (restart_path_nodes < 5 || restart_path_nodes % 2 == 0)
    config_error("restart_path_nodes", "must be odd and at least 5");
  if (probe_samples < 1) config_error("probe_samples", "must be positive");
  if (output_dir.empty()) config_error("output_dir", "must not be empty");
}

RunConfig parse_run_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::config, "config must be a JSON object");
  RunConfig c;
  bool mode_seen = false;
  for (const auto& [key, v] : doc.items()) {
    if (key == "side_length") c.geometry.side_length = get_number(v, key);
    else if (key == "grid_n") c.geometry.grid_n = get_int(v, key);
    else if (key == "spin_delta") {
      if (!v.is_array() || v.size() != 2) config_error(key, "expected [delta_1, delta_2]");
      c.geometry.spin_delta = {get_number(v[0], key), get_number(v[1], key)};
    } else if (key == "rho") c.rho = get_number(v, key);
    else if (key == "mu") c.mu = get_number(v, key);
    else if (key == "b") c.b = get_number(v, key);
    else if (key == "mode") {
      c.mode = parse_mode(v);
      mode_seen = true;
    } else if (key == "output_dir") {
      if (!v.is_string()) config_error(key, "expected a string");
      c.output_dir = v.get<std::string>();
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) config_error(key, "expected a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (key == "n_theta") c.n_theta = get_int(v, key);
    else if (key == "n_radial") c.n_radial = get_int(v, key);
    else if (key == "n_shells") c.n_shells = get_int(v, key);
    else if (key == "epsilon_fraction") c.epsilon_fraction = get_number(v, key);
    else if (key == "restart_path_nodes") c.restart_path_nodes = get_int(v, key);
    else if (key == "probe_samples") c.probe_samples = get_int(v, key);
    else if (key == "minmax") apply_minmax(c.minmax, v);
    else config_error(key, "unknown key");
  }
  if (!mode_seen) config_error("mode", "required");
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::config, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

RunOutput run(const RunConfig& config) {
  config.validate();
  const auto t_start = Clock::now();
  RunOutput out;
  out.config = config;
  out.rho = config.coupling();

  auto t0 = Clock::now();
  const auto basis = build_basis(config.geometry);
  out.harmonic_dim = basis.harmonic_dim();
  const auto entries = basis.entries();
  for (std::size_t i = 0; i < entries.size() && i < 40; ++i) out.eigenvalues.push_back(entries[i].lambda);
  const auto distinct = basis.distinct_positive();
  for (std::size_t i = 0; i < distinct.size() && i < 10; ++i) out.distinct_positive.push_back(distinct[i]);
  out.timings.emplace_back("basis", seconds_since(t0));

  Pipeline p{config, basis, ActionParams{out.rho}, out};
  const double lambda1 = basis.eigenvalue(1);
  const bool case_one = basis.harmonic_dim() == 0 && out.rho < lambda1;

  switch (config.mode) {
    case RunMode::spectrum:
      break;
    case RunMode::probe:
      basis.require_gap(out.rho);
      p.probe();
      break;
    case RunMode::mountain_pass:
      basis.require_gap(out.rho);
      if (!case_one)
        fail(ErrorKind::config, "config field 'mode': mountain_pass needs h = 0 and rho below lambda_1 = " +
                                    num(lambda1) + "; use linking");
      p.probe();
      p.mountain_pass();
      break;
    case RunMode::linking:
      basis.require_gap(out.rho);
      if (case_one)
        fail(ErrorKind::config, "config field 'mode': linking needs h > 0 or rho above lambda_1 = " +
                                    num(lambda1) + "; use mountain_pass");
      p.probe();
      p.linking();
      break;
    case RunMode::multiplicity:
      basis.require_gap(out.rho);
      p.multiplicity(case_one);
      break;
  }
  out.timings.emplace_back("total", seconds_since(t_start));
  return out;
}

std::string to_json(const RunOutput& o) {
  std::string recs = "[";
  for (std::size_t i = 0; i < o.records.size(); ++i) recs += (i ? "," : "") + record_json(o.records[i]);
  recs += "]";

  Obj spectrum;
  std::string distinct = "[";
  for (std::size_t i = 0; i < o.distinct_positive.size(); ++i) {
    Obj d;
    d.field("lambda", num(o.distinct_positive[i].first))
        .field("multiplicity", std::to_string(o.distinct_positive[i].second));
    distinct += (i ? "," : "") + d.done();
  }
  spectrum.field("harmonic_dim", std::to_string(o.harmonic_dim))
      .field("eigenvalues", num_array(o.eigenvalues))
      .field("distinct_positive", distinct + "]");

  Obj levels;
  levels.field("c1", opt(o.c1)).field("c2", opt(o.c2));

  std::string linking = "null";
  if (o.linking) {
    const auto& c = *o.linking;
    Obj l;
    l.field("T", num(c.T))
        .field("A", num(c.A))
        .field("R", num(c.R))
        .field("k_index", std::to_string(c.k_index))
        .field("K", std::to_string(c.K))
        .field("lambda_k", num(c.lambda_k))
        .field("lambda_k1", num(c.lambda_k1))
        .field("side_max", num(c.side_max));
    linking = l.done();
  }

  Obj mult;
  if (o.config.mode == RunMode::multiplicity) {
    std::vector<double> th, jj;
    for (const auto& [t, j] : o.theta_sweep) {
      th.push_back(t);
      jj.push_back(j);
    }
    mult.field("theta", num_array(th))
        .field("family_energy", num_array(jj))
        .field("theta0", opt(o.theta0))
        .field("restart_inner_product", opt(o.restart_inner_product))
        .field("distinct", o.distinct ? "true" : "false");
  }

  Obj timings;
  for (const auto& [k, v] : o.timings) timings.field(k, num(v));

  std::string cps = "[", notes = "[";
  for (std::size_t i = 0; i < o.checkpoints.size(); ++i) cps += (i ? "," : "") + str(o.checkpoints[i]);
  for (std::size_t i = 0; i < o.notes.size(); ++i) notes += (i ? "," : "") + str(o.notes[i]);

  Obj root;
  root.field("config", config_json(o.config))
      .field("rho", num(o.rho))
      .field("spectrum", spectrum.done())
      .field("levels", levels.done())
      .field("probe_margin", opt(o.probe_margin))
      .field("linking", linking)
      .field("records", recs)
      .field("multiplicity", mult.done())
      .field("converged", o.converged ? "true" : "false")
      .field("timings", timings.done())
      .field("checkpoints", cps + "]")
      .field("notes", notes + "]");
  return root.done() + "\n";
}

void write_outputs(RunOutput& o, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::internal, "cannot create output directory " + dir.string());

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < o.eigenvalues.size(); ++i)
    rows.push_back({std::to_string(i), num(o.eigenvalues[i])});
  write_csv(dir / "spectrum.csv", "index,lambda", rows);

  for (const auto& r : o.records) {
    rows.clear();
    for (const auto& t : r.trace) rows.push_back({std::to_string(t.iteration), num(t.j_max), num(t.grad_norm)});
    const std::string name = r.name == "c1" ? "energy_trace.csv" : "energy_trace_" + r.name + ".csv";
    write_csv(dir / name, "iteration,J_max,grad_norm", rows);
  }

  if (!o.theta_sweep.empty()) {
    rows.clear();
    for (const auto& [t, j] : o.theta_sweep) rows.push_back({num(t), num(j)});
    write_csv(dir / "theta_sweep.csv", "theta,J", rows);
  }

  o.checkpoints.clear();
  if (!o.records.empty()) {
    CheckpointState state;
    state.geometry = o.config.geometry;
    state.rho = o.rho;
    for (const auto& r : o.records) state.points.push_back(r.record.point);
    checkpoint_save(state, dir / "solutions.sshg");
    o.checkpoints.push_back("solutions.sshg");
  }
  write_file_atomic(dir / "run.json", to_json(o));
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::spectral_gap:
    case ErrorKind::resolution:
    case ErrorKind::parameter:
      return 2;
    case ErrorKind::capacity:
      return 3;
    default:
      return 1;
  }
}

}  // namespace sshg
