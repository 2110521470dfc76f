#include "irltrack/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "irltrack/errors.hpp"

namespace irltrack {
namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void fail(const std::string& path, const std::string& reason) { throw ConfigError(path + ": " + reason); }

// Object reader that remembers which keys were consumed so leftovers can be
// reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string at(const std::string& key) const { return join(path_, key); }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) out = as_number(*v, at(key));
  }
  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(at(key), "expected true/false");
      out = v->get<bool>();
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void count(const std::string& key, std::size_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) fail(at(key), "expected a non-negative integer");
      out = v->get<std::size_t>();
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown key");
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Eigen::VectorXd parse_vector(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = Reader::as_number(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

Eigen::MatrixXd parse_rows(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < v.size(); ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!v[r].is_array() || v[r].size() != cols) fail(rp, "rows must be arrays of equal length");
    out.row(static_cast<Eigen::Index>(r)) = parse_vector(v[r], rp).transpose();
  }
  return out;
}

// Scalar s -> s I, flat list -> diagonal, nested list -> full matrix.
Eigen::MatrixXd parse_square(const json& v, const std::string& path, Eigen::Index n) {
  if (v.is_number()) return v.get<double>() * Eigen::MatrixXd::Identity(n, n);
  if (v.is_array() && !v.empty() && !v[0].is_array()) {
    const Eigen::VectorXd d = parse_vector(v, path);
    if (d.size() != n) fail(path, "expected " + std::to_string(n) + " diagonal entries");
    return d.asDiagonal();
  }
  Eigen::MatrixXd m = parse_rows(v, path);
  if (m.rows() != n || m.cols() != n) fail(path, "expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
  return m;
}

// Scalar s -> n copies of s, list -> as given (length checked).
Eigen::VectorXd parse_fill(const json& v, const std::string& path, Eigen::Index n) {
  if (v.is_number()) return Eigen::VectorXd::Constant(n, v.get<double>());
  Eigen::VectorXd out = parse_vector(v, path);
  if (out.size() != n) fail(path, "expected " + std::to_string(n) + " entries");
  return out;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json rows_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vector_json(m.row(r).transpose()));
  return a;
}

void parse_plant(const json& j, SimConfig& sim) {
  Reader r(j, "plant");
  if (const json* s = r.find("schedule")) {
    if (!s->is_array() || s->empty()) fail(r.at("schedule"), "expected a non-empty array of segments");
    std::vector<ParameterSchedule::Segment> segs;
    for (std::size_t i = 0; i < s->size(); ++i) {
      Reader sr((*s)[i], "plant.schedule[" + std::to_string(i) + "]");
      ParameterSchedule::Segment seg;
      sr.number("start", seg.start);
      sr.number("mass", seg.params.mass);
      sr.number("spring", seg.params.spring);
      sr.number("damping", seg.params.damping);
      sr.finish();
      segs.push_back(seg);
    }
    try {
      sim.schedule = ParameterSchedule(std::move(segs));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("plant.") + e.what());
    }
  }
  if (const json* x0 = r.find("initial_state")) {
    const Eigen::VectorXd v = parse_vector(*x0, r.at("initial_state"));
    if (v.size() != 2) fail(r.at("initial_state"), "expected [x1, x2]");
    sim.x0 = {v(0), v(1)};
  }
  r.finish();
}

void parse_identifier(const json& j, IdentifierConfig& id) {
  Reader r(j, "identifier");
  r.string("basis", id.basis);
  const IdentifierBasis basis = [&] {
    try {
      return IdentifierBasis::from_id(id.basis);
    } catch (const ConfigError&) {
      fail("identifier.basis", "unknown basis '" + id.basis + "'");
    }
  }();
  r.number("k_f", id.k_f);
  r.number("l_f", id.l_f);
  if (const json* g = r.find("gamma1")) id.gamma1 = parse_square(*g, r.at("gamma1"), basis.regressor_dim());
  r.count("stack_size", id.stack_size);
  r.number("snapshot_period", id.snapshot_period);
  r.boolean("er_enabled", id.er_enabled);
  if (const json* w = r.find("W_init")) id.W_init = parse_rows(*w, r.at("W_init"));
  r.finish();
}

void parse_critic(const json& j, CriticConfig& c) {
  Reader r(j, "critic");
  const Eigen::Index n1 = CriticBasis::spring_damper().size();
  r.number("gamma", c.gains.gamma);
  r.number("T", c.gains.T);
  r.number("alpha", c.gains.alpha);
  r.number("k2", c.gains.k2);
  r.number("l", c.gains.l);
  if (const json* v = r.find("K1")) c.gains.K1 = parse_fill(*v, r.at("K1"), n1);
  if (const json* v = r.find("K2")) c.gains.K2 = parse_square(*v, r.at("K2"), n1);
  if (const json* v = r.find("Q")) c.Q = parse_square(*v, r.at("Q"), 1);
  if (const json* v = r.find("R")) c.R = parse_fill(*v, r.at("R"), 1);
  r.number("u_max", c.u_max);
  if (const json* v = r.find("W_init")) c.W_init = parse_fill(*v, r.at("W_init"), n1);
  r.boolean("limit_switching", c.limit_switching);
  r.finish();
}

void parse_sim(const json& j, SimConfig& sim) {
  Reader r(j, "sim");
  r.number("dt", sim.dt);
  r.number("duration", sim.duration);
  if (const json* s = r.find("seed")) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0))
      fail(r.at("seed"), "expected a non-negative integer");
    sim.seed = s->get<std::uint64_t>();
  }
  if (const json* p = r.find("probe")) {
    Reader pr(*p, "sim.probe");
    pr.boolean("enabled", sim.probe.enabled);
    pr.number("amplitude", sim.probe.amplitude);
    if (const json* f = pr.find("frequencies")) {
      const Eigen::VectorXd v = parse_vector(*f, pr.at("frequencies"));
      sim.probe.frequencies.assign(v.data(), v.data() + v.size());
    }
    pr.number("noise", sim.probe.noise);
    pr.finish();
  }
  r.finish();
}

}  // namespace

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && (x.size() == 0 || x == y);
  };
  const SimConfig& s = a.sim;
  const SimConfig& t = b.sim;
  const auto& ga = s.critic.gains;
  const auto& gb = t.critic.gains;
  return a.name == b.name && a.output == b.output && s.schedule == t.schedule && s.x0 == t.x0 && s.x1d == t.x1d &&
         s.dt == t.dt && s.duration == t.duration && s.probe == t.probe && s.seed == t.seed &&
         s.identifier.basis == t.identifier.basis && s.identifier.k_f == t.identifier.k_f &&
         s.identifier.l_f == t.identifier.l_f && same(s.identifier.gamma1, t.identifier.gamma1) &&
         s.identifier.stack_size == t.identifier.stack_size &&
         s.identifier.snapshot_period == t.identifier.snapshot_period &&
         s.identifier.er_enabled == t.identifier.er_enabled && same(s.identifier.W_init, t.identifier.W_init) &&
         ga.alpha == gb.alpha && ga.k2 == gb.k2 && ga.l == gb.l && same(ga.K1, gb.K1) && same(ga.K2, gb.K2) &&
         ga.gamma == gb.gamma && ga.T == gb.T && same(s.critic.Q, t.critic.Q) && same(s.critic.R, t.critic.R) &&
         s.critic.u_max == t.critic.u_max && same(s.critic.W_init, t.critic.W_init) &&
         s.critic.limit_switching == t.critic.limit_switching;
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  Reader r(j, "");
  const json* version = r.find("schema_version");
  if (!version) fail("schema_version", "missing");
  if (!version->is_number_integer() || version->get<int>() != kSchemaVersion)
    fail("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  r.string("name", cfg.name);
  if (const json* v = r.find("plant")) parse_plant(*v, cfg.sim);
  if (const json* v = r.find("reference")) {
    Reader rr(*v, "reference");
    rr.number("x1d", cfg.sim.x1d);
    rr.finish();
  }
  if (const json* v = r.find("identifier")) parse_identifier(*v, cfg.sim.identifier);
  if (const json* v = r.find("critic")) parse_critic(*v, cfg.sim.critic);
  if (const json* v = r.find("sim")) parse_sim(*v, cfg.sim);
  if (const json* v = r.find("output")) {
    Reader o(*v, "output");
    o.string("dir", cfg.output.dir);
    o.boolean("csv", cfg.output.csv);
    o.boolean("plots", cfg.output.plots);
    o.finish();
  }
  r.finish();
  cfg.sim.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": malformed JSON: " + e.what());
  }
  return parse_config(j);
}

json serialize(const ExperimentConfig& cfg) {
  const SimConfig& s = cfg.sim;
  json schedule = json::array();
  for (const auto& seg : s.schedule.segments())
    schedule.push_back(
        {{"start", seg.start}, {"mass", seg.params.mass}, {"spring", seg.params.spring}, {"damping", seg.params.damping}});

  const auto basis = IdentifierBasis::from_id(s.identifier.basis);
  const Eigen::MatrixXd gamma1 = s.identifier.gamma1.size()
                                     ? s.identifier.gamma1
                                     : Eigen::MatrixXd(100.0 * Eigen::MatrixXd::Identity(basis.regressor_dim(), basis.regressor_dim()));
  const Eigen::MatrixXd w1 = s.identifier.W_init.size()
                                 ? s.identifier.W_init
                                 : Eigen::MatrixXd::Zero(basis.regressor_dim(), basis.state_dim());
  const auto& g = s.critic.gains;
  const Eigen::VectorXd w = s.critic.W_init.size() ? s.critic.W_init : Eigen::VectorXd::Zero(g.K1.size());

  json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = cfg.name;
  j["plant"] = {{"schedule", schedule}, {"initial_state", {s.x0.x1, s.x0.x2}}};
  j["reference"] = {{"x1d", s.x1d}};
  j["identifier"] = {{"basis", s.identifier.basis},
                     {"k_f", s.identifier.k_f},
                     {"l_f", s.identifier.l_f},
                     {"gamma1", rows_json(gamma1)},
                     {"stack_size", s.identifier.stack_size},
                     {"snapshot_period", s.identifier.snapshot_period},
                     {"er_enabled", s.identifier.er_enabled},
                     {"W_init", rows_json(w1)}};
  j["critic"] = {{"gamma", g.gamma},           {"T", g.T},
                 {"alpha", g.alpha},           {"k2", g.k2},
                 {"l", g.l},                   {"K1", vector_json(g.K1)},
                 {"K2", rows_json(g.K2)},      {"Q", rows_json(s.critic.Q)},
                 {"R", vector_json(s.critic.R)}, {"u_max", s.critic.u_max},
                 {"W_init", vector_json(w)},   {"limit_switching", s.critic.limit_switching}};
  j["sim"] = {{"dt", s.dt},
              {"duration", s.duration},
              {"seed", s.seed},
              {"probe",
               {{"enabled", s.probe.enabled},
                {"amplitude", s.probe.amplitude},
                {"frequencies", s.probe.frequencies},
                {"noise", s.probe.noise}}}};
  j["output"] = {{"dir", cfg.output.dir}, {"csv", cfg.output.csv}, {"plots", cfg.output.plots}};
  return j;
}

std::vector<Variant> parse_variants(const json& j) {
  Reader r(j, "");
  if (const json* version = r.find("schema_version")) {
    if (!version->is_number_integer() || version->get<int>() != kSchemaVersion)
      fail("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  std::vector<Variant> out;
  const json* list = r.find("variants");
  if (!list) fail("variants", "missing");
  if (!list->is_array()) fail("variants", "expected an array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const std::string path = "variants[" + std::to_string(i) + "]";
    Reader vr((*list)[i], path);
    Variant v;
    vr.string("name", v.name);
    if (v.name.empty()) fail(path + ".name", "required");
    if (v.name.find_first_of("/\\,\n") != std::string::npos || v.name == "." || v.name == "..")
      fail(path + ".name", "must be usable as a directory name");
    if (!names.insert(v.name).second) fail(path + ".name", "duplicate variant name '" + v.name + "'");
    if (const json* o = vr.find("overrides")) {
      if (!o->is_object()) fail(path + ".overrides", "expected an object");
      v.overrides = *o;
    } else {
      v.overrides = json::object();
    }
    vr.finish();
    out.push_back(std::move(v));
  }
  r.finish();
  return out;
}

std::vector<Variant> parse_variants_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open variants file");
  try {
    return parse_variants(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": malformed JSON: " + e.what());
  }
}

ExperimentConfig apply_variant(const ExperimentConfig& base, const Variant& v) {
  json j = serialize(base);
  j.merge_patch(v.overrides);
  j["name"] = v.name;
  try {
    return parse_config(j);
  } catch (const ConfigError& e) {
    throw ConfigError("variant '" + v.name + "': " + e.what());
  }
}

}  // namespace irltrack
