// flatlab — command-line laboratory for exact genus-2 flat surfaces.
//
// Subcommands build surfaces, decompose them into cylinders, test eigenform
// membership, enumerate saddle connections, act by SL(2) matrices, apply rel
// displacements, average observables along the shear flow, run multi-surface
// experiments, and verify the transverse-divergence limit regions.  Every run
// writes a manifest with input/output hashes; `flatlab replay` re-runs a
// manifest and checks the outputs byte-for-byte (exact commands) or within
// the recorded error estimates (quadrature commands).

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flatlab/constructions.hpp"
#include "flatlab/cylinders.hpp"
#include "flatlab/delaunay.hpp"
#include "flatlab/divergence.hpp"
#include "flatlab/ergodic.hpp"
#include "flatlab/rel.hpp"
#include "flatlab/saddles.hpp"
#include "flatlab/serialize.hpp"
#include "flatlab/surface.hpp"

namespace fs = std::filesystem;
using flatlab::Error;
using flatlab::ExactSurface;
using flatlab::fail;
using flatlab::json;
using flatlab::QuadNum;
using flatlab::Rational;
using flatlab::require;
using flatlab::Vec2;

static constexpr const char* kToolVersion = "flatlab 1.0.0";

// ---------------------------------------------------------------------------
// Small utilities
// ---------------------------------------------------------------------------

static std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  EVP_Digest(data.data(), data.size(), md, &n, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (unsigned int i = 0; i < n; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

static std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "ParseError", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

static void write_atomic(const std::string& path, const std::string& data) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), "ParseError", "cannot write " + tmp);
    out << data;
    require(out.good(), "ParseError", "short write to " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, "ParseError", "cannot move " + tmp + " into place: " + ec.message());
}

static std::string fmt17(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Exact rational from "p/q", integer, or decimal/scientific text like
// "0.01" and "1e3", so command-line grids are bit-reproducible.
static Rational parse_number(const std::string& s) {
  require(!s.empty(), "ParseError", "empty number");
  if (s.find('/') != std::string::npos) return Rational::parse(s);
  if (s.find_first_of(".eE") == std::string::npos) return Rational::parse(s);
  std::size_t i = 0;
  bool neg = false;
  if (s[i] == '+' || s[i] == '-') neg = s[i++] == '-';
  std::string digits;
  long frac = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) digits += s[i++];
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      digits += s[i++];
      ++frac;
    }
  }
  long expo = 0;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    bool eneg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) eneg = s[i++] == '-';
    std::string edig;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) edig += s[i++];
    require(!edig.empty() && edig.size() <= 6, "ParseError", "unreadable exponent in " + s);
    expo = std::stol(edig);
    if (eneg) expo = -expo;
  }
  require(i == s.size() && !digits.empty(), "ParseError", "unreadable number: " + s);
  mpz_class num(digits);
  mpz_class den(1);
  const long p = expo - frac;
  mpz_class pow;
  mpz_ui_pow_ui(pow.get_mpz_t(), 10, static_cast<unsigned long>(p >= 0 ? p : -p));
  if (p >= 0)
    num *= pow;
  else
    den = pow;
  Rational r{num, den};
  return neg ? -r : r;
}

static std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

static std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

static std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// Surface I/O and the canonical-form cache
// ---------------------------------------------------------------------------

static ExactSurface load_surface(const std::string& path) {
  return flatlab::surface_from_json<QuadNum>(json::parse(read_file(path)));
}

static std::string surface_text(const ExactSurface& s) {
  return flatlab::surface_to_json(s).dump(2) + "\n";
}

// Canonical forms are pure functions of the surface, so they may be cached
// by content hash in the directory named by FLATLAB_CACHE.
static ExactSurface cached_canonical(const ExactSurface& s) {
  const char* dir = std::getenv("FLATLAB_CACHE");
  if (dir == nullptr || *dir == '\0') return flatlab::delaunay_canonicalize(s);
  const std::string key = sha256_hex(flatlab::surface_to_json(s).dump());
  const fs::path entry = fs::path(dir) / (key + ".json");
  if (fs::exists(entry))
    return flatlab::surface_from_json<QuadNum>(json::parse(read_file(entry.string())));
  const ExactSurface canon = flatlab::delaunay_canonicalize(s);
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, "ParseError", "cannot create cache directory " + std::string(dir));
  write_atomic(entry.string(), surface_text(canon));
  return canon;
}

static QuadNum parse_coord(const std::string& text, long d, const std::string& what) {
  require(d != 0 || text.find('~') == std::string::npos, "ParseError",
          what + " uses a square-root part but the surface is rational");
  return flatlab::quadnum_parse(text, d);
}

// ---------------------------------------------------------------------------
// Run manifests
// ---------------------------------------------------------------------------

struct RunContext {
  std::string command;
  std::vector<std::string> argv;  // the full subcommand argv, for replay
  json parameters = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string replay_mode = "exact";  // or "tolerance"
  long seed = 42;
  long threads = 1;
  bool suppress_manifest = false;
  std::string manifest_override;

  void emit(const std::string& path, const std::string& data) {
    write_atomic(path, data);
    outputs.push_back(path);
  }

  std::string manifest_path() const {
    if (!manifest_override.empty()) return manifest_override;
    if (!outputs.empty()) return outputs[0] + ".manifest.json";
    if (!inputs.empty()) return inputs[0] + "." + command + ".manifest.json";
    return command + ".manifest.json";
  }

  void write_manifest(double wall_seconds) const {
    if (suppress_manifest) return;
    json in = json::array(), out = json::array();
    for (const std::string& p : inputs)
      in.push_back({{"path", p}, {"sha256", sha256_hex(read_file(p))}});
    for (const std::string& p : outputs)
      out.push_back({{"path", p}, {"sha256", sha256_hex(read_file(p))}});
    const json m = {{"format", "flatlab.manifest/1"},
                    {"tool", kToolVersion},
                    {"command", command},
                    {"argv", argv},
                    {"parameters", parameters},
                    {"seed", seed},
                    {"threads", threads},
                    {"inputs", in},
                    {"outputs", out},
                    {"replay_mode", replay_mode},
                    {"wall_seconds", wall_seconds}};
    write_atomic(manifest_path(), m.dump(2) + "\n");
  }
};

// ---------------------------------------------------------------------------
// Observables from flag values
// ---------------------------------------------------------------------------

static flatlab::Observable make_observable(const std::string& kind, double cap,
                                           const Rational& bound) {
  if (kind == "systole") return flatlab::truncated_systole(cap);
  if (kind == "connections") return flatlab::connection_count(QuadNum(bound));
  if (kind == "width") return flatlab::interval_width(QuadNum(bound), cap);
  fail("DomainError", "unknown observable '" + kind +
                          "' (expected systole, connections, or width)");
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

static void cmd_build(RunContext& ctx, const std::string& kind,
                      const std::string& params_text, const std::string& out,
                      bool canonical) {
  json params = json::object();
  if (!params_text.empty()) {
    params = json::parse(params_text, nullptr, false);
    require(!params.is_discarded() && params.is_object(), "ParseError",
            "--params must be a JSON object");
  }
  const long d = params.value("d", 0L);
  auto coord = [&](const char* key, const char* dflt) {
    return parse_coord(params.value(key, dflt), d, std::string("parameter ") + key);
  };

  ExactSurface s;
  if (kind == "octagon") {
    s = flatlab::regular_octagon();
  } else if (kind == "decagon") {
    s = flatlab::normalized_decagon();
  } else if (kind == "decagon-eigenform") {
    s = flatlab::decagon_staircase();
  } else if (kind == "ltable") {
    s = flatlab::l_table(coord("a", "2"), coord("b", "2"));
  } else if (kind == "ztable") {
    // Default: the Q(sqrt 2) eigenform fixture w=(1, sqrt2), s=(sqrt2, 1).
    require(params.empty() || params.contains("d"), "ParseError",
            "ztable parameters need the field discriminant d");
    const long dd = params.empty() ? 2 : d;
    auto zc = [&](const char* key, const char* dflt) {
      return parse_coord(params.value(key, dflt), dd, std::string("parameter ") + key);
    };
    s = flatlab::z_table(zc("w1", "1"), zc("w2", "0~1"), zc("h1", "-1/4~1"),
                         zc("h2", "3/4"), zc("h3", "1/4"), zc("t1", "0"),
                         zc("t2", "0"), zc("t3", "0"));
  } else {
    fail("DomainError", "unknown builder '" + kind +
                            "' (expected octagon, decagon, ltable, ztable, "
                            "decagon-eigenform)");
  }
  if (canonical) s = cached_canonical(s);
  ctx.parameters = {{"kind", kind}, {"params", params}, {"canonical", canonical}};
  ctx.emit(out, surface_text(s));
}

static void cmd_validate(RunContext& ctx, const std::string& surface_path,
                         const std::string& out) {
  const ExactSurface s = load_surface(surface_path);
  ctx.inputs.push_back(surface_path);
  const flatlab::Stratum st = flatlab::stratum(s);
  const flatlab::ConeData cd = flatlab::cone_data(s);
  int order_sum = 0;
  json cones = json::array();
  for (const flatlab::ConePoint& p : cd.points) {
    cones.push_back({{"angle_multiple", p.multiple}, {"corners", p.corners.size()}});
    order_sum += p.order();
  }
  const bool gauss_bonnet = order_sum == 2 * st.genus - 2;
  require(gauss_bonnet, "Internal", "cone angles do not match the genus");

  const json report = {{"format", "flatlab.report/1"},
                       {"label", s.label},
                       {"stratum", st.name()},
                       {"genus", st.genus},
                       {"cone_points", cones},
                       {"area", flatlab::total_area(s).str()},
                       {"faces", s.faces()},
                       {"gauss_bonnet", "ok"}};
  std::printf("%s\n", report.dump(2).c_str());
  ctx.parameters = {{"surface", surface_path}};
  if (!out.empty()) ctx.emit(out, report.dump(2) + "\n");
}

static void cmd_cylinders(RunContext& ctx, const std::string& surface_path,
                          const std::string& dir_text, long budget,
                          const std::string& out) {
  const ExactSurface s = load_surface(surface_path);
  ctx.inputs.push_back(surface_path);
  const std::vector<std::string> parts = split_on(dir_text, ',');
  require(parts.size() == 2, "ParseError", "--dir expects two comma-separated coordinates");
  const Vec2<QuadNum> dir{parse_coord(parts[0], s.d, "direction x"),
                          parse_coord(parts[1], s.d, "direction y")};
  const flatlab::CylinderDecomposition dec =
      flatlab::periodic_direction_decompose(s, dir, budget);

  json cylinders = json::array();
  QuadNum wh_sum(0);
  for (const flatlab::Cylinder& c : dec.cylinders) {
    cylinders.push_back({{"w", c.w.str()}, {"h", c.h.str()}, {"twist", c.t.str()}});
    wh_sum = wh_sum + c.w * c.h;
  }
  json connections = json::array();
  for (const flatlab::FlowConnection& c : dec.connections)
    connections.push_back({{"from_class", c.from_class},
                           {"to_class", c.to_class},
                           {"len", c.len.str()},
                           {"below", c.below},
                           {"above", c.above}});
  const json doc = {{"format", "flatlab.cylinders/1"},
                    {"direction", {dec.direction.x.str(), dec.direction.y.str()}},
                    {"cylinders", cylinders},
                    {"connections", connections},
                    {"wh_sum", wh_sum.str()},
                    {"area", flatlab::total_area(s).str()}};
  ctx.parameters = {{"surface", surface_path}, {"dir", dir_text}, {"budget", budget}};
  ctx.emit(out, doc.dump(2) + "\n");
}

static void cmd_check_lm(RunContext& ctx, const std::string& surface_path,
                         long budget, const std::string& out) {
  const ExactSurface s = load_surface(surface_path);
  ctx.inputs.push_back(surface_path);
  const flatlab::NormalizedParams np = flatlab::normalize_params(
      flatlab::periodic_direction_decompose(s, {QuadNum(1), QuadNum(0)}, budget));
  const flatlab::LmVerdict v = flatlab::check_lm(np);
  const json doc = {{"format", "flatlab.lm/1"},
                    {"member", v.member},
                    {"m", v.m.str()},
                    {"verdict", v.member ? "member" : "violated(" + v.equation + ")"},
                    {"equation", v.equation},
                    {"residual", v.residual.str()},
                    {"params",
                     {{"w1", np.w1.str()},
                      {"w2", np.w2.str()},
                      {"w3", np.w3.str()},
                      {"h1", np.h1.str()},
                      {"h2", np.h2.str()},
                      {"h3", np.h3.str()},
                      {"t1", np.t1.str()},
                      {"t2", np.t2.str()},
                      {"t3", np.t3.str()},
                      {"s1", np.s1.str()},
                      {"s2", np.s2.str()},
                      {"tau1", np.tau1.str()},
                      {"tau2", np.tau2.str()}}}};
  ctx.parameters = {{"surface", surface_path}, {"budget", budget}};
  ctx.emit(out, doc.dump(2) + "\n");
}

static void cmd_saddles(RunContext& ctx, const std::string& surface_path,
                        const std::string& bound_text, bool horizontal_only,
                        long budget, const std::string& out) {
  const ExactSurface s = load_surface(surface_path);
  ctx.inputs.push_back(surface_path);
  const QuadNum bound = parse_coord(bound_text, s.d, "--bound");
  std::vector<flatlab::SaddleConnection> list =
      flatlab::enumerate_saddle_connections(s, bound, budget);
  if (horizontal_only) {
    std::vector<flatlab::SaddleConnection> keep;
    for (const auto& c : list)
      if (c.holonomy.y.is_zero()) keep.push_back(c);
    list.swap(keep);
  }
  json arr = json::array();
  for (const auto& c : list)
    arr.push_back({{"x", c.holonomy.x.str()},
                   {"y", c.holonomy.y.str()},
                   {"from", c.from_class},
                   {"to", c.to_class}});
  const json doc = {{"format", "flatlab.saddles/1"},
                    {"bound", bound.str()},
                    {"horizontal_only", horizontal_only},
                    {"count", arr.size()},
                    {"connections", arr}};
  ctx.parameters = {{"surface", surface_path},
                    {"bound", bound_text},
                    {"horizontal_only", horizontal_only},
                    {"budget", budget}};
  ctx.emit(out, doc.dump(2) + "\n");
}

static void cmd_act(RunContext& ctx, const std::string& surface_path,
                    const std::string& matrix_text, bool raw, const std::string& out) {
  const ExactSurface s = load_surface(surface_path);
  ctx.inputs.push_back(surface_path);
  const std::vector<std::string> parts = split_on(matrix_text, ',');
  require(parts.size() == 4, "ParseError", "--matrix expects a,b,c,d");
  const flatlab::Mat2<QuadNum> g{
      parse_coord(parts[0], s.d, "matrix a"), parse_coord(parts[1], s.d, "matrix b"),
      parse_coord(parts[2], s.d, "matrix c"), parse_coord(parts[3], s.d, "matrix d")};
  ExactSurface moved = flatlab::apply_sl2(s, g);
  if (!raw) moved = cached_canonical(moved);
  ctx.parameters = {{"surface", surface_path}, {"matrix", matrix_text}, {"raw", raw}};
  ctx.emit(out, surface_text(moved));
}

static void cmd_rel(RunContext& ctx, const std::string& surface_path, int moving_class,
                    const std::string& vector_text, long budget, const std::string& out) {
  const ExactSurface s = load_surface(surface_path);
  ctx.inputs.push_back(surface_path);
  const std::vector<std::string> parts = split_on(vector_text, ',');
  require(parts.size() == 2, "ParseError", "--vector expects x,y");
  const Vec2<QuadNum> v{parse_coord(parts[0], s.d, "vector x"),
                        parse_coord(parts[1], s.d, "vector y")};
  const flatlab::RelOutcome r = flatlab::rel_translate(s, moving_class, v, budget);
  json doc = {{"format", "flatlab.rel/1"},
              {"degenerate", r.degenerate},
              {"events", r.events}};
  if (r.degenerate) {
    doc["kind"] = r.kind;
    json comps = json::array();
    for (const ExactSurface& c : r.components) comps.push_back(flatlab::surface_to_json(c));
    doc["components"] = comps;
  } else {
    doc["surface"] = flatlab::surface_to_json(r.surface);
  }
  ctx.parameters = {{"surface", surface_path},
                    {"class", moving_class},
                    {"vector", vector_text},
                    {"budget", budget}};
  ctx.emit(out, doc.dump(2) + "\n");
}

static void cmd_average(RunContext& ctx, const std::string& surface_path,
                        const std::string& obs_kind, double cap,
                        const std::string& bound_text, const std::string& t_text,
                        const std::string& dt_text, const std::string& ds_text,
                        const std::string& out) {
  const ExactSurface s = load_surface(surface_path);
  ctx.inputs.push_back(surface_path);
  const flatlab::Observable obs = make_observable(obs_kind, cap, parse_number(bound_text));
  const Rational T = parse_number(t_text), dt = parse_number(dt_text);

  double value = 0, err = 0;
  if (ds_text.empty()) {
    const flatlab::QuadratureResult r = flatlab::average_A_U(obs, s, T, dt);
    value = r.value;
    err = r.err;
  } else {
    const flatlab::SheetAverage r =
        flatlab::average_A_UX(obs, s, T, dt, parse_number(ds_text));
    value = r.value;
    err = r.err;
  }
  std::string csv = "T,value,err_estimate\n";
  csv += T.str() + "," + fmt17(value) + "," + fmt17(err) + "\n";
  ctx.parameters = {{"surface", surface_path}, {"obs", obs_kind},   {"cap", cap},
                    {"bound", bound_text},     {"T", t_text},       {"dt", dt_text},
                    {"ds", ds_text}};
  ctx.replay_mode = "tolerance";
  ctx.emit(out, csv);
}

static void cmd_equidist(RunContext& ctx, const std::string& config_path,
                         const std::string& out_prefix) {
  const json cfg = json::parse(read_file(config_path));
  ctx.inputs.push_back(config_path);
  require(cfg.contains("surfaces") && cfg["surfaces"].is_array() &&
              !cfg["surfaces"].empty(),
          "ParseError", "config needs a non-empty surfaces array");

  std::vector<ExactSurface> fleet;
  for (const json& entry : cfg["surfaces"]) {
    require(entry.is_string(), "ParseError", "surfaces entries must be file paths");
    fleet.push_back(load_surface(entry.get<std::string>()));
    ctx.inputs.push_back(entry.get<std::string>());
  }
  const json obs_cfg = cfg.value("observable", json{{"kind", "systole"}});
  const flatlab::Observable obs =
      make_observable(obs_cfg.value("kind", "systole"), obs_cfg.value("cap", 8.0),
                      parse_number(obs_cfg.value("bound", "2")));
  std::vector<Rational> schedule;
  require(cfg.contains("schedule") && cfg["schedule"].is_array(), "ParseError",
          "config needs a schedule array");
  for (const json& t : cfg["schedule"]) schedule.push_back(parse_number(t.get<std::string>()));
  flatlab::GridSteps grid;
  if (cfg.contains("grid")) {
    grid.t_samples = cfg["grid"].value("t_samples", grid.t_samples);
    grid.s_samples = cfg["grid"].value("s_samples", grid.s_samples);
  }

  const flatlab::ExperimentTable table =
      flatlab::equidistribution_experiment(fleet, obs, schedule, grid);

  std::string csv = "surface,T,value,err_estimate,ok,error\n";
  json runs = json::array();
  for (const flatlab::ErgodicRun& run : table.runs) {
    json cells = json::array();
    for (const flatlab::ErgodicCell& cell : run.cells) {
      csv += csv_quote(run.surface) + "," + cell.T.str() + "," + fmt17(cell.value) +
             "," + fmt17(cell.err) + "," + (cell.ok ? "1" : "0") + "," +
             csv_quote(cell.error) + "\n";
      cells.push_back({{"T", cell.T.str()},
                       {"ok", cell.ok},
                       {"value", cell.value},
                       {"err", cell.err},
                       {"renormalizations", cell.renormalizations},
                       {"error", cell.error}});
    }
    runs.push_back({{"surface", run.surface},
                    {"observable", run.observable},
                    {"cells", cells},
                    {"increments", run.increments}});
  }
  json spread = json::array();
  for (double v : table.spread)
    spread.push_back(std::isnan(v) ? json(nullptr) : json(v));
  const json doc = {{"format", "flatlab.equidist/1"},
                    {"observable", obs.name},
                    {"grid", {{"t_samples", grid.t_samples}, {"s_samples", grid.s_samples}}},
                    {"runs", runs},
                    {"spread", spread}};
  ctx.parameters = {{"manifest", config_path}, {"out_prefix", out_prefix}};
  ctx.replay_mode = "tolerance";
  ctx.emit(out_prefix + ".csv", csv);
  ctx.emit(out_prefix + ".json", doc.dump(2) + "\n");
}

static void cmd_divergence_verify(RunContext& ctx, const std::string& family,
                                  double delta, const std::string& kmax_text,
                                  double tol, double scale_c, double scale_y,
                                  const std::string& out,
                                  const std::string& verdict_out) {
  const Rational kq = parse_number(kmax_text);
  require(kq.is_integer() && kq.sign() > 0 && kq.num().fits_slong_p(), "DomainError",
          "--kmax must be a positive integer");
  const long kmax = kq.num().get_si();

  double sc = scale_c, sy = scale_y;
  if (family == "caseA" || family == "caseB") {
    // Deterministic scale draw from the seed (the engine is fully pinned by
    // the standard; no distribution objects, which are not).
    std::mt19937 gen(static_cast<unsigned long>(ctx.seed));
    auto draw = [&gen]() {
      const double mag = 0.5 + static_cast<double>(gen() % 28) / 8.0;
      return (gen() & 1u) != 0 ? -mag : mag;
    };
    sc = draw();
    sy = draw();
  } else {
    require(family == "custom", "DomainError",
            "unknown family '" + family + "' (expected caseA, caseB, custom)");
    require(sc != 0.0 && sy != 0.0, "DomainError",
            "custom families need nonzero --scale-c and --scale-y");
  }
  const flatlab::DivergenceSequence seq =
      family == "caseB" ? flatlab::case_b_sequence(delta, sc, sy)
                        : flatlab::case_a_sequence(delta, sc, sy);

  const flatlab::LimitReport rep = flatlab::limit_region_check(seq, kmax, tol);
  const bool case_a = rep.which_case == "A";
  std::string csv = "k,diag_part,x_part,distance\n";
  for (long k : {kmax / 16, kmax / 4, kmax}) {
    const flatlab::SequenceTerm term = seq.term(k);
    const double t = flatlab::t_k_rule(term.g.c, term.y, delta);
    const flatlab::RegionSample sample = flatlab::region_sample(
        case_a, delta, flatlab::conjugated_product(term.g, term.x, term.y, t));
    csv += std::to_string(k) + "," + fmt17(sample.diag) + "," + fmt17(sample.x_part) +
           "," + fmt17(sample.distance) + "\n";
  }
  const json verdict = {{"format", "flatlab.divergence/1"},
                        {"family", family},
                        {"case", rep.which_case},
                        {"delta", delta},
                        {"kmax", kmax},
                        {"tol", tol},
                        {"scale_c", sc},
                        {"scale_y", sy},
                        {"lambda", rep.lambda},
                        {"mu", rep.mu},
                        {"x_part", rep.x_part},
                        {"distance", rep.distance},
                        {"cauchy", rep.cauchy},
                        {"pass", rep.pass}};
  ctx.parameters = {{"family", family}, {"delta", delta},     {"kmax", kmax_text},
                    {"tol", tol},       {"scale_c", sc},      {"scale_y", sy}};
  ctx.emit(out, csv);
  ctx.emit(verdict_out, verdict.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

static int run_cli(std::vector<std::string> args);

static void compare_tolerant_csv(const std::string& recorded, const std::string& fresh) {
  const std::vector<std::string> a = split_on(recorded, '\n');
  const std::vector<std::string> b = split_on(fresh, '\n');
  require(a.size() == b.size(), "OutputDrift", "replayed CSV has a different shape");
  require(!a.empty() && a[0] == b[0], "OutputDrift", "replayed CSV header differs");
  const std::vector<std::string> header = csv_fields(a[0]);
  long value_col = -1, err_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "value") value_col = static_cast<long>(j);
    if (header[j] == "err_estimate") err_col = static_cast<long>(j);
  }
  require(value_col >= 0 && err_col >= 0, "OutputDrift",
          "replayed CSV lacks value/err_estimate columns");
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (a[i].empty() && b[i].empty()) continue;
    const std::vector<std::string> ra = csv_fields(a[i]), rb = csv_fields(b[i]);
    require(ra.size() == rb.size(), "OutputDrift",
            "replayed CSV row " + std::to_string(i) + " has a different shape");
    for (std::size_t j = 0; j < ra.size(); ++j) {
      if (static_cast<long>(j) == value_col) {
        const double va = std::strtod(ra[j].c_str(), nullptr);
        const double vb = std::strtod(rb[j].c_str(), nullptr);
        const double err = std::strtod(ra[err_col].c_str(), nullptr);
        const bool both_nan = std::isnan(va) && std::isnan(vb);
        require(both_nan || std::abs(va - vb) <= err + 1e-15, "OutputDrift",
                "replayed value " + rb[j] + " outside the recorded estimate of " +
                    ra[j] + " +/- " + ra[err_col]);
      } else if (static_cast<long>(j) != err_col) {
        require(ra[j] == rb[j], "OutputDrift",
                "replayed CSV row " + std::to_string(i) + " drifted in column " +
                    header[std::min(j, header.size() - 1)]);
      }
    }
  }
}

static void cmd_replay(const std::string& manifest_path) {
  const json m = json::parse(read_file(manifest_path));
  require(m.value("format", "") == std::string("flatlab.manifest/1"), "ParseError",
          "unrecognized manifest format");
  require(m.value("tool", "") == std::string(kToolVersion), "ParseError",
          "manifest was written by a different tool version");
  for (const json& in : m.at("inputs")) {
    const std::string path = in.at("path").get<std::string>();
    const std::string want = in.at("sha256").get<std::string>();
    require(fs::exists(path), "HashMismatch", "input " + path + " is missing");
    const std::string got = sha256_hex(read_file(path));
    require(got == want, "HashMismatch",
            "input " + path + " no longer matches its recorded hash");
  }

  std::vector<std::string> argv;
  for (const json& a : m.at("argv")) argv.push_back(a.get<std::string>());

  // Redirect outputs to fresh ".replay" paths so the recorded files survive
  // for comparison.  Commands that derive several outputs from one prefix
  // need the prefix itself rewritten.
  std::string old_prefix, new_prefix;
  for (std::size_t i = 0; i + 1 < argv.size(); ++i) {
    if (argv[i] == "--out-prefix") {
      old_prefix = argv[i + 1];
      new_prefix = old_prefix + ".replay";
      argv[i + 1] = new_prefix;
    }
  }
  std::vector<std::pair<std::string, std::string>> outputs;  // recorded, replayed
  for (const json& out : m.at("outputs")) {
    const std::string path = out.at("path").get<std::string>();
    if (!old_prefix.empty() && path.rfind(old_prefix, 0) == 0)
      outputs.push_back({path, new_prefix + path.substr(old_prefix.size())});
    else
      outputs.push_back({path, path + ".replay"});
  }
  for (std::string& a : argv)
    for (const auto& [recorded, replayed] : outputs)
      if (a == recorded) a = replayed;
  argv.push_back("--no-manifest");

  const int code = run_cli(argv);
  require(code == 0, "OutputDrift",
          "replayed command exited with status " + std::to_string(code));

  const std::string mode = m.value("replay_mode", "exact");
  std::size_t idx = 0;
  for (const json& out : m.at("outputs")) {
    const std::string& replayed = outputs[idx++].second;
    const std::string want = out.at("sha256").get<std::string>();
    require(fs::exists(replayed), "OutputDrift",
            "replay produced no file " + replayed);
    const std::string fresh = read_file(replayed);
    if (sha256_hex(fresh) == want) {
      fs::remove(replayed);
      continue;
    }
    require(mode == "tolerance", "OutputDrift",
            "replayed output differs from " + out.at("path").get<std::string>());
    const std::string recorded_path = out.at("path").get<std::string>();
    if (recorded_path.size() >= 4 &&
        recorded_path.substr(recorded_path.size() - 4) == ".csv") {
      compare_tolerant_csv(read_file(recorded_path), fresh);
      fs::remove(replayed);
    } else {
      fs::remove(replayed);  // JSON companions of tolerance runs are advisory
    }
  }
  std::printf("replay ok: %s\n", manifest_path.c_str());
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

static int run_cli(std::vector<std::string> args) {
  CLI::App app{"flatlab — an exact laboratory for genus-2 flat surfaces"};
  app.require_subcommand(1);
  app.fallthrough();

  long seed = 42, threads = 1;
  bool no_manifest = false;
  std::string manifest_out;
  app.add_option("--seed", seed, "seed for randomized drivers")->capture_default_str();
  app.add_option("--threads", threads, "worker budget (current commands are serial)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--no-manifest", no_manifest, "do not write a run manifest");
  app.add_option("--manifest-out", manifest_out, "write the run manifest here");

  // build
  auto* c_build = app.add_subcommand("build", "construct a named example surface");
  std::string build_kind, build_params, build_out;
  bool build_canonical = false;
  c_build->add_option("kind", build_kind,
                      "octagon|decagon|ltable|ztable|decagon-eigenform")
      ->required();
  c_build->add_option("--params", build_params, "JSON object of builder parameters");
  c_build->add_option("--out", build_out, "output surface file");
  c_build->add_flag("--canonical", build_canonical, "canonicalize before writing");

  // validate
  auto* c_validate = app.add_subcommand("validate", "check a surface and print its cone report");
  std::string val_surface, val_out;
  c_validate->add_option("--surface", val_surface, "surface JSON file")->required();
  c_validate->add_option("--out", val_out, "also write the report as JSON");

  // cylinders
  auto* c_cyl = app.add_subcommand("cylinders", "decompose a periodic direction");
  std::string cyl_surface, cyl_dir = "1,0", cyl_out;
  long cyl_budget = 1000000;
  c_cyl->add_option("--surface", cyl_surface, "surface JSON file")->required();
  c_cyl->add_option("--dir", cyl_dir, "direction a,b")->capture_default_str();
  c_cyl->add_option("--budget", cyl_budget, "separatrix trace budget");
  c_cyl->add_option("--out", cyl_out, "output JSON file");

  // check-lm
  auto* c_lm = app.add_subcommand("check-lm", "test eigenform-locus membership");
  std::string lm_surface, lm_out;
  long lm_budget = 1000000;
  c_lm->add_option("--surface", lm_surface, "surface JSON file")->required();
  c_lm->add_option("--budget", lm_budget, "separatrix trace budget");
  c_lm->add_option("--out", lm_out, "output JSON file");

  // saddles
  auto* c_sad = app.add_subcommand("saddles", "enumerate saddle connections");
  std::string sad_surface, sad_bound = "2", sad_out;
  bool sad_horizontal = false;
  long sad_budget = 1000000;
  c_sad->add_option("--surface", sad_surface, "surface JSON file")->required();
  c_sad->add_option("--bound", sad_bound, "length bound")->capture_default_str();
  c_sad->add_flag("--horizontal-only", sad_horizontal, "keep only horizontal connections");
  c_sad->add_option("--budget", sad_budget, "search node budget");
  c_sad->add_option("--out", sad_out, "output JSON file");

  // act
  auto* c_act = app.add_subcommand("act", "apply a determinant-one matrix");
  std::string act_surface, act_matrix, act_out;
  bool act_raw = false;
  c_act->add_option("--surface", act_surface, "surface JSON file")->required();
  c_act->add_option("--matrix", act_matrix, "entries a,b,c,d")->required();
  c_act->add_flag("--raw", act_raw, "skip the canonical retriangulation");
  c_act->add_option("--out", act_out, "output surface file");

  // rel
  auto* c_rel = app.add_subcommand("rel", "displace one cone class");
  std::string rel_surface, rel_vector, rel_out;
  int rel_class = 0;
  long rel_budget = 100000;
  c_rel->add_option("--surface", rel_surface, "surface JSON file")->required();
  c_rel->add_option("--class", rel_class, "moving cone class index")->capture_default_str();
  c_rel->add_option("--vector", rel_vector, "displacement x,y")->required();
  c_rel->add_option("--budget", rel_budget, "retriangulation event budget");
  c_rel->add_option("--out", rel_out, "output JSON file");

  // average
  auto* c_avg = app.add_subcommand("average", "average an observable along the flow");
  std::string avg_surface, avg_obs = "systole", avg_bound = "2";
  std::string avg_T, avg_dt, avg_ds, avg_out;
  double avg_cap = 8.0;
  c_avg->add_option("--surface", avg_surface, "surface JSON file")->required();
  c_avg->add_option("--obs", avg_obs, "systole|connections|width")->capture_default_str();
  c_avg->add_option("--cap", avg_cap, "truncation cap")->capture_default_str();
  c_avg->add_option("--bound", avg_bound, "length bound for connection observables")
      ->capture_default_str();
  c_avg->add_option("--T", avg_T, "averaging horizon")->required();
  c_avg->add_option("--dt", avg_dt, "flow step")->required();
  c_avg->add_option("--ds", avg_ds, "displacement step (enables the sheet average)");
  c_avg->add_option("--out", avg_out, "output CSV file");

  // equidist
  auto* c_eq = app.add_subcommand("equidist", "run a multi-surface averaging experiment");
  std::string eq_config, eq_prefix = "equidist";
  c_eq->add_option("--manifest", eq_config, "experiment configuration JSON")->required();
  c_eq->add_option("--out-prefix", eq_prefix, "prefix for the CSV/JSON outputs")
      ->capture_default_str();

  // divergence-verify
  auto* c_div = app.add_subcommand("divergence-verify", "check a transverse limit region");
  std::string div_family = "caseA", div_kmax = "1e6", div_out, div_verdict;
  double div_delta = 0.1, div_tol = 1e-3, div_sc = 0.0, div_sy = 0.0;
  c_div->add_option("--family", div_family, "caseA|caseB|custom")->capture_default_str();
  c_div->add_option("--delta", div_delta, "probing depth")->capture_default_str();
  c_div->add_option("--kmax", div_kmax, "deepest index")->capture_default_str();
  c_div->add_option("--tol", div_tol, "distance tolerance")->capture_default_str();
  c_div->add_option("--scale-c", div_sc, "custom family: scale of c_k");
  c_div->add_option("--scale-y", div_sy, "custom family: scale of y_k");
  c_div->add_option("--out", div_out, "output CSV file");
  c_div->add_option("--verdict-out", div_verdict, "output verdict JSON file");

  // replay
  auto* c_rep = app.add_subcommand("replay", "re-run a manifest and compare outputs");
  std::string rep_manifest;
  c_rep->add_option("--manifest", rep_manifest, "run manifest file")->required();

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  RunContext ctx;
  ctx.seed = seed;
  ctx.threads = threads;
  ctx.suppress_manifest = no_manifest;
  ctx.manifest_override = manifest_out;

  const auto started = std::chrono::steady_clock::now();
  try {
    if (app.got_subcommand(c_build)) {
      ctx.command = "build";
      if (build_out.empty()) build_out = build_kind + ".json";
      ctx.argv = {"build", build_kind, "--out", build_out};
      if (!build_params.empty()) {
        ctx.argv.push_back("--params");
        ctx.argv.push_back(build_params);
      }
      if (build_canonical) ctx.argv.push_back("--canonical");
      cmd_build(ctx, build_kind, build_params, build_out, build_canonical);
    } else if (app.got_subcommand(c_validate)) {
      ctx.command = "validate";
      ctx.argv = {"validate", "--surface", val_surface};
      if (!val_out.empty()) {
        ctx.argv.push_back("--out");
        ctx.argv.push_back(val_out);
      }
      cmd_validate(ctx, val_surface, val_out);
    } else if (app.got_subcommand(c_cyl)) {
      ctx.command = "cylinders";
      if (cyl_out.empty()) cyl_out = "cylinders.json";
      ctx.argv = {"cylinders", "--surface", cyl_surface, "--dir", cyl_dir,
                  "--budget", std::to_string(cyl_budget), "--out", cyl_out};
      cmd_cylinders(ctx, cyl_surface, cyl_dir, cyl_budget, cyl_out);
    } else if (app.got_subcommand(c_lm)) {
      ctx.command = "check-lm";
      if (lm_out.empty()) lm_out = "lm.json";
      ctx.argv = {"check-lm", "--surface", lm_surface,
                  "--budget", std::to_string(lm_budget), "--out", lm_out};
      cmd_check_lm(ctx, lm_surface, lm_budget, lm_out);
    } else if (app.got_subcommand(c_sad)) {
      ctx.command = "saddles";
      if (sad_out.empty()) sad_out = "saddles.json";
      ctx.argv = {"saddles", "--surface", sad_surface, "--bound", sad_bound,
                  "--budget", std::to_string(sad_budget), "--out", sad_out};
      if (sad_horizontal) ctx.argv.push_back("--horizontal-only");
      cmd_saddles(ctx, sad_surface, sad_bound, sad_horizontal, sad_budget, sad_out);
    } else if (app.got_subcommand(c_act)) {
      ctx.command = "act";
      if (act_out.empty()) act_out = "acted.json";
      ctx.argv = {"act", "--surface", act_surface, "--matrix", act_matrix,
                  "--out", act_out};
      if (act_raw) ctx.argv.push_back("--raw");
      cmd_act(ctx, act_surface, act_matrix, act_raw, act_out);
    } else if (app.got_subcommand(c_rel)) {
      ctx.command = "rel";
      if (rel_out.empty()) rel_out = "rel.json";
      ctx.argv = {"rel", "--surface", rel_surface, "--class", std::to_string(rel_class),
                  "--vector", rel_vector, "--budget", std::to_string(rel_budget),
                  "--out", rel_out};
      cmd_rel(ctx, rel_surface, rel_class, rel_vector, rel_budget, rel_out);
    } else if (app.got_subcommand(c_avg)) {
      ctx.command = "average";
      if (avg_out.empty()) avg_out = "average.csv";
      ctx.argv = {"average", "--surface", avg_surface, "--obs", avg_obs,
                  "--cap", fmt17(avg_cap), "--bound", avg_bound, "--T", avg_T,
                  "--dt", avg_dt, "--out", avg_out};
      if (!avg_ds.empty()) {
        ctx.argv.push_back("--ds");
        ctx.argv.push_back(avg_ds);
      }
      cmd_average(ctx, avg_surface, avg_obs, avg_cap, avg_bound, avg_T, avg_dt,
                  avg_ds, avg_out);
    } else if (app.got_subcommand(c_eq)) {
      ctx.command = "equidist";
      ctx.argv = {"equidist", "--manifest", eq_config, "--out-prefix", eq_prefix};
      cmd_equidist(ctx, eq_config, eq_prefix);
    } else if (app.got_subcommand(c_div)) {
      ctx.command = "divergence-verify";
      if (div_out.empty()) div_out = "divergence.csv";
      if (div_verdict.empty()) div_verdict = div_out + ".verdict.json";
      ctx.argv = {"divergence-verify", "--family", div_family,
                  "--delta", fmt17(div_delta), "--kmax", div_kmax,
                  "--tol", fmt17(div_tol), "--seed", std::to_string(seed),
                  "--out", div_out, "--verdict-out", div_verdict};
      if (div_family == "custom") {
        ctx.argv.push_back("--scale-c");
        ctx.argv.push_back(fmt17(div_sc));
        ctx.argv.push_back("--scale-y");
        ctx.argv.push_back(fmt17(div_sy));
      }
      cmd_divergence_verify(ctx, div_family, div_delta, div_kmax, div_tol, div_sc,
                            div_sy, div_out, div_verdict);
    } else if (app.got_subcommand(c_rep)) {
      ctx.command = "replay";
      cmd_replay(rep_manifest);
      return 0;  // replay writes no manifest of its own
    }
  } catch (const Error& e) {
    const std::string what = e.what();
    const std::string prefix = e.code() + ": ";
    const std::string message =
        what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
    static const std::map<std::string, std::string> owner = {
        {"build", "constructions"}, {"validate", "surface"},
        {"cylinders", "cylinders"}, {"check-lm", "cylinders"},
        {"saddles", "saddles"},     {"act", "surface"},
        {"rel", "rel"},             {"average", "ergodic"},
        {"equidist", "ergodic"},    {"divergence-verify", "divergence"},
        {"replay", "cli"}};
    const auto it = owner.find(ctx.command);
    const json err = {{"code", e.code()},
                      {"module", it == owner.end() ? "cli" : it->second},
                      {"message", message},
                      {"context", {{"command", ctx.command}}}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 2;
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  ctx.write_manifest(wall);
  return 0;
}

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  try {
    return run_cli(std::move(args));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "flatlab: %s\n", e.what());
    return 1;
  }
}
