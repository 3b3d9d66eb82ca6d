#include "sselab/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace sselab {

ConfigError::ConfigError(const std::string& message, int line, std::string field)
    : std::runtime_error(line > 0 ? fmt::format("line {}: {}", line, message) : message),
      line_(line),
      field_(std::move(field)) {}

namespace {

struct Token {
  enum Kind { Word, Open, Close, Equals, End } kind;
  std::string text;
  int line;
};

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  int line = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == '\n' || c == ';') {
      out.push_back({Token::End, "", line});
      if (c == '\n') ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++i;
    } else if (c == '{') {
      out.push_back({Token::Open, "{", line});
      ++i;
    } else if (c == '}') {
      out.push_back({Token::Close, "}", line});
      ++i;
    } else if (c == '=') {
      out.push_back({Token::Equals, "=", line});
      ++i;
    } else if (c == '"') {
      const std::size_t close = text.find('"', i + 1);
      if (close == std::string::npos || text.find('\n', i + 1) < close)
        throw ConfigError("unterminated string", line, "");
      out.push_back({Token::Word, text.substr(i + 1, close - i - 1), line});
      i = close + 1;
    } else {
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
             std::string_view("{}=,;#\"").find(text[j]) == std::string_view::npos)
        ++j;
      out.push_back({Token::Word, text.substr(i, j - i), line});
      i = j;
    }
  }
  out.push_back({Token::End, "", line});
  return out;
}

struct Entry {
  std::vector<std::string> values;
  int line = 0;
};
using Block = std::map<std::string, Entry>;

std::map<std::string, std::pair<Block, int>> parse_blocks(const std::string& text) {
  const auto tokens = tokenize(text);
  std::map<std::string, std::pair<Block, int>> blocks;
  std::size_t i = 0;
  for (;;) {
    while (tokens[i].kind == Token::End && i + 1 < tokens.size()) ++i;
    if (tokens[i].kind == Token::End) break;
    const Token& name = tokens[i++];
    if (name.kind != Token::Word) throw ConfigError("expected a block name, got '" + name.text + "'", name.line, "");
    while (tokens[i].kind == Token::End && i + 1 < tokens.size()) ++i;
    if (tokens[i].kind != Token::Open) throw ConfigError("expected '{' after '" + name.text + "'", tokens[i].line, name.text);
    if (blocks.count(name.text)) throw ConfigError("duplicate block '" + name.text + "'", name.line, name.text);
    auto& slot = blocks[name.text];
    slot.second = name.line;
    Block& ref = slot.first;
    ++i;
    for (;;) {
      while (tokens[i].kind == Token::End) {
        if (i + 1 >= tokens.size()) throw ConfigError("unterminated block '" + name.text + "'", name.line, name.text);
        ++i;
      }
      if (tokens[i].kind == Token::Close) {
        ++i;
        break;
      }
      const Token& key = tokens[i];
      const std::string field = name.text + "." + key.text;
      if (key.kind != Token::Word) throw ConfigError("expected a key in block '" + name.text + "'", key.line, name.text);
      if (tokens[i + 1].kind != Token::Equals) throw ConfigError("expected '=' after '" + key.text + "'", key.line, field);
      i += 2;
      Entry e;
      e.line = key.line;
      // A word followed by '=' starts the next statement of a one-line block.
      while (tokens[i].kind == Token::Word && tokens[i + 1].kind != Token::Equals) e.values.push_back(tokens[i++].text);
      if (tokens[i].kind == Token::Open || tokens[i].kind == Token::Equals)
        throw ConfigError("unexpected '" + tokens[i].text + "' in value of " + field, tokens[i].line, field);
      if (e.values.empty()) throw ConfigError("missing value for " + field, key.line, field);
      if (ref.count(key.text)) throw ConfigError("duplicate key " + field, key.line, field);
      ref[key.text] = std::move(e);
    }
  }
  return blocks;
}

class Reader {
 public:
  Reader(const std::string& field, const Entry& e) : field_(field), e_(e) {}

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(field_ + ": " + what, e_.line, field_); }

  const std::string& single() const {
    if (e_.values.size() != 1) fail("expected a single value");
    return e_.values[0];
  }
  double number(const std::string& text) const {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v)) fail("'" + text + "' is not a finite number");
    return v;
  }
  double real() const { return number(single()); }
  long long integer(const std::string& text) const {
    long long v = 0;
    const auto* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end) fail("'" + text + "' is not an integer");
    return v;
  }
  long long integer() const { return integer(single()); }
  std::uint64_t u64() const {
    const std::string& text = single();
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || p != end) fail("'" + text + "' is not a non-negative integer");
    return v;
  }
  std::vector<double> reals() const {
    std::vector<double> v;
    for (const auto& t : e_.values) v.push_back(number(t));
    return v;
  }
  bool boolean() const {
    const std::string& t = single();
    if (t == "true" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "no" || t == "0") return false;
    fail("expected true or false");
  }
  const std::vector<std::string>& values() const { return e_.values; }

 private:
  std::string field_;
  const Entry& e_;
};

using Handler = std::function<void(const Reader&)>;

void apply_block(const std::string& name, const Block& block, const std::map<std::string, Handler>& handlers) {
  for (const auto& [key, entry] : block) {
    const auto it = handlers.find(key);
    if (it == handlers.end()) {
      std::string known;
      for (const auto& [k, _] : handlers) known += (known.empty() ? "" : ", ") + k;
      throw ConfigError(fmt::format("unknown key '{}' in block '{}' (known: {})", key, name, known), entry.line,
                        name + "." + key);
    }
    it->second(Reader(name + "." + key, entry));
  }
}

std::size_t positive_size(const Reader& r, long long min) {
  const long long v = r.integer();
  if (v < min) r.fail(fmt::format("must be >= {} (got {})", min, v));
  return static_cast<std::size_t>(v);
}

Point point_value(const Reader& r, int dim) {
  const auto v = r.reals();
  if (v.size() != static_cast<std::size_t>(dim)) r.fail(fmt::format("expected {} coordinate(s)", dim));
  return {v[0], dim > 1 ? v[1] : 0.0};
}

std::string number_text(double v) { return fmt::format("{:.17g}", v); }

std::string list_text(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : ",") + number_text(x);
  return out;
}

}  // namespace

Domain ExperimentConfig::make_domain() const {
  Domain d;
  d.dim = domain.dim;
  d.lower = domain.lo;
  d.upper = domain.hi;
  if (d.dim == 1) d.lower[1] = d.upper[1] = 0.0;
  if (domain.x0) {
    d.x0 = *domain.x0;
  } else {
    for (int a = 0; a < d.dim; ++a) d.x0[a] = d.lower[a] - (d.upper[a] - d.lower[a]);
  }
  if (d.dim == 1) d.x0[1] = 0.0;
  return d;
}

Mesh ExperimentConfig::make_mesh() const { return build_mesh(make_domain(), domain.n); }

CarlemanParams ExperimentConfig::carleman_params(double s, double lambda) const {
  CarlemanParams p;
  p.s = s;
  p.lambda = lambda;
  p.tau = carleman.tau;
  p.T = time.T;
  return p;
}

ExperimentConfig parse_config(const std::string& text) {
  const auto blocks = parse_blocks(text);
  ExperimentConfig c;
  for (const char* required : {"domain", "time"})
    if (!blocks.count(required)) throw ConfigError(std::string("missing required block '") + required + "'", 0, required);

  std::map<std::string, std::map<std::string, Handler>> schema;
  // dim first so the coordinate handlers can use it
  if (const auto it = blocks.at("domain").first.find("dim"); it != blocks.at("domain").first.end()) {
    const Reader r("domain.dim", it->second);
    const long long d = r.integer();
    if (d != 1 && d != 2) r.fail("must be 1 or 2");
    c.domain.dim = static_cast<int>(d);
  }
  schema["domain"] = {
      {"dim", [](const Reader&) {}},
      {"lo", [&](const Reader& r) { c.domain.lo = point_value(r, c.domain.dim); }},
      {"hi", [&](const Reader& r) { c.domain.hi = point_value(r, c.domain.dim); }},
      {"x0", [&](const Reader& r) { c.domain.x0 = point_value(r, c.domain.dim); }},
      {"n",
       [&](const Reader& r) {
         const auto& v = r.values();
         if (v.empty() || v.size() > 2) r.fail("expected 1 or 2 cell counts");
         for (std::size_t a = 0; a < 2; ++a) {
           const long long n = r.integer(v[std::min(a, v.size() - 1)]);
           if (n < 4) r.fail(fmt::format("needs at least 4 cells per axis (got {})", n));
           c.domain.n[a] = static_cast<int>(n);
         }
       }},
  };
  schema["time"] = {
      {"T", [&](const Reader& r) { c.time.T = r.real(); }},
      {"steps", [&](const Reader& r) { c.time.steps = static_cast<int>(positive_size(r, 1)); }},
  };
  schema["mc"] = {
      {"paths", [&](const Reader& r) { c.mc.paths = positive_size(r, 2); }},
      {"base_seed", [&](const Reader& r) { c.mc.base_seed = r.u64(); }},
  };
  schema["carleman"] = {
      {"s", [&](const Reader& r) { c.carleman.s = r.reals(); }},
      {"lambda", [&](const Reader& r) { c.carleman.lambda = r.reals(); }},
      {"tau",
       [&](const Reader& r) {
         if (r.single() == "auto") {
           c.carleman.tau.reset();
         } else {
           c.carleman.tau = r.real();
         }
       }},
      {"margins", [&](const Reader& r) { c.carleman.margins = r.reals(); }},
  };
  auto profile = [](ProfileSpec& target) {
    return [&target](const Reader& r) {
      try {
        target = ProfileSpec::parse(r.single());
      } catch (const std::invalid_argument& e) {
        r.fail(e.what());
      }
    };
  };
  schema["coefficients"] = {
      {"b1", profile(c.coefficients.b1)}, {"a2", profile(c.coefficients.a2)}, {"a3", profile(c.coefficients.a3)},
      {"f", profile(c.coefficients.f)},   {"g", profile(c.coefficients.g)},
      {"g_real", [&](const Reader& r) { c.coefficients.g_real = r.boolean(); }},
  };
  auto nonlinear = [](NonlinearityProfile& target) {
    return [&target](const Reader& r) {
      try {
        target = NonlinearityProfile::parse(r.single());
      } catch (const std::invalid_argument& e) {
        r.fail(e.what());
      }
    };
  };
  schema["nonlinearity"] = {{"F1", nonlinear(c.nonlinearity.F1)}, {"F2", nonlinear(c.nonlinearity.F2)}};
  schema["ensemble"] = {
      {"members", [&](const Reader& r) { c.ensemble.members = positive_size(r, 1); }},
      {"modes", [&](const Reader& r) { c.ensemble.modes = positive_size(r, 1); }},
      {"seed", [&](const Reader& r) { c.ensemble.seed = r.u64(); }},
  };
  schema["identity"] = {
      {"points", [&](const Reader& r) { c.identity.points = positive_size(r, 1); }},
      {"seed", [&](const Reader& r) { c.identity.seed = r.u64(); }},
      {"fd_h", [&](const Reader& r) { c.identity.fd_h = r.real(); }},
  };
  schema["inverse"] = {
      {"alpha", [&](const Reader& r) { c.inverse.alpha = r.real(); }},
      {"max_iter", [&](const Reader& r) { c.inverse.max_iter = static_cast<int>(positive_size(r, 1)); }},
      {"rel_tol", [&](const Reader& r) { c.inverse.rel_tol = r.real(); }},
      {"pairs", [&](const Reader& r) { c.inverse.pairs = positive_size(r, 1); }},
      {"path_index", [&](const Reader& r) { c.inverse.path_index = r.u64(); }},
  };
  schema["output"] = {
      {"directory", [&](const Reader& r) { c.output.directory = r.single(); }},
      {"emit_trajectories", [&](const Reader& r) { c.output.emit_trajectories = r.boolean(); }},
  };

  for (const auto& [name, block] : blocks) {
    const auto it = schema.find(name);
    if (it == schema.end()) {
      std::string known;
      for (const auto& [k, _] : schema) known += (known.empty() ? "" : ", ") + k;
      throw ConfigError(fmt::format("unknown block '{}' (known: {})", name, known), block.second, name);
    }
    apply_block(name, block.first, it->second);
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'", 0, "");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& field, const std::string& what) { throw ConfigError(field + ": " + what, 0, field); };
  const Domain domain = c.make_domain();
  for (int a = 0; a < c.domain.dim; ++a)
    if (!(domain.lower[a] < domain.upper[a])) fail("domain.lo", "must be below domain.hi on every axis");
  if (domain.observer_distance() <= 0.0)
    fail("domain.x0", fmt::format("observer point must lie outside the closed domain (distance {:.6g})",
                                  domain.observer_distance()));
  if (!(c.time.T > 0.0)) fail("time.T", "must be positive");
  if (c.carleman.s.empty()) fail("carleman.s", "needs at least one value");
  if (c.carleman.lambda.empty()) fail("carleman.lambda", "needs at least one value");
  for (double s : c.carleman.s)
    if (!(s > 0.0)) fail("carleman.s", "values must be positive");
  for (double l : c.carleman.lambda)
    if (!(l > 0.0)) fail("carleman.lambda", "values must be positive");
  if (c.carleman.tau && !(*c.carleman.tau > 0.0)) fail("carleman.tau", "must be positive or auto");
  for (double m : c.carleman.margins)
    if (!(m > 0.0 && m < c.time.T / 2)) fail("carleman.margins", "values must lie in (0, T/2)");
  const double dt = c.time.T / c.time.steps;
  for (double s : c.carleman.s) {
    for (double l : c.carleman.lambda) {
      try {
        WeightSetup(c.carleman_params(s, l), domain).check_cap(dt);
      } catch (const std::domain_error& e) {
        fail("carleman.lambda", fmt::format("s = {:.6g}, lambda = {:.6g}: {}", s, l, e.what()));
      }
    }
  }
  try {
    (void)c.coefficients.build(domain);
  } catch (const std::invalid_argument& e) {
    fail("coefficients", e.what());
  }
  if (!(c.identity.fd_h > 0.0)) fail("identity.fd_h", "must be positive");
  if (!(c.inverse.alpha > 0.0)) fail("inverse.alpha", "must be positive");
  if (!(c.inverse.rel_tol > 0.0)) fail("inverse.rel_tol", "must be positive");
  if (c.output.directory.empty()) fail("output.directory", "must not be empty");
}

std::string canonical_text(const ExperimentConfig& c) {
  const Domain d = c.make_domain();
  std::string out;
  auto line = [&](const std::string& key, const std::string& value) { out += key + "=" + value + "\n"; };
  line("domain.dim", std::to_string(d.dim));
  line("domain.lo", list_text({d.lower[0], d.lower[1]}));
  line("domain.hi", list_text({d.upper[0], d.upper[1]}));
  line("domain.x0", list_text({d.x0[0], d.x0[1]}));
  line("domain.n", fmt::format("{},{}", c.domain.n[0], d.dim == 2 ? c.domain.n[1] : 0));
  line("time.T", number_text(c.time.T));
  line("time.steps", std::to_string(c.time.steps));
  line("mc.paths", std::to_string(c.mc.paths));
  line("mc.base_seed", std::to_string(c.mc.base_seed));
  line("carleman.s", list_text(c.carleman.s));
  line("carleman.lambda", list_text(c.carleman.lambda));
  line("carleman.tau", c.carleman.tau ? number_text(*c.carleman.tau) : "auto");
  line("carleman.margins", list_text(c.carleman.margins));
  line("coefficients.b1", c.coefficients.b1.to_string());
  line("coefficients.a2", c.coefficients.a2.to_string());
  line("coefficients.a3", c.coefficients.a3.to_string());
  line("coefficients.f", c.coefficients.f.to_string());
  line("coefficients.g", c.coefficients.g.to_string());
  line("coefficients.g_real", c.coefficients.g_real ? "true" : "false");
  line("nonlinearity.F1", c.nonlinearity.F1.to_string());
  line("nonlinearity.F2", c.nonlinearity.F2.to_string());
  line("ensemble.members", std::to_string(c.ensemble.members));
  line("ensemble.modes", std::to_string(c.ensemble.modes));
  line("ensemble.seed", std::to_string(c.ensemble.seed));
  line("identity.points", std::to_string(c.identity.points));
  line("identity.seed", std::to_string(c.identity.seed));
  line("identity.fd_h", number_text(c.identity.fd_h));
  line("inverse.alpha", number_text(c.inverse.alpha));
  line("inverse.max_iter", std::to_string(c.inverse.max_iter));
  line("inverse.rel_tol", number_text(c.inverse.rel_tol));
  line("inverse.pairs", std::to_string(c.inverse.pairs));
  line("inverse.path_index", std::to_string(c.inverse.path_index));
  line("output.emit_trajectories", c.output.emit_trajectories ? "true" : "false");
  return out;
}

std::string fingerprint(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : canonical_text(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace sselab
