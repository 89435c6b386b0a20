#include "dilatio/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

namespace dilatio {

namespace {

[[noreturn]] void fail_at(const std::string& what, int line, int column) { throw ConfigError(what, line, column); }

const char* type_name(Value::Type t) {
  switch (t) {
    case Value::Type::Number:
      return "number";
    case Value::Type::Word:
      return "word";
    case Value::Type::String:
      return "string";
    case Value::Type::List:
      return "list";
  }
  return "value";
}

/// Typed access to the entries of one block; every key must be consumed.
class Reader {
 public:
  explicit Reader(const Block& block) : block_(block) {}

  std::string where() const { return block_.kind + (block_.id.empty() ? "" : " '" + block_.id + "'"); }

  const Value* get(const std::string& key) {
    const Entry* e = block_.find(key);
    if (!e) return nullptr;
    used_.insert(key);
    return &e->value;
  }

  const Value& need(const std::string& key) {
    const Value* v = get(key);
    if (!v) fail_at("missing key '" + key + "' in " + where(), block_.line, block_.column);
    return *v;
  }

  static double as_number(const Value& v, const std::string& key) {
    if (v.type != Value::Type::Number)
      fail_at("key '" + key + "' expects a number, got a " + type_name(v.type), v.line, v.column);
    return v.number;
  }

  double number(const std::string& key) { return as_number(need(key), key); }
  double number(const std::string& key, double fallback) {
    const Value* v = get(key);
    return v ? as_number(*v, key) : fallback;
  }
  std::optional<double> optional_number(const std::string& key) {
    const Value* v = get(key);
    if (!v) return std::nullopt;
    return as_number(*v, key);
  }

  long long integer(const std::string& key, long long fallback, long long min_value) {
    const Value* v = get(key);
    if (!v) return fallback;
    const double d = as_number(*v, key);
    if (d != std::floor(d) || d < double(min_value) || d > 9.0e15)
      fail_at("key '" + key + "' expects an integer >= " + std::to_string(min_value), v->line, v->column);
    return static_cast<long long>(d);
  }

  std::string word(const std::string& key) {
    const Value& v = need(key);
    if (v.type != Value::Type::Word && v.type != Value::Type::String)
      fail_at("key '" + key + "' expects a name, got a " + type_name(v.type), v.line, v.column);
    return v.text;
  }
  std::string word(const std::string& key, const std::string& fallback) { return block_.find(key) ? word(key) : fallback; }

  std::vector<double> numbers(const std::string& key) {
    const Value& v = need(key);
    if (v.type != Value::Type::List) fail_at("key '" + key + "' expects a list of numbers", v.line, v.column);
    std::vector<double> out;
    for (const auto& item : v.items) out.push_back(as_number(item, key));
    return out;
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    return block_.find(key) ? numbers(key) : fallback;
  }

  Vector vector(const std::string& key) {
    const std::vector<double> v = numbers(key);
    if (v.empty()) {
      const Value& val = need(key);
      fail_at("key '" + key + "' expects a non-empty list", val.line, val.column);
    }
    return Eigen::Map<const Vector>(v.data(), Index(v.size()));
  }

  std::vector<std::vector<double>> rows(const std::string& key) {
    const Value& v = need(key);
    if (v.type != Value::Type::List) fail_at("key '" + key + "' expects a list of lists", v.line, v.column);
    std::vector<std::vector<double>> out;
    for (const auto& row : v.items) {
      if (row.type != Value::Type::List) fail_at("key '" + key + "' expects a list of lists", row.line, row.column);
      std::vector<double> r;
      for (const auto& item : row.items) r.push_back(as_number(item, key));
      out.push_back(std::move(r));
    }
    return out;
  }

  std::vector<std::string> words(const std::string& key) {
    const Value& v = need(key);
    if (v.type != Value::Type::List) fail_at("key '" + key + "' expects a list of names", v.line, v.column);
    std::vector<std::string> out;
    for (const auto& item : v.items) {
      if (item.type != Value::Type::Word && item.type != Value::Type::String)
        fail_at("key '" + key + "' expects a list of names", item.line, item.column);
      out.push_back(item.text);
    }
    return out;
  }

  const Value& position(const std::string& key) const {
    const Entry* e = block_.find(key);
    return e ? e->value : dummy_;
  }

  void finish() const {
    for (const auto& e : block_.entries)
      if (!used_.count(e.key)) fail_at("unknown key '" + e.key + "' in " + where(), e.line, e.column);
  }

  const Block& block() const { return block_; }

 private:
  const Block& block_;
  std::set<std::string> used_;
  Value dummy_;
};

/// Runs a construction step and reports library errors at the block.
template <typename F>
auto guarded(const Block& block, F&& make) {
  try {
    return make();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail_at(block.kind + " '" + block.id + "': " + e.what(), block.line, block.column);
  }
}

class Resolver {
 public:
  explicit Resolver(const ConfigTree& tree, ScenarioConfig& out) : out_(out) {
    for (const auto& b : tree.blocks) {
      if (b.kind == "budget" || b.kind == "output") {
        if (!b.id.empty()) fail_at(b.kind + " block takes no id", b.line, b.column);
        if (singletons_.count(b.kind)) fail_at("duplicate " + b.kind + " block", b.line, b.column);
        singletons_[b.kind] = &b;
        continue;
      }
      if (b.kind != "measure" && b.kind != "body" && b.kind != "function" && b.kind != "check")
        fail_at("unknown block kind '" + b.kind + "'", b.line, b.column);
      if (b.id.empty()) fail_at(b.kind + " block needs an id", b.line, b.column);
      auto& table = blocks_[b.kind];
      if (table.count(b.id)) fail_at("duplicate " + b.kind + " id '" + b.id + "'", b.line, b.column);
      table[b.id] = &b;
      if (b.kind == "check") check_order_.push_back(&b);
    }
  }

  void run() {
    if (auto it = singletons_.find("budget"); it != singletons_.end()) read_budget(*it->second);
    if (auto it = singletons_.find("output"); it != singletons_.end()) {
      Reader r(*it->second);
      out_.out_dir = r.word("dir", out_.out_dir);
      r.finish();
    }
    for (const auto& [id, b] : blocks_["measure"]) measure(id, *b);
    for (const auto& [id, b] : blocks_["body"]) body(id, *b);
    for (const auto& [id, b] : blocks_["function"]) function(id, *b);
    for (const Block* b : check_order_) out_.checks.push_back(check(*b));
  }

 private:
  void read_budget(const Block& b) {
    Reader r(b);
    EstimationBudget& bud = out_.budget;
    bud.samples = std::uint64_t(r.integer("samples", (long long)bud.samples, 1));
    bud.nodes = int(r.integer("nodes", bud.nodes, 8));
    bud.max_intervals = int(r.integer("max_intervals", bud.max_intervals, 1));
    bud.seed = std::uint64_t(r.integer("seed", (long long)bud.seed, 0));
    bud.abs_tol = r.number("abs_tol", bud.abs_tol);
    bud.rel_tol = r.number("rel_tol", bud.rel_tol);
    if (b.find("method")) {
      const std::string m = r.word("method");
      try {
        bud.method = method_from_string(m);
      } catch (const Error& e) {
        const Value& v = r.position("method");
        fail_at(e.what(), v.line, v.column);
      }
    }
    r.finish();
  }

  const Block& lookup(const std::string& kind, const std::string& id, const Value& at) {
    auto& table = blocks_[kind];
    auto it = table.find(id);
    if (it == table.end()) fail_at("unknown " + kind + " id '" + id + "'", at.line, at.column);
    return *it->second;
  }

  void enter(const std::string& kind, const std::string& id, const Block& b) {
    if (!visiting_.insert(kind + ":" + id).second) fail_at("cyclic reference through " + kind + " '" + id + "'", b.line, b.column);
  }
  void leave(const std::string& kind, const std::string& id) { visiting_.erase(kind + ":" + id); }

  const Measure& measure_ref(Reader& r, const std::string& key) {
    const std::string id = r.word(key);
    const Value& at = r.position(key);
    return measure(id, lookup("measure", id, at));
  }
  const Body& body_ref(Reader& r, const std::string& key) {
    const std::string id = r.word(key);
    return body(id, lookup("body", id, r.position(key)));
  }
  const QcFunction& function_ref(Reader& r, const std::string& key) {
    const std::string id = r.word(key);
    return function(id, lookup("function", id, r.position(key)));
  }

  const Measure& measure(const std::string& id, const Block& b) {
    if (auto it = out_.measures.find(id); it != out_.measures.end()) return it->second;
    enter("measure", id, b);
    Reader r(b);
    const std::string kind = r.word("kind");
    Measure m = guarded(b, [&]() -> Measure {
      if (kind == "gaussian") return Measure::gaussian(Index(r.integer("dim", 1, 1)), r.number("sigma", 1.0));
      if (kind == "one-sided-exponential") return Measure::one_sided_exponential();
      if (kind == "symmetric-exponential") return Measure::symmetric_exponential();
      if (kind == "uniform") return Measure::uniform(body_ref(r, "support"));
      if (kind == "product") return Measure::product(measure_ref(r, "first"), measure_ref(r, "second"));
      if (kind == "perturbed")
        return Measure::perturbed(measure_ref(r, "base"), r.number("bound"), r.number("frequency", 1.0));
      const Value& v = r.position("kind");
      fail_at("unknown measure kind '" + kind + "'", v.line, v.column);
    });
    if (auto k = r.optional_number("kappa")) {
      if (!(*k > 0)) fail_at("kappa must be positive", r.position("kappa").line, r.position("kappa").column);
      m = m.with_kappa(*k, "config: measure '" + id + "'");
    }
    r.finish();
    leave("measure", id);
    return out_.measures.emplace(id, m).first->second;
  }

  const Body& body(const std::string& id, const Block& b) {
    if (auto it = out_.bodies.find(id); it != out_.bodies.end()) return it->second;
    enter("body", id, b);
    Reader r(b);
    const std::string kind = r.word("kind");
    Body k = guarded(b, [&]() -> Body {
      if (kind == "euclidean-ball") return Body::ball(Index(r.integer("dim", 1, 1)), r.number("radius", 1.0));
      if (kind == "interval") return Body::interval(r.number("half_width"));
      if (kind == "ellipsoid") return Body::ellipsoid(r.vector("semi_axes"));
      if (kind == "lp-ball")
        return Body::lp_ball(Index(r.integer("dim", 2, 1)), r.number("p"), r.number("radius", 1.0));
      if (kind == "box") return Body::box(r.vector("half_widths"));
      if (kind == "h-polytope") {
        const auto rows = r.rows("normals");
        const Vector offsets = r.vector("offsets");
        if (rows.empty() || rows.front().empty()) fail_at("h-polytope needs normals", b.line, b.column);
        Matrix normals(Index(rows.size()), Index(rows.front().size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (rows[i].size() != rows.front().size())
            fail_at("h-polytope normals differ in length", r.position("normals").line, r.position("normals").column);
          for (std::size_t j = 0; j < rows[i].size(); ++j) normals(Index(i), Index(j)) = rows[i][j];
        }
        return Body::polytope(normals, offsets);
      }
      if (kind == "scaled") return Body::scaled(body_ref(r, "body"), r.number("factor"));
      if (kind == "intersection") {
        std::vector<Body> parts;
        for (const auto& child : r.words("bodies")) parts.push_back(body(child, lookup("body", child, r.position("bodies"))));
        return Body::intersection(parts);
      }
      const Value& v = r.position("kind");
      fail_at("unknown body kind '" + kind + "'", v.line, v.column);
    });
    r.finish();
    leave("body", id);
    return out_.bodies.emplace(id, k).first->second;
  }

  const QcFunction& function(const std::string& id, const Block& b) {
    if (auto it = out_.functions.find(id); it != out_.functions.end()) return it->second;
    enter("function", id, b);
    Reader r(b);
    const std::string kind = r.word("kind");
    auto dim = [&] { return Index(r.integer("dim", 1, 1)); };
    QcFunction f = guarded(b, [&]() -> QcFunction {
      if (kind == "constant") return QcFunction::constant(dim(), r.number("value", 1.0));
      if (kind == "radial") return QcFunction::radial(dim(), r.number("p"));
      if (kind == "gauge-power") return QcFunction::gauge_power(body_ref(r, "body"), r.number("p", 1.0));
      if (kind == "shifted-radial") return QcFunction::shifted_radial(dim(), r.number("offset"), r.number("s"));
      if (kind == "min-cap") return QcFunction::min_cap(function_ref(r, "function"), r.number("level"));
      if (kind == "max-floor") return QcFunction::max_floor(function_ref(r, "function"), r.number("level"));
      if (kind == "f-sigma") return QcFunction::f_sigma(body_ref(r, "body"), r.number("sigma"));
      if (kind == "gaussian-ratio") return QcFunction::gaussian_ratio(dim(), r.number("sigma"));
      if (kind == "affine")
        return QcFunction::affine(function_ref(r, "function"), r.number("scale", 1.0), r.number("shift", 0.0));
      if (kind == "power") return QcFunction::power(function_ref(r, "function"), r.number("q"));
      const Value& v = r.position("kind");
      fail_at("unknown function kind '" + kind + "'", v.line, v.column);
    });
    r.finish();
    leave("function", id);
    return out_.functions.emplace(id, f).first->second;
  }

  KappaClaim kappa_for(Reader& r, const Measure& m, const std::string& key = "kappa") {
    const std::optional<double> user = r.optional_number(key);
    try {
      KappaClaim k = resolve_kappa(m, user);
      if (user) k.provenance = "config: check '" + r.block().id + "'";
      return k;
    } catch (const Error& e) {
      fail_at(r.where() + ": " + e.what(), r.block().line, r.block().column);
    }
  }

  template <typename Enum, typename Parse>
  Enum variant(Reader& r, const std::string& fallback, Parse parse) {
    const std::string name = r.word("variant", fallback);
    try {
      return parse(name);
    } catch (const Error& e) {
      const Value& v = r.position("variant");
      fail_at(e.what(), v.line, v.column);
    }
  }

  CheckSpec check(const Block& b) {
    Reader r(b);
    const std::string kind = r.word("kind");
    const auto& kinds = check_kinds();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
      const Value& v = r.position("kind");
      fail_at("unknown check kind '" + kind + "'", v.line, v.column);
    }
    CheckSpec spec{b.id, kind, {}};
    auto single = [](auto fn) -> CheckTask {
      return [fn](const EstimationBudget& bud) { return std::vector<CheckResult>{fn(bud)}; };
    };
    auto claim_tag = [](std::vector<CheckResult> rs, const KappaClaim& k) {
      for (auto& x : rs)
        if (x.kappa_provenance.empty() && x.kappa > 0) x.kappa_provenance = k.provenance;
      return rs;
    };

    if (kind == "dilation") {
      const Measure m = measure_ref(r, "measure");
      const Body k = body_ref(r, "body");
      const KappaClaim kc = kappa_for(r, m);
      spec.run = [=](const EstimationBudget& bud) { return claim_tag({check_dilation(m, k, kc.value, bud)}, kc); };
    } else if (kind == "one-sided-probe") {
      const Measure m = measure_ref(r, "measure");
      const double x = r.number("x");
      const double tol = r.number("tolerance", 1e-6);
      const KappaClaim kc = kappa_for(r, m);
      spec.run = [=](const EstimationBudget& bud) {
        return claim_tag({check_one_sided_probe(m, x, kc.value, tol, bud)}, kc);
      };
    } else if (kind == "entropy") {
      const Measure m = measure_ref(r, "measure");
      const QcFunction f = function_ref(r, "function");
      const EntropyVariant v = variant<EntropyVariant>(r, "master", entropy_variant_from_string);
      const KappaClaim kc = kappa_for(r, m);
      spec.run = [=](const EstimationBudget& bud) {
        return claim_tag({check_entropy_bounds(m, f, kc.value, v, bud)}, kc);
      };
    } else if (kind == "lsi") {
      const Measure m = measure_ref(r, "measure");
      const QcFunction f = function_ref(r, "function");
      const LsiVariant v = variant<LsiVariant>(r, "cauchy-schwarz", lsi_variant_from_string);
      const std::optional<double> poincare = r.optional_number("poincare");
      const KappaClaim kc = kappa_for(r, m);
      spec.run = [=](const EstimationBudget& bud) {
        return claim_tag({check_lsi(m, f, kc.value, v, bud, poincare)}, kc);
      };
    } else if (kind == "gaussian-suite") {
      const QcFunction f = function_ref(r, "function");
      spec.run = [=](const EstimationBudget& bud) { return check_gaussian_suite(f, bud); };
    } else if (kind == "moment-suite") {
      const Measure m = measure_ref(r, "measure");
      const QcFunction f = function_ref(r, "function");
      std::vector<MomentPair> pairs;
      if (b.find("pairs")) {
        for (const auto& row : r.rows("pairs")) {
          if (row.size() != 2) {
            const Value& v = r.position("pairs");
            fail_at("moment pairs are [p, q]", v.line, v.column);
          }
          pairs.push_back({row[0], row[1]});
        }
        if (b.find("p") || b.find("q")) fail_at("use either pairs or p and q", b.line, b.column);
      } else {
        pairs = {{r.number("p", 1.0), r.number("q", 2.0)}};
      }
      const std::optional<double> alpha = r.optional_number("alpha");
      const KappaClaim kc = kappa_for(r, m);
      spec.run = [=](const EstimationBudget& bud) {
        return claim_tag(check_moment_suite(m, f, kc.value, pairs, alpha, bud), kc);
      };
    } else if (kind == "negative-suite") {
      const Measure m = measure_ref(r, "measure");
      const QcFunction f = function_ref(r, "function");
      const std::vector<double> p = r.numbers("p", {0.1, 0.3, 0.5});
      const double eps_beta = r.number("eps_beta", 0.5);
      const std::vector<double> t = r.numbers("t", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
      const KappaClaim kc = kappa_for(r, m);
      spec.run = [=](const EstimationBudget& bud) {
        return claim_tag(check_negative_suite(m, f, kc.value, p, eps_beta, t, bud), kc);
      };
    } else if (kind == "isoperimetry") {
      const Measure m = measure_ref(r, "measure");
      const Body k = body_ref(r, "body");
      const double p = r.number("p", 2.0);
      const KappaClaim kc = kappa_for(r, m);
      spec.run = [=](const EstimationBudget& bud) { return claim_tag(check_isoperimetry(m, k, kc.value, p, bud), kc); };
    } else if (kind == "coarea") {
      const Measure m = measure_ref(r, "measure");
      const QcFunction f = function_ref(r, "function");
      const double p = r.number("p", 1.0);
      const std::string sign = r.word("sign", "positive");
      if (sign != "positive" && sign != "negative") {
        const Value& v = r.position("sign");
        fail_at("sign must be positive or negative", v.line, v.column);
      }
      const CoareaSign s = sign == "positive" ? CoareaSign::Positive : CoareaSign::Negative;
      spec.run = single([=](const EstimationBudget& bud) { return check_coarea(m, f, p, s, bud); });
    } else if (kind == "reconstruction") {
      const Measure m = measure_ref(r, "measure");
      const Body k = body_ref(r, "body");
      const std::vector<double> sigmas = r.numbers("sigmas", default_sigma_ladder());
      const double tol = r.number("tolerance", 5e-3);
      const KappaClaim kc = kappa_for(r, m);
      spec.run = [=](const EstimationBudget& bud) {
        Reconstruction rec = reconstruct_dilation(m, k, kc.value, sigmas, bud, tol);
        std::vector<CheckResult> out{rec.result};
        out.insert(out.end(), rec.limits.begin(), rec.limits.end());
        return claim_tag(out, kc);
      };
    } else if (kind == "perturbation") {
      const Measure m = measure_ref(r, "measure");
      const double bound = r.number("bound");
      const int count = int(r.integer("count", 5, 1));
      const KappaClaim kc = kappa_for(r, m);
      spec.run = [=](const EstimationBudget& bud) {
        return check_perturbation(m, bound, kc.value, count, bud.seed, bud);
      };
    } else if (kind == "tensor-harmonic" || kind == "tensor-min" || kind == "tensor-exploratory") {
      const Measure first = measure_ref(r, "first");
      const Measure second = measure_ref(r, "second");
      const KappaClaim k1 = kappa_for(r, first, "kappa_first");
      const KappaClaim k2 = kappa_for(r, second, "kappa_second");
      if (kind == "tensor-harmonic") {
        const Body k = body_ref(r, "body");
        spec.run = single([=](const EstimationBudget& bud) {
          return check_tensor_harmonic(first, k1.value, second, k2.value, k, bud);
        });
      } else if (kind == "tensor-min") {
        const QcFunction f = function_ref(r, "function");
        spec.run = single([=](const EstimationBudget& bud) {
          return check_tensor_min(first, k1.value, second, k2.value, f, bud);
        });
      } else {
        const int trials = int(r.integer("trials", 4, 1));
        spec.run = single([=](const EstimationBudget& bud) {
          return explore_tensor_2x2(first, k1.value, second, k2.value, trials, bud);
        });
      }
    } else if (kind == "sharpness") {
      SharpnessOptions o;
      o.gaussian_t = r.numbers("gaussian_t", o.gaussian_t);
      o.ratio_upper = r.number("ratio_upper", o.ratio_upper);
      o.one_sided_x = r.numbers("one_sided_x", o.one_sided_x);
      o.exponential_t = r.numbers("exponential_t", o.exponential_t);
      o.borell_radius = r.number("borell_radius", o.borell_radius);
      o.borell_t = r.numbers("borell_t", o.borell_t);
      spec.run = [=](const EstimationBudget& bud) { return sharpness_probes(bud, o); };
    } else if (kind == "gaussian-ratio") {
      const double t = r.number("t");
      const double upper = r.number("upper", 1.01);
      spec.run = single([=](const EstimationBudget& bud) {
        SharpnessOptions o;
        o.gaussian_t = {t};
        o.ratio_upper = upper;
        o.one_sided_x.clear();
        o.exponential_t.clear();
        o.borell_t.clear();
        for (auto& x : sharpness_probes(bud, o))
          if (x.id == "gaussian-ratio-upper") return x;
        throw ConsistencyError("gaussian-ratio: probe missing");
      });
    }
    r.finish();
    return spec;
  }

  ScenarioConfig& out_;
  std::map<std::string, std::map<std::string, const Block*>> blocks_;
  std::map<std::string, const Block*> singletons_;
  std::vector<const Block*> check_order_;
  std::set<std::string> visiting_;
};

std::string num17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::ordered_json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

nlohmann::ordered_json estimate_json(const Estimate& e) {
  nlohmann::ordered_json j;
  j["value"] = finite_or_null(e.value);
  j["std_error"] = finite_or_null(e.std_error);
  j["method"] = e.method;
  j["budget"] = {{"samples", e.samples}};
  j["seed"] = e.seed;
  j["inconclusive"] = e.inconclusive;
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

}  // namespace

const CheckSpec* ScenarioConfig::find_check(const std::string& id) const {
  for (const auto& c : checks)
    if (c.id == id) return &c;
  return nullptr;
}

const std::vector<std::string>& check_kinds() {
  static const std::vector<std::string> kinds{
      "dilation",     "one-sided-probe", "entropy",         "lsi",        "gaussian-suite", "moment-suite",
      "negative-suite", "isoperimetry",  "coarea",          "reconstruction", "perturbation", "tensor-harmonic",
      "tensor-min",   "tensor-exploratory", "sharpness",    "gaussian-ratio"};
  return kinds;
}

ScenarioConfig load_scenario(const ConfigTree& tree) {
  ScenarioConfig sc;
  sc.tree = tree;
  Resolver(sc.tree, sc).run();
  return sc;
}

std::uint64_t check_seed(const std::string& id, std::uint64_t global_seed) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h ^ global_seed;
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("DILATIO_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return unsigned(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<CheckResult> run_checks(const ScenarioConfig& scenario, const RunOptions& options) {
  std::vector<const CheckSpec*> tasks;
  for (const auto& id : options.only)
    if (!scenario.find_check(id)) throw ConfigError("unknown check id '" + id + "' in --checks", 0, 0);
  for (const auto& c : scenario.checks)
    if (options.only.empty() || std::find(options.only.begin(), options.only.end(), c.id) != options.only.end())
      tasks.push_back(&c);

  std::vector<std::vector<CheckResult>> slots(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      const CheckSpec& spec = *tasks[i];
      const EstimationBudget bud = scenario.budget.with_seed(check_seed(spec.id, scenario.budget.seed));
      try {
        std::vector<CheckResult> rs = spec.run(bud);
        const bool single = rs.size() == 1 && !rs.front().id.empty() &&
                            (spec.kind != "gaussian-suite" && spec.kind != "moment-suite" &&
                             spec.kind != "negative-suite" && spec.kind != "isoperimetry" &&
                             spec.kind != "reconstruction" && spec.kind != "perturbation" && spec.kind != "sharpness");
        for (auto& r : rs) {
          r.id = single ? spec.id : spec.id + "/" + r.id;
          r.seed = bud.seed;
        }
        slots[i] = std::move(rs);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned cap = options.threads ? options.threads : default_thread_count();
  const unsigned count = unsigned(std::min<std::size_t>(cap, tasks.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!errors[i]) continue;
    const Block* block = nullptr;
    for (const auto& b : scenario.tree.blocks)
      if (b.kind == "check" && b.id == tasks[i]->id) block = &b;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      fail_at("check '" + tasks[i]->id + "': " + e.what(), block ? block->line : 0, block ? block->column : 0);
    }
  }
  std::vector<CheckResult> out;
  for (auto& s : slots)
    for (auto& r : s) out.push_back(std::move(r));
  std::sort(out.begin(), out.end(), [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });
  return out;
}

int exit_code(const std::vector<CheckResult>& results) {
  bool fail = false, inconclusive = false;
  for (const auto& r : results) {
    if (r.relation == Relation::Report) continue;
    fail = fail || r.status == Status::Fail;
    inconclusive = inconclusive || r.status == Status::Inconclusive;
  }
  return fail ? 1 : inconclusive ? 2 : 0;
}

std::string report_json(const std::vector<CheckResult>& results, const EstimationBudget& budget) {
  nlohmann::ordered_json j;
  j["budget"] = {{"method", to_string(budget.method)},
                 {"samples", budget.samples},
                 {"nodes", budget.nodes},
                 {"max_intervals", budget.max_intervals},
                 {"seed", budget.seed}};
  std::size_t counts[3] = {0, 0, 0};
  auto& arr = j["results"] = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    ++counts[int(r.status)];
    nlohmann::ordered_json x;
    x["id"] = r.id;
    x["relation"] = to_string(r.relation);
    x["lhs"] = estimate_json(r.lhs);
    x["rhs"] = estimate_json(r.rhs);
    x["kappa"] = r.kappa;
    x["kappa_provenance"] = r.kappa_provenance;
    x["margin"] = finite_or_null(r.margin);
    if (r.relation == Relation::Equal) x["tolerance"] = r.tolerance;
    x["status"] = to_string(r.status);
    x["witness"] = r.witness;
    x["seed"] = r.seed;
    if (!r.note.empty()) x["note"] = r.note;
    arr.push_back(std::move(x));
  }
  j["summary"] = {{"pass", counts[0]}, {"fail", counts[1]}, {"inconclusive", counts[2]}, {"exit_code", exit_code(results)}};
  return j.dump(2) + "\n";
}

std::string report_csv(const std::vector<CheckResult>& results) {
  std::string out = "id,lhs,rhs,stderr,status,seed\n";
  for (const auto& r : results)
    out += r.id + "," + num17(r.lhs.value) + "," + num17(r.rhs.value) + "," +
           num17(std::hypot(r.lhs.std_error, r.rhs.std_error)) + "," + to_string(r.status) + "," +
           std::to_string(r.seed) + "\n";
  return out;
}

SweepRequest parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--sweep expects param=a,b,c", 0, 0);
  SweepRequest req;
  req.parameter = text.substr(0, eq);
  std::string rest = text.substr(eq + 1);
  std::size_t start = 0;
  while (start <= rest.size()) {
    const auto comma = rest.find(',', start);
    const std::string item = rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size() || !std::isfinite(v))
      throw ConfigError("--sweep: non-numeric grid value '" + item + "'", 0, 0);
    req.grid.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return req;
}

std::string run_sweep(const ConfigTree& tree, const SweepRequest& request, std::optional<std::uint64_t> seed,
                      std::optional<std::uint64_t> samples, unsigned threads) {
  std::vector<std::size_t> candidates;
  std::string key = request.parameter;
  for (std::size_t i = 0; i < tree.blocks.size(); ++i) {
    const Block& b = tree.blocks[i];
    if (b.kind != "check") continue;
    const std::string prefix = b.id + ".";
    if (request.parameter.rfind(prefix, 0) == 0) {
      candidates = {i};
      key = request.parameter.substr(prefix.size());
      break;
    }
    if (b.find(request.parameter)) candidates.push_back(i);
  }
  if (candidates.empty()) {
    std::size_t checks = 0, last = 0;
    for (std::size_t i = 0; i < tree.blocks.size(); ++i)
      if (tree.blocks[i].kind == "check") ++checks, last = i;
    if (checks != 1) throw ConfigError("--sweep: no check has parameter '" + request.parameter + "'", 0, 0);
    candidates = {last};
  }
  if (candidates.size() > 1)
    throw ConfigError("--sweep: parameter '" + request.parameter + "' is ambiguous; use check-id.key", 0, 0);
  const Block& target = tree.blocks[candidates.front()];
  if (key == "kind" || key == "measure" || key == "body" || key == "function")
    throw ConfigError("--sweep: parameter '" + key + "' is not numeric", target.line, target.column);
  if (const Entry* e = target.find(key); e && e->value.type != Value::Type::Number)
    throw ConfigError("--sweep: parameter '" + key + "' is not numeric", e->line, e->column);

  std::string out = "value,lhs,rhs,margin,stderr,id\n";
  for (double v : request.grid) {
    ConfigTree copy = tree;
    Block& b = copy.blocks[candidates.front()];
    if (Entry* e = b.find(key)) {
      e->value = Value::of_number(v);
    } else {
      b.entries.push_back({key, Value::of_number(v), b.line, b.column});
    }
    ScenarioConfig sc = load_scenario(copy);
    if (seed) sc.budget.seed = *seed;
    if (samples) sc.budget.samples = *samples;
    for (const auto& r : run_checks(sc, {{b.id}, threads}))
      out += num17(v) + "," + num17(r.lhs.value) + "," + num17(r.rhs.value) + "," + num17(r.margin) + "," +
             num17(std::hypot(r.lhs.std_error, r.rhs.std_error)) + "," + r.id + "\n";
  }
  return out;
}

}  // namespace dilatio
