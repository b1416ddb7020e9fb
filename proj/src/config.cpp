#include "magwaist/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "magwaist/errors.hpp"
#include "magwaist/presets.hpp"

namespace magwaist {

namespace {

[[noreturn]] void fail(int line, int column, const std::string& msg) {
    std::ostringstream os;
    if (line > 0) os << "line " << line << ", ";
    os << "column " << column << ": " << msg;
    throw ConfigError(os.str());
}

}  // namespace

// ---------------------------------------------------------------------------
// Expressions

struct Expression::Node {
    enum class Op { Num, Var, Add, Sub, Mul, Neg, Pow, Sin, Cos } op = Op::Num;
    double num = 0.0;
    int var = 0;
    int power = 0;
    std::shared_ptr<const Node> a, b;

    double eval(const Vec2& q) const {
        switch (op) {
            case Op::Num: return num;
            case Op::Var: return q(var);
            case Op::Add: return a->eval(q) + b->eval(q);
            case Op::Sub: return a->eval(q) - b->eval(q);
            case Op::Mul: return a->eval(q) * b->eval(q);
            case Op::Neg: return -a->eval(q);
            case Op::Pow: return std::pow(a->eval(q), power);
            case Op::Sin: return std::sin(a->eval(q));
            case Op::Cos: return std::cos(a->eval(q));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr make_node(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

class Parser {
public:
    Parser(const std::string& s, const std::vector<std::string>& vars, int line, int col0)
        : s_(s), vars_(vars), line_(line), col0_(col0) {}

    NodePtr parse() {
        skip();
        if (pos_ >= s_.size()) error("empty expression");
        NodePtr n = expr();
        skip();
        if (pos_ < s_.size()) error(std::string("unexpected '") + s_[pos_] + "'");
        return n;
    }

private:
    [[noreturn]] void error(const std::string& msg) const {
        fail(line_, col0_ + static_cast<int>(pos_), msg);
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        NodePtr n = term();
        for (;;) {
            if (accept('+')) n = make_node(Op::Add, n, term());
            else if (accept('-')) n = make_node(Op::Sub, n, term());
            else return n;
        }
    }

    NodePtr term() {
        NodePtr n = unary();
        while (accept('*')) n = make_node(Op::Mul, n, unary());
        return n;
    }

    NodePtr unary() {
        if (accept('-')) return make_node(Op::Neg, unary());
        return power();
    }

    NodePtr power() {
        NodePtr n = primary();
        if (!accept('^')) return n;
        skip();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (start == pos_) error("expected a non-negative integer exponent");
        if (pos_ - start > 3) {
            pos_ = start;
            error("exponent too large");
        }
        auto p = std::make_shared<Expression::Node>();
        p->op = Op::Pow;
        p->a = n;
        p->power = std::stoi(s_.substr(start, pos_ - start));
        return p;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) error("unexpected end of expression");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr n = expr();
            if (!accept(')')) error("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return word();
        error(std::string("unexpected '") + c + "'");
    }

    NodePtr number() {
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) error("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Num;
        n->num = v;
        return n;
    }

    NodePtr word() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        const std::string w = s_.substr(start, pos_ - start);
        if (w == "pi") {
            auto n = std::make_shared<Expression::Node>();
            n->num = std::numbers::pi;
            return n;
        }
        if (w == "sin" || w == "cos") {
            if (!accept('(')) error("expected '(' after " + w);
            NodePtr arg = expr();
            if (!accept(')')) error("expected ')'");
            return make_node(w == "sin" ? Op::Sin : Op::Cos, arg);
        }
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            if (w == vars_[i]) {
                auto n = std::make_shared<Expression::Node>();
                n->op = Op::Var;
                n->var = static_cast<int>(i);
                return n;
            }
        }
        pos_ = start;
        error("unknown identifier '" + w + "'");
    }

    const std::string& s_;
    const std::vector<std::string>& vars_;
    int line_;
    int col0_;
    std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables,
                             int line, int column0) {
    Expression e;
    e.root_ = Parser(text, variables, line, column0).parse();
    e.text_ = text;
    return e;
}

double Expression::operator()(const Vec2& q) const { return root_->eval(q); }

bool Expression::is_zero() const { return root_->op == Op::Num && root_->num == 0.0; }

// ---------------------------------------------------------------------------
// Config files

namespace {

std::string trim(const std::string& s, std::size_t* lead = nullptr) {
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    std::size_t e = s.size();
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    if (lead) *lead = b;
    return s.substr(b, e - b);
}

double to_double(const std::string& v, int line, int column) {
    const char* begin = v.c_str();
    char* end = nullptr;
    const double d = std::strtod(begin, &end);
    if (v.empty() || end != begin + v.size() || !std::isfinite(d))
        fail(line, column, "expected a number, got '" + v + "'");
    return d;
}

long long to_int(const std::string& v, int line, int column, long long lo) {
    const char* begin = v.c_str();
    char* end = nullptr;
    const long long i = std::strtoll(begin, &end, 10);
    if (v.empty() || end != begin + v.size()) fail(line, column, "expected an integer, got '" + v + "'");
    if (i < lo) fail(line, column, "value must be at least " + std::to_string(lo));
    return i;
}

}  // namespace

std::vector<double> parse_energy_grid(const std::string& text, int line, int column) {
    if (text.find(',') != std::string::npos) {
        std::vector<double> out;
        std::size_t start = 0;
        for (;;) {
            const auto comma = text.find(',', start);
            const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            out.push_back(to_double(trim(item), line, column + static_cast<int>(start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return out;
    }
    const auto c1 = text.find(':');
    const auto c2 = c1 == std::string::npos ? std::string::npos : text.find(':', c1 + 1);
    if (c2 == std::string::npos) fail(line, column, "energy grid must have the form a:b:n");
    const double a = to_double(trim(text.substr(0, c1)), line, column);
    const double b = to_double(trim(text.substr(c1 + 1, c2 - c1 - 1)), line, column + static_cast<int>(c1) + 1);
    const long long n = to_int(trim(text.substr(c2 + 1)), line, column + static_cast<int>(c2) + 1, 1);
    if (n > 10000) fail(line, column + static_cast<int>(c2) + 1, "energy grid too large");
    std::vector<double> out;
    for (long long i = 0; i < n; ++i)
        out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    return out;
}

void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value, int line,
                        int column) {
    if (key == "preset") {
        const auto names = preset_names();
        if (std::find(names.begin(), names.end(), value) == names.end())
            fail(line, column, "unknown preset '" + value + "'");
        cfg.preset = value;
    } else if (key == "surface") {
        if (value != "torus" && value != "sphere")
            fail(line, column, "surface must be torus or sphere");
        cfg.surface = value;
    } else if (key == "theta1") {
        cfg.theta1 = value;
    } else if (key == "theta2") {
        cfg.theta2 = value;
    } else if (key == "potential") {
        cfg.potential = value;
    } else if (key == "energy") {
        cfg.energy = to_double(value, line, column);
    } else if (key == "energy_grid") {
        cfg.energy_grid = parse_energy_grid(value, line, column);
    } else if (key == "seeds") {
        cfg.seeds = static_cast<int>(to_int(value, line, column, 1));
    } else if (key == "samples") {
        cfg.samples = static_cast<int>(to_int(value, line, column, 8));
    } else if (key == "grid") {
        cfg.grid = static_cast<int>(to_int(value, line, column, 4));
    } else if (key == "homology_grid") {
        cfg.homology_grid = static_cast<int>(to_int(value, line, column, 8));
    } else if (key == "grad_tol") {
        cfg.grad_tol = to_double(value, line, column);
        if (cfg.grad_tol <= 0.0) fail(line, column, "grad_tol must be positive");
    } else if (key == "rng_seed") {
        cfg.rng_seed = static_cast<std::uint64_t>(to_int(value, line, column, 0));
    } else if (key == "out") {
        cfg.out = value;
    } else if (key == "json_only") {
        if (value != "true" && value != "false") fail(line, column, "expected true or false");
        cfg.json_only = value == "true";
    } else if (key == "runs") {
        cfg.runs = static_cast<int>(to_int(value, line, column, 1));
    } else if (key == "m_max") {
        cfg.m_max = static_cast<int>(to_int(value, line, column, 1));
    } else if (key == "r") {
        cfg.r = to_double(value, line, column);
    } else if (key == "a") {
        cfg.a = to_double(value, line, column);
    } else if (key == "point") {
        const auto comma = value.find(',');
        if (comma == std::string::npos) fail(line, column, "point must have the form u,v");
        cfg.point = Vec2(to_double(trim(value.substr(0, comma)), line, column),
                         to_double(trim(value.substr(comma + 1)), line, column + static_cast<int>(comma) + 1));
    } else if (key == "input") {
        cfg.input = value;
    } else {
        fail(line, column, "unknown key '" + key + "'");
    }
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    struct Pending {
        std::string text;
        int line, column;
    };
    std::vector<Pending> exprs;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = hash == std::string::npos ? raw : raw.substr(0, hash);
        std::size_t lead = 0;
        if (trim(body, &lead).empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) fail(line, static_cast<int>(lead) + 1, "expected key = value");
        std::size_t klead = 0, vlead = 0;
        const std::string key = trim(body.substr(0, eq), &klead);
        const std::string value = trim(body.substr(eq + 1), &vlead);
        if (key.empty()) fail(line, static_cast<int>(eq) + 1, "missing key");
        static const std::vector<std::string> kKeys{
            "preset", "surface", "theta1", "theta2", "potential", "energy", "energy_grid", "seeds",
            "samples", "grid", "homology_grid", "grad_tol", "rng_seed", "out", "json_only", "runs",
            "m_max", "r", "a", "point", "input"};
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end())
            fail(line, static_cast<int>(klead) + 1, "unknown key '" + key + "'");
        const int vcol = static_cast<int>(eq + 1 + vlead) + 1;
        if (value.empty()) fail(line, vcol, "missing value for '" + key + "'");
        apply_config_value(cfg, key, value, line, vcol);
        if (key == "theta1" || key == "theta2" || key == "potential") exprs.push_back({value, line, vcol});
    }
    // Expressions are checked once the surface is known so errors carry file positions.
    const std::vector<std::string> vars =
        cfg.surface == "sphere" ? std::vector<std::string>{"phi", "z"} : std::vector<std::string>{"x", "y"};
    for (const auto& e : exprs) Expression::parse(e.text, vars, e.line, e.column);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    if (!preset.empty()) j["preset"] = preset;
    if (!surface.empty()) j["surface"] = surface;
    if (!theta1.empty()) j["theta1"] = theta1;
    if (!theta2.empty()) j["theta2"] = theta2;
    if (!potential.empty()) j["potential"] = potential;
    if (energy) j["energy"] = *energy;
    if (energy_grid) j["energy_grid"] = *energy_grid;
    j["seeds"] = seeds;
    j["samples"] = samples;
    j["grid"] = grid;
    j["homology_grid"] = homology_grid;
    j["grad_tol"] = grad_tol;
    j["rng_seed"] = rng_seed;
    return j;
}

// ---------------------------------------------------------------------------
// Data construction

MagneticTonelliData build_data(const RunConfig& cfg) {
    if (!cfg.preset.empty()) {
        if (!cfg.surface.empty() || !cfg.theta1.empty() || !cfg.theta2.empty() || !cfg.potential.empty())
            throw ConfigError("preset and inline fields are mutually exclusive");
        return make_preset(cfg.preset);
    }
    if (cfg.surface.empty()) throw ConfigError("either preset or surface must be given");
    const bool sphere = cfg.surface == "sphere";
    const std::vector<std::string> vars =
        sphere ? std::vector<std::string>{"phi", "z"} : std::vector<std::string>{"x", "y"};
    auto parse = [&](const std::string& field, const std::string& text) {
        try {
            return Expression::parse(text.empty() ? "0" : text, vars);
        } catch (const ConfigError& e) {
            throw ConfigError(field + ": " + e.what());
        }
    };
    const Expression t1 = parse("theta1", cfg.theta1);
    const Expression t2 = parse("theta2", cfg.theta2);
    const Expression v = parse("potential", cfg.potential);

    MagneticTonelliData d;
    d.name = "inline";
    d.surface = sphere ? SurfaceModel::round_sphere() : SurfaceModel::flat_torus();

    // Fields must descend to the surface: periodic in every lattice direction.
    const Vec2 periods = d.surface.periods();
    const Vec2 origin = d.surface.domain_origin();
    const Vec2 extent = d.surface.domain_extent();
    for (const auto* ex : {&t1, &t2, &v}) {
        for (int i = 0; i < 7; ++i) {
            for (int k = 0; k < 7; ++k) {
                const Vec2 q = origin + Vec2(extent(0) * (i + 0.31) / 7.0, extent(1) * (k + 0.17) / 7.0);
                const double f0 = (*ex)(q);
                if (!std::isfinite(f0)) throw ConfigError("'" + ex->text() + "' is not finite on the surface");
                for (int dir = 0; dir < 2; ++dir) {
                    if (periods(dir) == 0.0) continue;
                    Vec2 shift = Vec2::Zero();
                    shift(dir) = periods(dir);
                    if (std::abs((*ex)(q + shift) - f0) > 1e-9 * (1.0 + std::abs(f0)))
                        throw ConfigError("'" + ex->text() + "' is not periodic on the " + cfg.surface);
                }
            }
        }
    }

    if (t1.is_zero() && t2.is_zero()) {
        d.theta = OneForm::zero();
    } else {
        d.theta.value = [t1, t2](const Vec2& q) { return Vec2(t1(q), t2(q)); };
    }
    if (v.is_zero()) {
        d.potential = ScalarField::zero();
    } else {
        d.potential.value = [v](const Vec2& q) { return v(q); };
    }
    return d;
}

}  // namespace magwaist
