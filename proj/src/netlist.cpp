#include "photonq/netlist.hpp"

#include <json.hpp>

#include <functional>

namespace photonq {

namespace {

// UTF-8 aware tokenizer for the expression mini-language.
struct Lexer {
    const std::string& s;
    size_t pos = 0;
    int line = 1, col = 1;

    struct Token {
        enum class T { ident, number, lparen, rparen, comma, series_op, concat_op, end };
        T type;
        std::string text;
        int line, col;
    };

    explicit Lexer(const std::string& text) : s(text) {}

    void advance(size_t n) {
        for (size_t i = 0; i < n && pos < s.size(); ++i, ++pos) {
            if (s[pos] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    }

    bool starts_with(const char* u8) const {
        return s.compare(pos, std::string(u8).size(), u8) == 0;
    }

    Token next() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) advance(1);
        const int l = line, c = col;
        if (pos >= s.size()) return {Token::T::end, "", l, c};
        const char ch = s[pos];
        if (ch == '(') {
            advance(1);
            return {Token::T::lparen, "(", l, c};
        }
        if (ch == ')') {
            advance(1);
            return {Token::T::rparen, ")", l, c};
        }
        if (ch == ',') {
            advance(1);
            return {Token::T::comma, ",", l, c};
        }
        if (starts_with("◁")) {  // white left-pointing triangle
            advance(3);
            return {Token::T::series_op, "◁", l, c};
        }
        if (starts_with("⊞")) {
            advance(3);
            return {Token::T::concat_op, "⊞", l, c};
        }
        if (std::isdigit(static_cast<unsigned char>(ch))) {
            size_t end = pos;
            while (end < s.size() && std::isdigit(static_cast<unsigned char>(s[end]))) ++end;
            Token t{Token::T::number, s.substr(pos, end - pos), l, c};
            advance(end - pos);
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            size_t end = pos;
            while (end < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[end])) || s[end] == '_'))
                ++end;
            Token t{Token::T::ident, s.substr(pos, end - pos), l, c};
            advance(end - pos);
            return t;
        }
        throw ParseError("unexpected character '" + std::string(1, ch) + "'", l, c);
    }
};

struct Parser {
    Lexer lex;
    Lexer::Token tok;

    explicit Parser(const std::string& text) : lex(text) { tok = lex.next(); }

    void expect(Lexer::Token::T t, const char* what) {
        if (tok.type != t) throw ParseError(std::string("expected ") + what, tok.line, tok.col);
        tok = lex.next();
    }

    std::shared_ptr<Expr> parse() {
        auto e = expr();
        if (tok.type != Lexer::Token::T::end)
            throw ParseError("trailing input", tok.line, tok.col);
        return e;
    }

    // expr := term ( '<|' term )*          (series, left-assoc: a <| b <| c)
    // term := factor ( 'boxplus' factor )*
    std::shared_ptr<Expr> expr() {
        auto e = term();
        while (tok.type == Lexer::Token::T::series_op) {
            tok = lex.next();
            auto rhs = term();
            if (e->op == Expr::Op::series) {
                e->args.push_back(rhs);
            } else {
                auto s = std::make_shared<Expr>();
                s->op = Expr::Op::series;
                s->args = {e, rhs};
                e = s;
            }
        }
        return e;
    }

    std::shared_ptr<Expr> term() {
        auto e = factor();
        while (tok.type == Lexer::Token::T::concat_op) {
            tok = lex.next();
            auto rhs = factor();
            if (e->op == Expr::Op::concat) {
                e->args.push_back(rhs);
            } else {
                auto s = std::make_shared<Expr>();
                s->op = Expr::Op::concat;
                s->args = {e, rhs};
                e = s;
            }
        }
        return e;
    }

    std::shared_ptr<Expr> factor() {
        if (tok.type == Lexer::Token::T::lparen) {
            tok = lex.next();
            auto e = expr();
            expect(Lexer::Token::T::rparen, "')'");
            return e;
        }
        if (tok.type != Lexer::Token::T::ident)
            throw ParseError("expected a component name or operator", tok.line, tok.col);
        const std::string name = tok.text;
        const int l = tok.line, c = tok.col;
        tok = lex.next();
        if (name == "series" || name == "concat" || name == "fb") {
            expect(Lexer::Token::T::lparen, "'('");
            std::vector<std::shared_ptr<Expr>> args;
            std::vector<int> ints;
            if (tok.type != Lexer::Token::T::rparen) {
                for (;;) {
                    if (tok.type == Lexer::Token::T::number) {
                        ints.push_back(std::stoi(tok.text));
                        tok = lex.next();
                    } else {
                        args.push_back(expr());
                    }
                    if (tok.type == Lexer::Token::T::comma) {
                        tok = lex.next();
                        continue;
                    }
                    break;
                }
            }
            expect(Lexer::Token::T::rparen, "')'");
            auto e = std::make_shared<Expr>();
            if (name == "fb") {
                if (args.size() != 1 || ints.size() != 2)
                    throw ParseError("fb takes (expr, out, in)", l, c);
                e->op = Expr::Op::feedback;
                e->args = {args[0]};
                e->fb_out = ints[0];
                e->fb_in = ints[1];
            } else {
                if (!ints.empty() || args.size() < 2)
                    throw ParseError(name + " takes at least two expressions", l, c);
                e->op = name == "series" ? Expr::Op::series : Expr::Op::concat;
                e->args = args;
            }
            return e;
        }
        auto e = std::make_shared<Expr>();
        e->op = Expr::Op::atom;
        e->name = name;
        return e;
    }
};

}  // namespace

std::shared_ptr<Expr> parse_expression(const std::string& text) {
    Parser p(text);
    return p.parse();
}

std::string print_expression(const Expr& e) {
    switch (e.op) {
        case Expr::Op::atom:
            return e.name;
        case Expr::Op::feedback:
            return "fb(" + print_expression(*e.args[0]) + ", " + std::to_string(e.fb_out) +
                   ", " + std::to_string(e.fb_in) + ")";
        case Expr::Op::series:
        case Expr::Op::concat: {
            std::string out = e.op == Expr::Op::series ? "series(" : "concat(";
            for (size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                out += print_expression(*e.args[i]);
            }
            return out + ")";
        }
    }
    return {};
}

const ComponentDecl* Netlist::find(const std::string& name) const {
    for (const auto& c : components)
        if (c.name == name) return &c;
    return nullptr;
}

Netlist parse_netlist(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON envelope: ") + e.what(), 0, 0);
    }
    Netlist nl;
    if (!j.contains("components") || !j["components"].is_array())
        throw ParseError("netlist needs a components array", 0, 0);
    for (const auto& c : j["components"]) {
        ComponentDecl d;
        d.name = c.at("name").get<std::string>();
        d.kind = c.at("kind").get<std::string>();
        if (c.contains("preset")) d.preset = c["preset"].get<std::string>();
        if (c.contains("params"))
            for (auto& [k, v] : c["params"].items()) d.params[k] = v.get<double>();
        nl.components.push_back(d);
    }
    nl.expression_text = j.value("expression", std::string());
    if (!nl.expression_text.empty()) nl.expression = parse_expression(nl.expression_text);
    if (j.contains("runs"))
        for (const auto& r : j["runs"]) nl.runs_json.push_back(r.dump());
    // every name used in the expression must be declared
    if (nl.expression) {
        std::function<void(const Expr&)> visit = [&](const Expr& e) {
            if (e.op == Expr::Op::atom) {
                if (!nl.find(e.name))
                    throw ParseError("undeclared component '" + e.name + "'", 0, 0);
            }
            for (auto& a : e.args) visit(*a);
        };
        visit(*nl.expression);
    }
    return nl;
}

bool is_linear_kind(const std::string& kind) {
    static const std::vector<std::string> linear = {
        "beamsplitter", "phase",  "displacement", "identity", "permutation",
        "cavity",       "dopo",   "ndopo",        "opo2",     "mems",
        "optomech",     "squeezer"};
    for (const auto& k : linear)
        if (k == kind) return true;
    return false;
}

ParamMap resolve_params(const ComponentDecl& decl) {
    ParamMap p;
    if (!decl.preset.empty()) {
        const auto& presets = component_presets();
        auto it = presets.find(decl.preset);
        if (it == presets.end())
            throw std::invalid_argument("unknown preset '" + decl.preset + "'");
        p = it->second;
    }
    for (const auto& [k, v] : decl.params) p[k] = v;
    return p;
}

namespace {

AbcdModel build_linear_atom(const ComponentDecl& decl) {
    ParamMap p = resolve_params(decl);
    if (decl.kind == "squeezer") {
        // static squeezer: eta, phi
        const double eta = p.count("eta") ? p["eta"] : 0.0;
        const double phi = p.count("phi") ? p["phi"] : 0.0;
        cmat Dm = cmat::Constant(1, 1, std::cosh(eta));
        cmat Dp = cmat::Constant(1, 1, std::exp(I_UNIT * phi) * std::sinh(eta));
        return static_model(dbl(Dm, Dp), 1);
    }
    return to_abcd(make_component(decl.kind, p));
}

AbcdModel eval_expr(const Netlist& nl, const Expr& e) {
    switch (e.op) {
        case Expr::Op::atom: {
            const auto* d = nl.find(e.name);
            if (!is_linear_kind(d->kind))
                throw std::invalid_argument("component '" + e.name +
                                            "' is nonlinear; linear circuit required");
            return build_linear_atom(*d);
        }
        case Expr::Op::concat: {
            AbcdModel g = eval_expr(nl, *e.args[0]);
            for (size_t i = 1; i < e.args.size(); ++i)
                g = concatenate(g, eval_expr(nl, *e.args[i]));
            return g;
        }
        case Expr::Op::series: {
            // series(a, b, c) = a <| b <| c : the last argument runs first
            AbcdModel g = eval_expr(nl, *e.args.back());
            for (int i = int(e.args.size()) - 2; i >= 0; --i) {
                AbcdModel lhs = eval_expr(nl, *e.args[i]);
                if (lhs.n_ports != g.n_ports)
                    throw ParseError("series port mismatch: " + std::to_string(lhs.n_ports) +
                                         " vs " + std::to_string(g.n_ports),
                                     0, 0);
                g = series(lhs, g);
            }
            return g;
        }
        case Expr::Op::feedback: {
            AbcdModel g = eval_expr(nl, *e.args[0]);
            if (e.fb_out < 1 || e.fb_out > g.n_ports || e.fb_in < 1 ||
                e.fb_in > g.n_ports)
                throw ParseError("feedback port out of range", 0, 0);
            return feedback(g, e.fb_out, e.fb_in);
        }
    }
    throw std::logic_error("eval_expr: bad expression");
}

}  // namespace

AbcdModel build_linear_circuit(const Netlist& nl) {
    if (!nl.expression) throw std::invalid_argument("netlist has no expression");
    return eval_expr(nl, *nl.expression);
}

int check_expression(const Netlist& nl) { return build_linear_circuit(nl).n_ports; }

WignerComponent build_nonlinear_component(const Netlist& nl) {
    if (!nl.expression || nl.expression->op != Expr::Op::atom)
        throw std::invalid_argument(
            "simulation modes need the expression to be a single nonlinear component");
    const auto* d = nl.find(nl.expression->name);
    if (is_linear_kind(d->kind)) {
        // linear kinds still simulate fine through their Wigner equivalents
        ParamMap p = resolve_params(*d);
        if (d->kind == "cavity" || d->kind == "dopo") return make_sde(d->kind, p);
        throw std::invalid_argument("component '" + d->name +
                                    "' has no stochastic simulation form");
    }
    ParamMap p = resolve_params(*d);
    if (d->kind == "latch-fc" || d->kind == "latch-kerr") return make_sde(d->kind, p);
    return make_sde(d->kind, p);
}

}  // namespace photonq
