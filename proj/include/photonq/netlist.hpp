#pragma once

#include <memory>

#include "photonq/abcd.hpp"
#include "photonq/wigner.hpp"

namespace photonq {

struct ParseError : std::runtime_error {
    int line, column;
    ParseError(const std::string& msg, int line_, int col_)
        : std::runtime_error(msg + " at " + std::to_string(line_) + ":" +
                             std::to_string(col_)),
          line(line_),
          column(col_) {}
};

// Gough-James expression tree over named components.
struct Expr {
    enum class Op { atom, series, concat, feedback };
    Op op = Op::atom;
    std::string name;                         // atom
    std::vector<std::shared_ptr<Expr>> args;  // series/concat operands, feedback target
    int fb_out = 0, fb_in = 0;                // feedback ports (1-indexed)
};

// `series(g2, g1, ...)`, `concat(g1, g2, ...)`, `fb(g, k, l)`, atoms, and the
// infix aliases g1 ◁ g2 (series) and g1 ⊞ g2 (concatenation).
std::shared_ptr<Expr> parse_expression(const std::string& text);
std::string print_expression(const Expr& e);

struct ComponentDecl {
    std::string name;
    std::string kind;
    ParamMap params;
    std::string preset;  // optional named preset merged under the explicit params
};

struct Netlist {
    std::vector<ComponentDecl> components;
    std::string expression_text;
    std::shared_ptr<Expr> expression;
    std::vector<std::string> runs_json;  // raw run configs, interpreted by the runner

    const ComponentDecl* find(const std::string& name) const;
};

// JSON envelope: {"components": [{name, kind, params, preset?}...],
//                 "expression": "...", "runs": [{...}...]}
Netlist parse_netlist(const std::string& json_text);

bool is_linear_kind(const std::string& kind);
ParamMap resolve_params(const ComponentDecl& decl);

// Builds the ABCD model of the full expression (linear components only);
// arity (series port matching) and name resolution are checked here.
AbcdModel build_linear_circuit(const Netlist& nl);
// Number of ports the expression exposes; throws on arity mismatches.
int check_expression(const Netlist& nl);

// The (single-atom) nonlinear component of a netlist, for simulation modes.
WignerComponent build_nonlinear_component(const Netlist& nl);

}  // namespace photonq
