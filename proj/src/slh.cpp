#include "photonq/slh.hpp"

#include <cmath>
#include <stdexcept>

namespace photonq {

namespace {

double need(const ParamMap& p, const std::string& key) {
    auto it = p.find(key);
    if (it == p.end()) throw std::invalid_argument("make_component: missing parameter " + key);
    if (!std::isfinite(it->second))
        throw std::invalid_argument("make_component: parameter " + key + " is not finite");
    return it->second;
}

double get_or(const ParamMap& p, const std::string& key, double dflt) {
    auto it = p.find(key);
    if (it == p.end()) return dflt;
    if (!std::isfinite(it->second))
        throw std::invalid_argument("make_component: parameter " + key + " is not finite");
    return it->second;
}

double need_rate(const ParamMap& p, const std::string& key) {
    double v = need(p, key);
    if (v < 0) throw std::invalid_argument("make_component: negative rate " + key);
    return v;
}

// collect kappa1..kappaN (at least kappa1 or plain "kappa")
std::vector<double> collect_rates(const ParamMap& p, const std::string& stem) {
    std::vector<double> out;
    if (p.count(stem)) out.push_back(need_rate(p, stem));
    for (int i = 1;; ++i) {
        auto key = stem + std::to_string(i);
        if (!p.count(key)) break;
        out.push_back(need_rate(p, key));
    }
    return out;
}

LinearSlhModel scatter_only(const cmat& S) {
    LinearSlhModel m;
    m.n_modes = 0;
    m.n_ports = int(S.rows());
    m.S = S;
    m.Lambda_minus = cmat::Zero(m.n_ports, 0);
    m.Lambda_plus = cmat::Zero(m.n_ports, 0);
    m.R_minus = cmat::Zero(0, 0);
    m.R_plus = cmat::Zero(0, 0);
    m.r = cvec::Zero(0);
    m.lambda = cvec::Zero(m.n_ports);
    return m;
}

}  // namespace

void LinearSlhModel::validate(double tol) const {
    if ((R_minus - R_minus.adjoint()).norm() > tol * (1 + R_minus.norm()))
        throw std::invalid_argument("LinearSlhModel: R_minus not Hermitian");
    if ((R_plus - R_plus.transpose()).norm() > tol * (1 + R_plus.norm()))
        throw std::invalid_argument("LinearSlhModel: R_plus not symmetric");
    cmat gram = S.adjoint() * S - cmat::Identity(n_ports, n_ports);
    if (gram.norm() > 1e2 * tol * (1 + S.norm()))
        throw std::invalid_argument("LinearSlhModel: S not unitary");
}

LinearSlhModel make_component(const std::string& kind, const ParamMap& params) {
    LinearSlhModel m;
    if (kind == "beamsplitter") {
        const double th = need(params, "theta");
        cmat S(2, 2);
        S << std::cos(th), I_UNIT * std::sin(th), I_UNIT * std::sin(th), std::cos(th);
        m = scatter_only(S);
    } else if (kind == "phase") {
        const int n = int(get_or(params, "n", 1));
        const double phi = need(params, "phi");
        m = scatter_only(std::exp(I_UNIT * phi) * cmat::Identity(n, n));
    } else if (kind == "identity") {
        const int n = int(get_or(params, "n", 1));
        m = scatter_only(cmat::Identity(n, n));
    } else if (kind == "permutation") {
        std::vector<int> sigma;
        for (int i = 1;; ++i) {
            auto key = "p" + std::to_string(i);
            if (!params.count(key)) break;
            sigma.push_back(int(need(params, key)));
        }
        if (sigma.empty()) throw std::invalid_argument("permutation: needs p1..pN");
        cmat S = cmat::Zero(sigma.size(), sigma.size());
        for (size_t i = 0; i < sigma.size(); ++i) {
            if (sigma[i] < 1 || sigma[i] > int(sigma.size()))
                throw std::invalid_argument("permutation: index out of range");
            S(sigma[i] - 1, i) = 1.0;  // input i -> output sigma_i
        }
        m = scatter_only(S);
    } else if (kind == "displacement") {
        m = scatter_only(cmat::Identity(1, 1));
        m.lambda(0) = cxd(get_or(params, "re", 0.0), get_or(params, "im", 0.0));
    } else if (kind == "cavity") {
        const double Delta = need(params, "Delta");
        auto ks = collect_rates(params, "kappa");
        if (ks.empty()) throw std::invalid_argument("cavity: needs kappa1..");
        const int np = int(ks.size());
        m.n_modes = 1;
        m.n_ports = np;
        m.S = cmat::Identity(np, np);
        m.Lambda_minus = cmat::Zero(np, 1);
        for (int i = 0; i < np; ++i) {
            const double psi = get_or(params, "psi" + std::to_string(i + 1), 0.0);
            m.Lambda_minus(i, 0) = std::sqrt(ks[i]) * std::exp(I_UNIT * psi);
        }
        m.Lambda_plus = cmat::Zero(np, 1);
        m.R_minus = cmat::Constant(1, 1, Delta);
        m.R_plus = cmat::Zero(1, 1);
        m.r = cvec::Zero(1);
        m.lambda = cvec::Zero(np);
    } else if (kind == "dopo" || kind == "opo2") {
        // Linearized degenerate OPO: H = Delta a'a + (eps* a^2 - eps a'^2)/2i
        const double Delta = need(params, "Delta");
        const cxd eps(get_or(params, "eps_re", 0.0), get_or(params, "eps_im", 0.0));
        std::vector<double> ks;
        if (kind == "opo2") {
            ks = {need_rate(params, "kappa1"), need_rate(params, "kappa2")};
        } else {
            ks = collect_rates(params, "kappa");
            if (ks.empty()) throw std::invalid_argument("dopo: needs kappa");
        }
        const int np = int(ks.size());
        m.n_modes = 1;
        m.n_ports = np;
        m.S = cmat::Identity(np, np);
        m.Lambda_minus = cmat::Zero(np, 1);
        for (int i = 0; i < np; ++i) m.Lambda_minus(i, 0) = std::sqrt(ks[i]);
        m.Lambda_plus = cmat::Zero(np, 1);
        m.R_minus = cmat::Constant(1, 1, Delta);
        m.R_plus = cmat::Constant(1, 1, I_UNIT * eps);
        m.r = cvec::Zero(1);
        m.lambda = cvec::Zero(np);
    } else if (kind == "ndopo") {
        // Linearized nondegenerate OPO: H = Da a'a + Db b'b + (eps* ab - eps a'b')/2i
        const cxd eps(get_or(params, "eps_re", 0.0), get_or(params, "eps_im", 0.0));
        m.n_modes = 2;
        m.n_ports = 2;
        m.S = cmat::Identity(2, 2);
        m.Lambda_minus = cmat::Zero(2, 2);
        m.Lambda_minus(0, 0) = std::sqrt(need_rate(params, "kappa_a"));
        m.Lambda_minus(1, 1) = std::sqrt(need_rate(params, "kappa_b"));
        m.Lambda_plus = cmat::Zero(2, 2);
        m.R_minus = cmat::Zero(2, 2);
        m.R_minus(0, 0) = need(params, "Delta_a");
        m.R_minus(1, 1) = need(params, "Delta_b");
        m.R_plus = cmat::Zero(2, 2);
        m.R_plus(0, 1) = m.R_plus(1, 0) = 0.5 * I_UNIT * eps;
        m.r = cvec::Zero(2);
        m.lambda = cvec::Zero(2);
    } else if (kind == "mems") {
        // One mechanical mode, ports: K1 x_m, K2 x_m, sqrt(km) b ; H = Omega b'b
        const double K1 = need(params, "K1"), K2 = need(params, "K2");
        const double Om = need(params, "Omega"), km = need_rate(params, "km");
        m.n_modes = 1;
        m.n_ports = 3;
        m.S = cmat::Identity(3, 3);
        m.Lambda_minus = cmat::Zero(3, 1);
        m.Lambda_plus = cmat::Zero(3, 1);
        m.Lambda_minus(0, 0) = K1;
        m.Lambda_plus(0, 0) = K1;
        m.Lambda_minus(1, 0) = K2;
        m.Lambda_plus(1, 0) = K2;
        m.Lambda_minus(2, 0) = std::sqrt(km);
        m.R_minus = cmat::Constant(1, 1, Om);
        m.R_plus = cmat::Zero(1, 1);
        m.r = cvec::Zero(1);
        m.lambda = cvec::Zero(3);
    } else if (kind == "optomech") {
        // Linearized optomechanical cavity: modes (a, b),
        // H = Delta a'a + Omega b'b + (g* a + g a')(b + b'),
        // L = [sqrt(kappa) a, sqrt(km) b, sqrt(kN) b, sqrt(kN) b']
        const double Delta = need(params, "Delta"), Om = need(params, "Omega");
        const double kap = need_rate(params, "kappa"), km = need_rate(params, "km");
        const double kN = need_rate(params, "kN");
        const cxd g(get_or(params, "g_re", 0.0), get_or(params, "g_im", 0.0));
        m.n_modes = 2;
        m.n_ports = 4;
        m.S = cmat::Identity(4, 4);
        m.Lambda_minus = cmat::Zero(4, 2);
        m.Lambda_plus = cmat::Zero(4, 2);
        m.Lambda_minus(0, 0) = std::sqrt(kap);
        m.Lambda_minus(1, 1) = std::sqrt(km);
        m.Lambda_minus(2, 1) = std::sqrt(kN);
        m.Lambda_plus(3, 1) = std::sqrt(kN);
        m.R_minus = cmat::Zero(2, 2);
        m.R_minus(0, 0) = Delta;
        m.R_minus(1, 1) = Om;
        m.R_minus(0, 1) = g;
        m.R_minus(1, 0) = std::conj(g);
        m.R_plus = cmat::Zero(2, 2);
        m.R_plus(0, 1) = m.R_plus(1, 0) = g;
        m.r = cvec::Zero(2);
        m.lambda = cvec::Zero(4);
    } else {
        throw std::invalid_argument("make_component: unknown kind '" + kind + "'");
    }
    m.kind = kind;
    m.params = params;
    m.validate();
    return m;
}

const std::map<std::string, ParamMap>& component_presets() {
    static const std::map<std::string, ParamMap> presets = {
        {"ch11-cavity", {{"Delta", 0.1}, {"kappa1", 0.01}, {"kappa2", 0.01}, {"kappa3", 0.01}}},
        {"ch11-mems", {{"Omega", 100.0}, {"Q", 1e4}, {"km", 0.01}}},
        // Table 6b-t1, GaAs photonic crystal (rates in units of k)
        {"gaas-phc-6b",
         {{"kappa", 0.8}, {"eta", 0.2}, {"delta_re", 0.014}, {"delta_im", 0.0},
          {"gamma", 1.2}, {"gamma_rc", 0.0}, {"chi", 0.0}, {"beta", 0.0}}},
        // Table 7b-t1, GaAs photonic crystal
        {"gaas-phc-7b",
         {{"kappa", 0.5}, {"eta", 0.5}, {"delta_re", 2.7e-3}, {"delta_im", 0.0},
          {"gamma", 1.2}, {"gamma_rc", 0.0}, {"chi", 0.0}, {"beta", 7.9e-5}}},
        // Table 7b-t1, Si micro-ring
        {"si-uring-7b",
         {{"kappa", 1.0}, {"eta", 0.0}, {"delta_re", 5.6e-4}, {"delta_im", 0.4e-4},
          {"gamma", 1.0}, {"gamma_rc", 0.0}, {"chi", 0.0}, {"beta", 3.7e-6}}},
        // Table 6b-t2 reduced latch parameters, Si micro-ring (TPA)
        {"si-latch-6b",
         {{"zeta_bar", 151.3}, {"gamma_bar", 1.0}, {"eta_bar", 0.5}, {"kappa_plus", 1.0},
          {"delta_fca_bar", -0.071}, {"mu_bar", 0.0}, {"chi_bar", 0.0}}},
        // Table 6b-t2 reduced latch parameters, GaAs PhC (TPA+LA)
        {"gaas-latch-6b",
         {{"zeta_bar", 34.1}, {"gamma_bar", 1.2}, {"eta_bar", 0.0}, {"kappa_plus", 0.5},
          {"delta_fca_bar", 0.0}, {"mu_bar", 17.1}, {"chi_bar", 0.0}}},
    };
    return presets;
}

}  // namespace photonq
