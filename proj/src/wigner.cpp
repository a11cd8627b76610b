#include "photonq/wigner.hpp"

#include <cmath>
#include <cstdio>
#include <future>
#include <stdexcept>

#include "photonq/rng.hpp"

namespace photonq {

namespace {

enum class KindId {
    cavity,
    kerr,
    dopo,
    dopo2,
    ndopo3,
    ndopo,
    fc,
    fc2,
    latch_fc,
    latch_kerr,
};

using Parsed = WignerComponent::Par;

double need(const ParamMap& p, const std::string& k) {
    auto it = p.find(k);
    if (it == p.end()) throw std::invalid_argument("make_sde: missing parameter " + k);
    if (!std::isfinite(it->second))
        throw std::invalid_argument("make_sde: parameter " + k + " not finite");
    return it->second;
}
double get_or(const ParamMap& p, const std::string& k, double d) {
    auto it = p.find(k);
    return it == p.end() ? d : it->second;
}
double need_rate(const ParamMap& p, const std::string& k) {
    double v = need(p, k);
    if (v < 0) throw std::invalid_argument("make_sde: negative rate " + k);
    return v;
}
double rate_or(const ParamMap& p, const std::string& k, double d) {
    double v = get_or(p, k, d);
    if (v < 0) throw std::invalid_argument("make_sde: negative rate " + k);
    return v;
}

std::vector<double> collect_kappas(const ParamMap& p) {
    std::vector<double> out;
    if (p.count("kappa")) out.push_back(need_rate(p, "kappa"));
    for (int i = 1;; ++i) {
        auto key = "kappa" + std::to_string(i);
        if (!p.count(key)) break;
        out.push_back(need_rate(p, key));
    }
    return out;
}

Parsed parse(const WignerComponent& c) {
    const ParamMap& p = c.params;
    Parsed q;
    auto set_kappas = [&](const std::vector<double>& ks) {
        for (size_t i = 0; i < ks.size(); ++i) {
            q.kappa[i] = ks[i];
            q.sqk[i] = std::sqrt(ks[i]);
            q.ktot += ks[i];
        }
    };
    if (c.kind == "cavity") {
        q.id = int(KindId::cavity);
        q.Delta = need(p, "Delta");
        set_kappas(collect_kappas(p));
    } else if (c.kind == "kerr") {
        q.id = int(KindId::kerr);
        q.Delta = need(p, "Delta");
        q.chi = get_or(p, "chi", 0.0);
        q.beta = rate_or(p, "beta", 0.0);
        set_kappas(collect_kappas(p));
    } else if (c.kind == "dopo") {
        q.id = int(KindId::dopo);
        q.Delta = need(p, "Delta");
        q.eps = cxd(get_or(p, "eps_re", 0.0), get_or(p, "eps_im", 0.0));
        set_kappas(collect_kappas(p));
    } else if (c.kind == "dopo2") {
        q.id = int(KindId::dopo2);
        q.Delta = need(p, "Delta_a");
        q.Delta_b = need(p, "Delta_b");
        q.eps = cxd(get_or(p, "eps_re", 0.0), get_or(p, "eps_im", 0.0));
        set_kappas({need_rate(p, "kappa_a"), need_rate(p, "kappa_b")});
    } else if (c.kind == "ndopo3") {
        q.id = int(KindId::ndopo3);
        q.Delta = need(p, "Delta_a");
        q.Delta_b = need(p, "Delta_b");
        q.Delta_c2 = need(p, "Delta_c");
        q.eps = cxd(get_or(p, "eps_re", 0.0), get_or(p, "eps_im", 0.0));
        set_kappas(
            {need_rate(p, "kappa_a"), need_rate(p, "kappa_b"), need_rate(p, "kappa_c")});
    } else if (c.kind == "ndopo") {
        q.id = int(KindId::ndopo);
        q.Delta = need(p, "Delta");
        q.eps = cxd(get_or(p, "eps_re", 0.0), get_or(p, "eps_im", 0.0));
        q.beta = rate_or(p, "beta", 0.0);
        const double k = need_rate(p, "kappa");
        set_kappas({k, k, 0.0});
    } else if (c.kind == "fc" || c.kind == "fc2") {
        q.id = int(c.kind == "fc" ? KindId::fc : KindId::fc2);
        q.Delta = need(p, "Delta");
        q.eta = rate_or(p, "eta", 0.0);
        q.chi = get_or(p, "chi", 0.0);
        q.beta = rate_or(p, "beta", 0.0);
        q.gamma = need_rate(p, "gamma");
        q.gamma_rc = rate_or(p, "gamma_rc", 0.0);
        q.gamma_bar = rate_or(p, "gamma_bar", q.gamma);
        q.delta_c = cxd(need(p, "delta_re"), -get_or(p, "delta_im", 0.0));
        q.delta_cb = cxd(get_or(p, "deltab_re", need(p, "delta_re")),
                         -get_or(p, "deltab_im", get_or(p, "delta_im", 0.0)));
        q.has_fca = -q.delta_c.imag() > 0 || -q.delta_cb.imag() > 0;
        set_kappas({need_rate(p, "kappa")});
    } else if (c.kind == "latch-fc" || c.kind == "latch-kerr") {
        q.id = int(c.kind == "latch-fc" ? KindId::latch_fc : KindId::latch_kerr);
        q.Delta = need(p, "Delta");
        q.eta = rate_or(p, "eta", 0.0);
        q.chi = get_or(p, "chi", 0.0);
        q.beta = rate_or(p, "beta", 0.0);
        if (q.id == int(KindId::latch_fc)) {
            q.gamma = need_rate(p, "gamma");
            q.gamma_rc = rate_or(p, "gamma_rc", 0.0);
            q.delta_c = cxd(need(p, "delta_re"), -get_or(p, "delta_im", 0.0));
        }
        q.kplus = need_rate(p, "kappa_plus");
        q.kminus = need_rate(p, "kappa_minus");
        set_kappas({q.kplus, q.kminus});
    } else {
        throw std::invalid_argument("make_sde: unknown kind '" + c.kind + "'");
    }
    return q;
}

inline double pos(double x) { return x > 0 ? x : 0.0; }

}  // namespace

int WignerComponent::n_noise_columns() const {
    int n = 0;
    for (const auto& ch : channels) n += ch.is_complex ? 2 : 1;
    return n;
}

WignerComponent make_sde(const std::string& kind, const ParamMap& params) {
    WignerComponent c;
    c.kind = kind;
    c.params = params;
    c.par = parse(c);
    const Parsed& q = c.par;
    switch (KindId(q.id)) {
        case KindId::cavity:
        case KindId::kerr:
        case KindId::dopo: {
            c.n_fields = 1;
            c.n_real = 0;
            c.n_ports = int(collect_kappas(params).size());
            if (c.n_ports == 0) throw std::invalid_argument("make_sde: needs kappa");
            if (KindId(q.id) == KindId::kerr) c.channels = {{"tpa", true}};
            break;
        }
        case KindId::dopo2:
            c.n_fields = 2;
            c.n_ports = 2;
            break;
        case KindId::ndopo3:
            c.n_fields = 3;
            c.n_ports = 3;
            break;
        case KindId::ndopo:
            c.n_fields = 2;
            c.n_ports = 3;  // signal, idler, pump
            break;
        case KindId::fc:
            c.n_fields = 1;
            c.n_real = 1;
            c.n_ports = 1;
            c.channels = {{"eta", true}, {"tpa", true}, {"nr", false}, {"rc", false}};
            if (q.has_fca) c.channels.push_back({"fca", true});
            break;
        case KindId::fc2:
            c.n_fields = 1;
            c.n_real = 2;
            c.n_ports = 1;
            c.channels = {{"eta", true},
                          {"tpa", true},
                          {"nr_m", false},
                          {"nr_mbar", false},
                          {"rc", false}};
            if (q.has_fca) c.channels.push_back({"fca", true});
            break;
        case KindId::latch_fc:
            c.n_fields = 2;
            c.n_real = 2;
            c.n_ports = 2;
            c.channels = {{"eta1", true}, {"eta2", true}, {"tpa1", true}, {"tpa2", true},
                          {"nr1", false}, {"nr2", false}, {"rc1", false}, {"rc2", false}};
            break;
        case KindId::latch_kerr:
            c.n_fields = 2;
            c.n_real = 0;
            c.n_ports = 2;
            c.channels = {{"eta1", true}, {"eta2", true}, {"tpa1", true}, {"tpa2", true}};
            break;
    }
    return c;
}

void WignerComponent::drift(const cxd* f, const double* r, cxd* df, double* dr) const {
    const Parsed& q = par;
    switch (KindId(q.id)) {
        case KindId::cavity:
            df[0] = (cxd(0, -q.Delta) - 0.5 * q.ktot) * f[0];
            break;
        case KindId::kerr:
            df[0] =
                (cxd(0, -q.Delta) - 0.5 * q.ktot + cxd(-q.beta, -q.chi) * std::norm(f[0])) *
                f[0];
            break;
        case KindId::dopo:
            df[0] = (cxd(0, -q.Delta) - 0.5 * q.ktot) * f[0] + q.eps * std::conj(f[0]);
            break;
        case KindId::dopo2:
            df[0] = (cxd(0, -q.Delta) - 0.5 * q.kappa[0]) * f[0] +
                    q.eps * std::conj(f[0]) * f[1];
            df[1] = (cxd(0, -q.Delta_b) - 0.5 * q.kappa[1]) * f[1] -
                    0.5 * std::conj(q.eps) * f[0] * f[0];
            break;
        case KindId::ndopo3:
            df[0] = (cxd(0, -q.Delta) - 0.5 * q.kappa[0]) * f[0] +
                    0.5 * q.eps * std::conj(f[1]) * f[2];
            df[1] = (cxd(0, -q.Delta_b) - 0.5 * q.kappa[1]) * f[1] +
                    0.5 * q.eps * std::conj(f[0]) * f[2];
            df[2] = (cxd(0, -q.Delta_c2) - 0.5 * q.kappa[2]) * f[2] -
                    0.5 * std::conj(q.eps) * f[0] * f[1];
            break;
        case KindId::ndopo:
            df[0] =
                (cxd(0, -q.Delta) - 0.5 * (q.kappa[0] + q.beta * std::norm(f[1]))) * f[0] +
                q.eps * std::conj(f[1]);
            df[1] =
                (cxd(0, q.Delta) - 0.5 * (q.kappa[0] + q.beta * std::norm(f[0]))) * f[1] +
                q.eps * std::conj(f[0]);
            break;
        case KindId::fc: {
            const double nph = std::norm(f[0]);
            df[0] = (-0.5 * (q.ktot + q.eta) + cxd(-q.beta, -q.chi) * nph +
                     cxd(0, -1.0) * (q.Delta + q.delta_c * r[0])) *
                    f[0];
            dr[0] =
                q.eta * nph + q.beta * nph * nph - q.gamma * r[0] - q.gamma_rc * r[0] * r[0];
            break;
        }
        case KindId::fc2: {
            const double nph = std::norm(f[0]);
            df[0] = (-0.5 * (q.ktot + q.eta) + cxd(-q.beta, -q.chi) * nph +
                     cxd(0, -1.0) * (q.Delta + q.delta_c * r[0] + q.delta_cb * r[1])) *
                    f[0];
            dr[0] =
                q.eta * nph + q.beta * nph * nph - q.gamma * r[0] - q.gamma_rc * r[0] * r[1];
            dr[1] = q.eta * nph + q.beta * nph * nph - q.gamma_bar * r[1] -
                    q.gamma_rc * r[0] * r[1];
            break;
        }
        case KindId::latch_fc:
        case KindId::latch_kerr: {
            const cxd sum = f[0] + f[1], dif = f[0] - f[1];
            for (int i = 0; i < 2; ++i) {
                const double nph = std::norm(f[i]);
                cxd det(0, -q.Delta);
                if (KindId(q.id) == KindId::latch_fc) det += cxd(0, -1.0) * (q.delta_c * r[i]);
                df[i] = (-0.5 * q.eta + cxd(-q.beta, -q.chi) * nph + det) * f[i];
                if (KindId(q.id) == KindId::latch_fc)
                    dr[i] = q.eta * nph + q.beta * nph * nph - q.gamma * r[i] -
                            q.gamma_rc * r[i] * r[i];
            }
            df[0] += -0.25 * (q.kplus * sum + q.kminus * dif);
            df[1] += -0.25 * (q.kplus * sum - q.kminus * dif);
            break;
        }
    }
}

cmat WignerComponent::input_coupling(const cxd* f, const double* r) const {
    (void)r;
    const Parsed& q = par;
    cmat U = cmat::Zero(n_fields, n_ports);
    switch (KindId(q.id)) {
        case KindId::cavity:
        case KindId::kerr:
        case KindId::dopo:
            for (int p = 0; p < n_ports; ++p) U(0, p) = -q.sqk[p];
            break;
        case KindId::dopo2:
        case KindId::ndopo3:
            for (int p = 0; p < n_ports; ++p) U(p, p) = -q.sqk[p];
            break;
        case KindId::ndopo:
            U(0, 0) = -q.sqk[0];
            U(1, 1) = -q.sqk[0];
            U(0, 2) = -std::sqrt(q.beta) * std::conj(f[1]);
            U(1, 2) = -std::sqrt(q.beta) * std::conj(f[0]);
            break;
        case KindId::fc:
        case KindId::fc2:
            U(0, 0) = -q.sqk[0];
            break;
        case KindId::latch_fc:
        case KindId::latch_kerr:
            U(0, 0) = -std::sqrt(q.kplus / 2);
            U(1, 0) = -std::sqrt(q.kplus / 2);
            U(0, 1) = -std::sqrt(q.kminus / 2);
            U(1, 1) = std::sqrt(q.kminus / 2);
            break;
    }
    return U;
}

cvec WignerComponent::output_amplitudes(const cxd* f, const double* r) const {
    (void)r;
    const Parsed& q = par;
    cvec L = cvec::Zero(n_ports);
    switch (KindId(q.id)) {
        case KindId::cavity:
        case KindId::kerr:
        case KindId::dopo:
            for (int p = 0; p < n_ports; ++p) L(p) = q.sqk[p] * f[0];
            break;
        case KindId::dopo2:
        case KindId::ndopo3:
            for (int p = 0; p < n_ports; ++p) L(p) = q.sqk[p] * f[p];
            break;
        case KindId::ndopo:
            L(0) = q.sqk[0] * f[0];
            L(1) = q.sqk[0] * f[1];
            L(2) = std::sqrt(q.beta) * f[0] * f[1];
            break;
        case KindId::fc:
        case KindId::fc2:
            L(0) = q.sqk[0] * f[0];
            break;
        case KindId::latch_fc:
        case KindId::latch_kerr:
            L(0) = std::sqrt(q.kplus / 2) * (f[0] + f[1]);
            L(1) = std::sqrt(q.kminus / 2) * (f[0] - f[1]);
            break;
    }
    return L;
}

namespace {

// Column pairs for the noise matrix: a complex vacuum channel contributes two
// real-Wiener columns (u/2, i u/2) to a field row it enters as u dbeta, and
// (Re w, Im w) to a real row it enters as 2 Re(w^* dbeta) ... the convention
// follows dbeta = (dw1 + i dw2)/2.
struct NoiseBuilder {
    cmat F;
    int nf, col = 0;
    NoiseBuilder(int nf_, int nr_, int ncols) : nf(nf_) {
        F = cmat::Zero(2 * nf_ + nr_, ncols);
    }
    void complex_channel(const std::vector<std::pair<int, cxd>>& fields,
                         const std::vector<std::pair<int, cxd>>& reals) {
        for (auto& [i, u] : fields) {
            F(i, col) = 0.5 * u;
            F(i, col + 1) = 0.5 * I_UNIT * u;
            F(nf + i, col) = std::conj(F(i, col));
            F(nf + i, col + 1) = std::conj(F(i, col + 1));
        }
        for (auto& [j, w] : reals) {
            F(2 * nf + j, col) = w.real();
            F(2 * nf + j, col + 1) = w.imag();
        }
        col += 2;
    }
    void real_channel(const std::vector<std::pair<int, double>>& reals) {
        for (auto& [j, g] : reals) F(2 * nf + j, col) = g;
        col += 1;
    }
};

}  // namespace

cmat WignerComponent::noise_matrix(const cxd* f, const double* r) const {
    const Parsed& q = par;
    NoiseBuilder nb(n_fields, n_real, n_noise_columns());
    switch (KindId(q.id)) {
        case KindId::cavity:
        case KindId::dopo:
        case KindId::dopo2:
        case KindId::ndopo3:
        case KindId::ndopo:
            break;
        case KindId::kerr:
            nb.complex_channel({{0, -2.0 * std::sqrt(q.beta) * std::conj(f[0])}}, {});
            break;
        case KindId::fc: {
            const double se = std::sqrt(q.eta), sb = std::sqrt(q.beta);
            nb.complex_channel({{0, -se}}, {{0, se * f[0]}});
            nb.complex_channel({{0, -2.0 * sb * std::conj(f[0])}}, {{0, sb * f[0] * f[0]}});
            nb.real_channel({{0, std::sqrt(q.gamma * pos(r[0]))}});
            nb.real_channel({{0, std::sqrt(q.gamma_rc) * pos(r[0])}});
            if (q.has_fca)
                nb.complex_channel(
                    {{0, -std::sqrt(pos(-2.0 * q.delta_c.imag() * pos(r[0])))}}, {});
            break;
        }
        case KindId::fc2: {
            const double se = std::sqrt(q.eta), sb = std::sqrt(q.beta);
            nb.complex_channel({{0, -se}}, {{0, se * f[0]}, {1, se * f[0]}});
            nb.complex_channel({{0, -2.0 * sb * std::conj(f[0])}},
                               {{0, sb * f[0] * f[0]}, {1, sb * f[0] * f[0]}});
            nb.real_channel({{0, std::sqrt(q.gamma * pos(r[0]))}});
            nb.real_channel({{1, std::sqrt(q.gamma_bar * pos(r[1]))}});
            const double src = std::sqrt(q.gamma_rc * pos(r[0]) * pos(r[1]));
            nb.real_channel({{0, src}, {1, src}});
            if (q.has_fca) {
                const double g = -2.0 * (q.delta_c.imag() * pos(r[0]) +
                                         q.delta_cb.imag() * pos(r[1]));
                nb.complex_channel({{0, -std::sqrt(pos(g))}}, {});
            }
            break;
        }
        case KindId::latch_fc: {
            const double se = std::sqrt(q.eta), sb = std::sqrt(q.beta);
            for (int i = 0; i < 2; ++i) nb.complex_channel({{i, -se}}, {{i, se * f[i]}});
            for (int i = 0; i < 2; ++i)
                nb.complex_channel({{i, -2.0 * sb * std::conj(f[i])}},
                                   {{i, sb * f[i] * f[i]}});
            for (int i = 0; i < 2; ++i)
                nb.real_channel({{i, std::sqrt(q.gamma * pos(r[i]))}});
            for (int i = 0; i < 2; ++i)
                nb.real_channel({{i, std::sqrt(q.gamma_rc) * pos(r[i])}});
            break;
        }
        case KindId::latch_kerr: {
            const double se = std::sqrt(q.eta), sb = std::sqrt(q.beta);
            for (int i = 0; i < 2; ++i) nb.complex_channel({{i, -se}}, {});
            for (int i = 0; i < 2; ++i)
                nb.complex_channel({{i, -2.0 * sb * std::conj(f[i])}}, {});
            break;
        }
    }
    return nb.F;
}

void WignerComponent::apply_noise(const cxd* f, const double* r, const cxd* cd,
                                  const double* rd, cxd* df, double* dr) const {
    const Parsed& q = par;
    switch (KindId(q.id)) {
        case KindId::cavity:
        case KindId::dopo:
        case KindId::dopo2:
        case KindId::ndopo3:
        case KindId::ndopo:
            break;
        case KindId::kerr:
            df[0] += -2.0 * std::sqrt(q.beta) * std::conj(f[0]) * cd[0];
            break;
        case KindId::fc: {
            const double se = std::sqrt(q.eta), sb = std::sqrt(q.beta);
            df[0] += -se * cd[0] - 2.0 * sb * std::conj(f[0]) * cd[1];
            dr[0] += 2.0 * se * std::real(std::conj(f[0]) * cd[0]) +
                     2.0 * sb * std::real(std::conj(f[0]) * std::conj(f[0]) * cd[1]) +
                     std::sqrt(q.gamma * pos(r[0])) * rd[0] +
                     std::sqrt(q.gamma_rc) * pos(r[0]) * rd[1];
            if (q.has_fca)
                df[0] += -std::sqrt(pos(-2.0 * q.delta_c.imag() * pos(r[0]))) * cd[2];
            break;
        }
        case KindId::fc2: {
            const double se = std::sqrt(q.eta), sb = std::sqrt(q.beta);
            df[0] += -se * cd[0] - 2.0 * sb * std::conj(f[0]) * cd[1];
            const double gen =
                2.0 * se * std::real(std::conj(f[0]) * cd[0]) +
                2.0 * sb * std::real(std::conj(f[0]) * std::conj(f[0]) * cd[1]);
            const double src = std::sqrt(q.gamma_rc * pos(r[0]) * pos(r[1]));
            dr[0] += gen + std::sqrt(q.gamma * pos(r[0])) * rd[0] + src * rd[2];
            dr[1] += gen + std::sqrt(q.gamma_bar * pos(r[1])) * rd[1] + src * rd[2];
            if (q.has_fca) {
                const double g = -2.0 * (q.delta_c.imag() * pos(r[0]) +
                                         q.delta_cb.imag() * pos(r[1]));
                df[0] += -std::sqrt(pos(g)) * cd[2];
            }
            break;
        }
        case KindId::latch_fc: {
            const double se = std::sqrt(q.eta), sb = std::sqrt(q.beta);
            for (int i = 0; i < 2; ++i) {
                df[i] += -se * cd[i] - 2.0 * sb * std::conj(f[i]) * cd[2 + i];
                dr[i] += 2.0 * se * std::real(std::conj(f[i]) * cd[i]) +
                         2.0 * sb *
                             std::real(std::conj(f[i]) * std::conj(f[i]) * cd[2 + i]) +
                         std::sqrt(q.gamma * pos(r[i])) * rd[i] +
                         std::sqrt(q.gamma_rc) * pos(r[i]) * rd[2 + i];
            }
            break;
        }
        case KindId::latch_kerr: {
            const double se = std::sqrt(q.eta), sb = std::sqrt(q.beta);
            for (int i = 0; i < 2; ++i)
                df[i] += -se * cd[i] - 2.0 * sb * std::conj(f[i]) * cd[2 + i];
            break;
        }
    }
}

std::string WignerComponent::validity_warning() const {
    const Parsed& q = par;
    if ((KindId(q.id) == KindId::kerr || KindId(q.id) == KindId::latch_kerr) &&
        (std::abs(q.chi) >= 0.1 || q.beta >= 0.1))
        return "truncated Wigner treatment of Kerr systems needs chi, beta << 1";
    return {};
}

Drive Drive::constant(int n_ports, int port, cxd amp) {
    Drive d = Drive::none(n_ports);
    d.per_port.at(port).push_back({amp, 0.0});
    return d;
}

Drive& Drive::add(int port, cxd amp, double omega) {
    per_port.at(port).push_back({amp, omega});
    return *this;
}

cxd Drive::eval(int port, double t) const {
    cxd v = 0;
    if (port < int(per_port.size()))
        for (const auto& term : per_port[port])
            v += term.omega == 0.0 ? term.amp : term.amp * std::exp(cxd(0, -term.omega * t));
    return v;
}

Trajectory integrate_trajectory(const WignerComponent& c, const Drive& drive, double dt,
                                double T, std::uint64_t seed, const TrajectoryOptions& opts) {
    if (dt <= 0) throw std::invalid_argument("integrate_trajectory: dt must be > 0");
    const Parsed& q = c.par;
    {
        const double max_rate = q.ktot + q.eta + q.gamma + std::abs(q.Delta);
        if (dt * max_rate > 0.05)
            std::fprintf(stderr, "photonq: warning: dt*max_rate = %.3g > 0.05\n",
                         dt * max_rate);
        const auto warn = c.validity_warning();
        if (!warn.empty()) std::fprintf(stderr, "photonq: warning: %s\n", warn.c_str());
    }
    const int nf = c.n_fields, nr = c.n_real, m = c.n_ports;
    const int nch = int(c.channels.size());
    const int n_steps = int(std::llround(T / dt));
    Trajectory tr;
    tr.dt = dt;
    tr.seed = seed;
    tr.traj_index = opts.traj_index;
    tr.n_steps = n_steps;
    tr.n_fields = nf;
    tr.n_real = nr;
    tr.n_ports = m;
    tr.save_stride = opts.save_stride;
    tr.fields.reserve(size_t(n_steps / opts.save_stride + 1) * nf);
    tr.reals.reserve(size_t(n_steps / opts.save_stride + 1) * nr);
    if (opts.record_io) {
        tr.inputs.resize(size_t(n_steps) * m);
        tr.outputs.resize(size_t(n_steps) * m);
    }

    std::array<cxd, WignerComponent::kMaxFields> f{}, df{};
    std::array<double, WignerComponent::kMaxReal> r{}, dr{};
    for (int i = 0; i < nf; ++i) {
        if (int(opts.f0.size()) > i) {
            f[i] = opts.f0[i];
        } else if (opts.sample_initial_vacuum) {
            f[i] = 0.5 * cxd(rng::normal(seed, opts.traj_index, ~std::uint64_t(0), 2 * i),
                             rng::normal(seed, opts.traj_index, ~std::uint64_t(0), 2 * i + 1));
        }
    }
    for (int i = 0; i < nr && i < int(opts.r0.size()); ++i) r[i] = opts.r0[i];

    std::array<cxd, WignerComponent::kMaxPorts> dbeta{};
    std::array<cxd, WignerComponent::kMaxChannels> cdraw{};
    std::array<double, WignerComponent::kMaxChannels> rdraw{};

    auto save = [&] {
        for (int i = 0; i < nf; ++i) tr.fields.push_back(f[i]);
        for (int i = 0; i < nr; ++i) tr.reals.push_back(r[i]);
    };
    save();

    for (int step = 0; step < n_steps; ++step) {
        const double t = step * dt;
        for (int p = 0; p < m; ++p)
            dbeta[p] = drive.eval(p, t) * dt + rng::vacuum(seed, opts.traj_index, step, p, dt);
        {
            int ci = 0, ri = 0;
            for (int ch = 0; ch < nch; ++ch) {
                if (c.channels[ch].is_complex)
                    cdraw[ci++] = rng::vacuum(seed, opts.traj_index, step, m + ch, dt);
                else
                    rdraw[ri++] = rng::wiener(seed, opts.traj_index, step, m + ch, dt);
            }
        }
        c.drift(f.data(), r.data(), df.data(), dr.data());
        for (int i = 0; i < nf; ++i) df[i] *= dt;
        for (int i = 0; i < nr; ++i) dr[i] *= dt;
        const cmat U = c.input_coupling(f.data(), r.data());
        for (int i = 0; i < nf; ++i)
            for (int p = 0; p < m; ++p) df[i] += U(i, p) * dbeta[p];
        c.apply_noise(f.data(), r.data(), cdraw.data(), rdraw.data(), df.data(), dr.data());
        if (opts.record_io) {
            const cvec L = c.output_amplitudes(f.data(), r.data());
            for (int p = 0; p < m; ++p) {
                tr.inputs[size_t(step) * m + p] = dbeta[p];
                tr.outputs[size_t(step) * m + p] = dbeta[p] + L(p) * dt;
            }
        }
        for (int i = 0; i < nf; ++i) f[i] += df[i];
        for (int i = 0; i < nr; ++i) r[i] += dr[i];
        if ((step & 63) == 0) {
            double mag = 0;
            for (int i = 0; i < nf; ++i) mag += std::norm(f[i]);
            if (!std::isfinite(mag) || mag > 1e18)
                throw std::runtime_error("integrate_trajectory: divergence at step " +
                                         std::to_string(step));
        }
        if ((step + 1) % opts.save_stride == 0) save();
    }
    return tr;
}

EnsembleStats ensemble_stats(const WignerComponent& c, const Drive& drive, double dt, double T,
                             int n_traj, std::uint64_t base_seed, const EnsembleOptions& opts) {
    if (n_traj < 2) throw std::invalid_argument("ensemble_stats: n_traj must be >= 2");
    const int nf = c.n_fields, nr = c.n_real;
    const int n_steps = int(std::llround(T / dt));
    const int n_saved = n_steps / opts.save_stride + 1;
    const int d = 2 * nf;

    struct Accum {
        cmat sum_phi;
        std::vector<cmat> sum_out;
        rmat sum_r;
        rmat sum_sq;
        rmat hist;
        void init(int n_saved, int d, int nf, int nr, int bins) {
            sum_phi = cmat::Zero(n_saved, d);
            sum_out.assign(n_saved, cmat::Zero(d, d));
            sum_r = rmat::Zero(n_saved, std::max(nr, 1));
            sum_sq = rmat::Zero(n_saved, nf);
            hist = rmat::Zero(bins, bins);
        }
        void merge(const Accum& o) {
            sum_phi += o.sum_phi;
            for (size_t i = 0; i < sum_out.size(); ++i) sum_out[i] += o.sum_out[i];
            sum_r += o.sum_r;
            sum_sq += o.sum_sq;
            hist += o.hist;
        }
    };

    auto run_chunk = [&](int begin, int end) {
        Accum acc;
        acc.init(n_saved, d, nf, nr, opts.histogram ? opts.hist_bins : 1);
        TrajectoryOptions topt;
        topt.save_stride = opts.save_stride;
        topt.record_io = false;
        topt.f0 = opts.f0;
        topt.r0 = opts.r0;
        topt.sample_initial_vacuum = opts.sample_initial_vacuum;
        for (int k = begin; k < end; ++k) {
            topt.traj_index = std::uint64_t(k);
            auto tr = integrate_trajectory(c, drive, dt, T, base_seed, topt);
            for (int s = 0; s < n_saved; ++s) {
                cvec phi(d);
                for (int i = 0; i < nf; ++i) {
                    phi(i) = tr.field(s, i);
                    phi(nf + i) = std::conj(phi(i));
                    acc.sum_sq(s, i) += std::norm(phi(i));
                }
                acc.sum_phi.row(s) += phi.transpose();
                acc.sum_out[s] += phi * phi.adjoint();
                for (int i = 0; i < nr; ++i) acc.sum_r(s, i) += tr.real_var(s, i);
            }
            if (opts.histogram) {
                const cxd z = tr.field(n_saved - 1, opts.hist_field);
                const double hw = opts.hist_halfwidth;
                const int bx = int((z.real() + hw) / (2 * hw) * opts.hist_bins);
                const int by = int((z.imag() + hw) / (2 * hw) * opts.hist_bins);
                if (bx >= 0 && bx < opts.hist_bins && by >= 0 && by < opts.hist_bins)
                    acc.hist(by, bx) += 1.0;
            }
        }
        return acc;
    };

    Accum total;
    total.init(n_saved, d, nf, nr, opts.histogram ? opts.hist_bins : 1);
    const int threads = std::max(1, opts.threads);
    if (threads == 1) {
        total = run_chunk(0, n_traj);
    } else {
        std::vector<std::future<Accum>> futs;
        const int chunk = (n_traj + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int b = t * chunk, e = std::min(n_traj, (t + 1) * chunk);
            if (b >= e) break;
            futs.push_back(std::async(std::launch::async, run_chunk, b, e));
        }
        for (auto& fu : futs) total.merge(fu.get());
    }

    EnsembleStats st;
    st.n_traj = n_traj;
    st.times.resize(n_saved);
    for (int s = 0; s < n_saved; ++s) st.times[s] = s * opts.save_stride * dt;
    st.mean = total.sum_phi.leftCols(nf) / double(n_traj);
    st.real_mean = total.sum_r / double(n_traj);
    st.cov.resize(n_saved);
    st.mean_se = cmat::Zero(n_saved, nf);
    for (int s = 0; s < n_saved; ++s) {
        cvec mu = total.sum_phi.row(s).transpose();
        mu /= double(n_traj);
        st.cov[s] = total.sum_out[s] / double(n_traj) - mu * mu.adjoint();
        for (int i = 0; i < nf; ++i) {
            const double var = total.sum_sq(s, i) / n_traj - std::norm(mu(i));
            st.mean_se(s, i) = std::sqrt(std::max(var, 0.0) / n_traj);
        }
    }
    st.hist = total.hist;
    return st;
}

std::vector<double> homodyne_record(const Trajectory& t, int port, double theta) {
    if (port < 1 || port > t.n_ports) throw std::invalid_argument("homodyne: bad port");
    if (t.outputs.empty()) throw std::invalid_argument("homodyne: trajectory lacks records");
    std::vector<double> x(t.n_steps);
    const cxd ph = std::exp(cxd(0, -theta));
    for (int i = 0; i < t.n_steps; ++i) {
        const cxd b = t.outputs[size_t(i) * t.n_ports + port - 1];
        x[i] = 2.0 * std::real(ph * b) / t.dt;
    }
    return x;
}

std::vector<cxd> heterodyne_record(const Trajectory& t, int port) {
    if (port < 1 || port > t.n_ports) throw std::invalid_argument("heterodyne: bad port");
    if (t.outputs.empty()) throw std::invalid_argument("heterodyne: trajectory lacks records");
    std::vector<cxd> x(t.n_steps);
    const std::uint64_t slot0 = 512 + std::uint64_t(port);
    for (int i = 0; i < t.n_steps; ++i) {
        const cxd dg = rng::vacuum(t.seed, t.traj_index, std::uint64_t(i), slot0, t.dt);
        x[i] = (t.outputs[size_t(i) * t.n_ports + port - 1] + dg) / t.dt;
    }
    return x;
}

namespace {

Psd welch_impl(const std::vector<cxd>& x, double dt, int segment, bool hann) {
    const int n = int(x.size());
    if (segment <= 0) {
        segment = 256;
        while (segment * 4 <= n && segment < 16384) segment *= 2;
    }
    if ((segment & (segment - 1)) != 0)
        throw std::invalid_argument("power_spectrum: segment must be a power of two");
    if (n < 2 * segment && n != segment)
        throw std::invalid_argument("power_spectrum: series too short for segment size");
    std::vector<double> w(segment, 1.0);
    double wsum2 = segment;
    if (hann) {
        wsum2 = 0;
        for (int i = 0; i < segment; ++i) {
            w[i] = 0.5 - 0.5 * std::cos(2 * M_PI * i / (segment - 1));
            wsum2 += w[i] * w[i];
        }
    }
    std::vector<double> acc(segment, 0.0);
    int count = 0;
    for (int start = 0; start + segment <= n; start += segment / 2) {
        std::vector<cxd> buf(segment);
        for (int i = 0; i < segment; ++i) buf[i] = x[start + i] * w[i];
        fft_pow2(buf);
        for (int i = 0; i < segment; ++i) acc[i] += std::norm(buf[i]);
        ++count;
        if (start + segment == n) break;
    }
    Psd out;
    out.omega.resize(segment);
    out.power.resize(segment);
    const double norm = dt / (wsum2 * count);
    for (int i = 0; i < segment; ++i) {
        const int k = (i + segment / 2) % segment;
        const int fidx = k < segment / 2 ? k : k - segment;
        out.omega[i] = 2 * M_PI * fidx / (segment * dt);
        out.power[i] = acc[k] * norm;
    }
    return out;
}

}  // namespace

Psd power_spectrum(const std::vector<double>& signal, double dt, int segment) {
    std::vector<cxd> x(signal.begin(), signal.end());
    return welch_impl(x, dt, segment, true);
}

Psd power_spectrum(const std::vector<cxd>& signal, double dt, int segment) {
    return welch_impl(signal, dt, segment, true);
}

Psd average_psd(const std::vector<std::vector<double>>& signals, double dt) {
    if (signals.empty()) throw std::invalid_argument("average_psd: no signals");
    int seg = 1;
    while (2 * seg <= int(signals[0].size())) seg *= 2;
    Psd total;
    for (size_t k = 0; k < signals.size(); ++k) {
        std::vector<cxd> x(signals[k].begin(), signals[k].begin() + seg);
        Psd p = welch_impl(x, dt, seg, false);
        if (k == 0) {
            total = p;
        } else {
            for (size_t i = 0; i < p.power.size(); ++i) total.power[i] += p.power[i];
        }
    }
    for (auto& v : total.power) v /= double(signals.size());
    return total;
}

AbcdModel linearize(const WignerComponent& c, const WignerState& fp, const Drive& drive,
                    double residual_tol) {
    const int nf = c.n_fields, nr = c.n_real, m = c.n_ports;
    for (const auto& terms : drive.per_port)
        for (const auto& term : terms)
            if (term.omega != 0.0)
                throw std::invalid_argument("linearize: drive must be constant");
    std::array<cxd, WignerComponent::kMaxFields> f{}, df{};
    std::array<double, WignerComponent::kMaxReal> r{}, dr{};
    auto effective = [&](const cxd* fv, const double* rv, cxd* dfv, double* drv) {
        c.drift(fv, rv, dfv, drv);
        const cmat U = c.input_coupling(fv, rv);
        for (int i = 0; i < nf; ++i)
            for (int p = 0; p < m; ++p) dfv[i] += U(i, p) * drive.eval(p, 0.0);
    };
    for (int i = 0; i < nf; ++i) f[i] = fp.f(i);
    for (int i = 0; i < nr; ++i) r[i] = fp.r(i);
    effective(f.data(), r.data(), df.data(), dr.data());
    double resid = 0;
    for (int i = 0; i < nf; ++i) resid += std::norm(df[i]);
    for (int i = 0; i < nr; ++i) resid += dr[i] * dr[i];
    resid = std::sqrt(resid);
    if (resid > residual_tol)
        throw std::invalid_argument("linearize: not a fixed point, drift residual " +
                                    std::to_string(resid));

    const int dim = 2 * nf + nr;
    AbcdModel g;
    g.n_modes = nf;
    g.n_aux = nr;
    g.n_ports = m;
    g.convention = Convention::wigner;
    g.A = cmat::Zero(dim, dim);
    const double h = 1e-5 * (1.0 + fp.f.norm() + fp.r.norm());
    auto eval = [&](double sc_re, double sc_im, int idx, bool is_field, cvec& dfo, rvec& dro) {
        auto fv = f;
        auto rv = r;
        std::array<cxd, WignerComponent::kMaxFields> dfv{};
        std::array<double, WignerComponent::kMaxReal> drv{};
        if (is_field)
            fv[idx] += cxd(sc_re, sc_im);
        else
            rv[idx] += sc_re;
        effective(fv.data(), rv.data(), dfv.data(), drv.data());
        dfo = cvec(nf);
        dro = rvec(std::max(nr, 1));
        for (int i = 0; i < nf; ++i) dfo(i) = dfv[i];
        for (int i = 0; i < nr; ++i) dro(i) = drv[i];
    };
    for (int j = 0; j < nf; ++j) {
        cvec fpr, fmr, fpi, fmi;
        rvec rpr, rmr, rpi, rmi;
        eval(h, 0, j, true, fpr, rpr);
        eval(-h, 0, j, true, fmr, rmr);
        eval(0, h, j, true, fpi, rpi);
        eval(0, -h, j, true, fmi, rmi);
        const cvec dfx = (fpr - fmr) / (2 * h), dfy = (fpi - fmi) / (2 * h);
        const rvec drx = (rpr - rmr) / (2 * h), dry = (rpi - rmi) / (2 * h);
        for (int i = 0; i < nf; ++i) {
            const cxd d_a = 0.5 * (dfx(i) - I_UNIT * dfy(i));
            const cxd d_ac = 0.5 * (dfx(i) + I_UNIT * dfy(i));
            g.A(i, j) = d_a;
            g.A(i, nf + j) = d_ac;
            g.A(nf + i, j) = std::conj(d_ac);
            g.A(nf + i, nf + j) = std::conj(d_a);
        }
        for (int i = 0; i < nr; ++i) {
            const cxd d_a = cxd(0.5 * drx(i), -0.5 * dry(i));
            g.A(2 * nf + i, j) = d_a;
            g.A(2 * nf + i, nf + j) = std::conj(d_a);
        }
    }
    for (int j = 0; j < nr; ++j) {
        cvec fpv, fmv;
        rvec rpv, rmv;
        eval(h, 0, j, false, fpv, rpv);
        eval(-h, 0, j, false, fmv, rmv);
        const cvec dfr = (fpv - fmv) / (2 * h);
        const rvec drr = (rpv - rmv) / (2 * h);
        for (int i = 0; i < nf; ++i) {
            g.A(i, 2 * nf + j) = dfr(i);
            g.A(nf + i, 2 * nf + j) = std::conj(dfr(i));
        }
        for (int i = 0; i < nr; ++i) g.A(2 * nf + i, 2 * nf + j) = drr(i);
    }

    const cmat U = c.input_coupling(f.data(), r.data());
    g.B = cmat::Zero(dim, 2 * m);
    g.B.topLeftCorner(nf, m) = U;
    g.B.block(nf, m, nf, m) = U.conjugate();
    g.C = cmat::Zero(2 * m, dim);
    {
        auto Lat = [&](const std::array<cxd, WignerComponent::kMaxFields>& fv,
                       const std::array<double, WignerComponent::kMaxReal>& rv) {
            return c.output_amplitudes(fv.data(), rv.data());
        };
        for (int j = 0; j < nf; ++j) {
            auto fx = f, fy = f, fx2 = f, fy2 = f;
            fx[j] += h;
            fy[j] += I_UNIT * h;
            fx2[j] -= h;
            fy2[j] -= I_UNIT * h;
            const cvec dLx = (Lat(fx, r) - Lat(fx2, r)) / (2 * h);
            const cvec dLy = (Lat(fy, r) - Lat(fy2, r)) / (2 * h);
            for (int pp = 0; pp < m; ++pp) {
                const cxd d_a = 0.5 * (dLx(pp) - I_UNIT * dLy(pp));
                const cxd d_ac = 0.5 * (dLx(pp) + I_UNIT * dLy(pp));
                g.C(pp, j) = d_a;
                g.C(pp, nf + j) = d_ac;
                g.C(m + pp, j) = std::conj(d_ac);
                g.C(m + pp, nf + j) = std::conj(d_a);
            }
        }
        for (int j = 0; j < nr; ++j) {
            auto rp = r, rm = r;
            rp[j] += h;
            rm[j] -= h;
            const cvec dLr = (Lat(f, rp) - Lat(f, rm)) / (2 * h);
            for (int pp = 0; pp < m; ++pp) {
                g.C(pp, 2 * nf + j) = dLr(pp);
                g.C(m + pp, 2 * nf + j) = std::conj(dLr(pp));
            }
        }
    }
    g.D = cmat::Identity(2 * m, 2 * m);
    g.a = cvec::Zero(dim);
    g.c = cvec::Zero(2 * m);
    g.F = c.noise_matrix(f.data(), r.data());
    return g;
}

WignerComponent latch_build(const std::string& inner_kind, const ParamMap& inner,
                            double kappa_plus, double kappa_minus) {
    if (kappa_plus < 0 || kappa_minus < 0)
        throw std::invalid_argument("latch_build: negative coupling");
    if (kappa_minus > kappa_plus)
        std::fprintf(stderr, "photonq: warning: latch designed for kappa_minus <= kappa_plus\n");
    if (inner_kind != "fc" && inner_kind != "kerr")
        throw std::invalid_argument("latch_build: inner kind must be fc or kerr");
    ParamMap p = inner;
    p.erase("kappa");
    p["kappa_plus"] = kappa_plus;
    p["kappa_minus"] = kappa_minus;
    return make_sde("latch-" + inner_kind, p);
}

ParamMap normalized_latch_params(const ParamMap& ph) {
    ParamMap out;
    const double eta = get_or(ph, "eta", 0.0);
    const double kplus = need(ph, "kappa_plus");
    const double k = kplus + eta;
    const double beta = get_or(ph, "beta", 0.0);
    const double delta = get_or(ph, "delta_re", 0.0);
    const double gamma = get_or(ph, "gamma", 0.0);
    out["kappa_plus_bar"] = kplus / k;
    out["kappa_minus_bar"] = get_or(ph, "kappa_minus", 0.0) / k;
    out["eta_bar"] = eta / k;
    out["gamma_bar"] = gamma / k;
    out["Delta_bar"] = get_or(ph, "Delta", 0.0) / k;
    out["chi_bar"] = beta > 0 ? get_or(ph, "chi", 0.0) / beta : 0.0;
    out["zeta_bar"] = beta > 0 ? delta / beta : 0.0;
    out["mu_bar"] = beta > 0 ? delta * eta / (k * beta) : 0.0;
    out["delta_fca_bar"] = delta != 0 ? -get_or(ph, "delta_im", 0.0) / delta : 0.0;
    return out;
}

}  // namespace photonq
