#include "overlap/serialization.hpp"

namespace overlap::io {

namespace {

const json& require(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) throw ConfigError(path + "/" + key, "missing field");
    return j.at(key);
}

double number(const json& j, const char* key, const std::string& path) {
    const auto& v = require(j, key, path);
    if (!v.is_number()) throw ConfigError(path + "/" + key, "expected a number");
    return v.get<double>();
}

std::size_t index(const json& j, const char* key, const std::string& path) {
    const auto& v = require(j, key, path);
    if (!v.is_number_unsigned()) throw ConfigError(path + "/" + key, "expected a nonnegative integer");
    return v.get<std::size_t>();
}

std::vector<double> numbers(const json& j, const char* key, const std::string& path) {
    const auto& v = require(j, key, path);
    if (!v.is_array()) throw ConfigError(path + "/" + key, "expected an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw ConfigError(path + "/" + key + "/" + std::to_string(i), "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

}  // namespace

json to_json(const discrete::DiscretePair& pair) {
    json j{{"support", pair.support}, {"p0", pair.p0}, {"p1", pair.p1}, {"pi", pair.pi}};
    if (pair.has_coords()) j["coords"] = pair.coords;
    return j;
}

discrete::DiscretePair pair_from_json(const json& j) {
    const std::string path;
    discrete::DiscretePair pair;
    const auto& support = require(j, "support", path);
    if (!support.is_array()) throw ConfigError("/support", "expected an array");
    for (const auto& s : support)
        pair.support.push_back(s.is_string() ? s.get<std::string>() : s.dump());
    pair.p0 = numbers(j, "p0", path);
    pair.p1 = numbers(j, "p1", path);
    pair.pi = number(j, "pi", path);
    if (j.contains("coords")) {
        const auto& coords = j.at("coords");
        if (!coords.is_array()) throw ConfigError("/coords", "expected an array");
        for (std::size_t i = 0; i < coords.size(); ++i) {
            if (!coords[i].is_array())
                throw ConfigError("/coords/" + std::to_string(i), "expected an array");
            pair.coords.push_back(coords[i].get<std::vector<double>>());
        }
    }
    pair.validate();
    return pair;
}

json to_json(const process::ProcessSpec& spec) {
    using namespace process;
    return std::visit(
        [](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IndependentBernoulli>) {
                return {{"variant", "independent_bernoulli"}, {"q0", s.q0}, {"q1", s.q1}};
            } else if constexpr (std::is_same_v<T, LrBudgetedBernoulli>) {
                return {{"variant", "lr_budgeted_bernoulli"},
                        {"eta", s.eta},
                        {"pi", s.pi},
                        {"p", s.p},
                        {"allocation",
                         s.allocation == Allocation::anchored ? "anchored" : "symmetric"}};
            } else if constexpr (std::is_same_v<T, GaussianShift>) {
                return {{"variant", "gaussian_shift"},
                        {"m0", s.mean0},
                        {"m1", s.mean1},
                        {"variances", s.variances}};
            } else if constexpr (std::is_same_v<T, Ma1>) {
                return {{"variant", "ma1"}, {"theta", s.theta}, {"sigma2", s.sigma2}, {"p", s.p}};
            } else if constexpr (std::is_same_v<T, FactorModel>) {
                return {{"variant", "factor"},
                        {"loadings", s.loadings},
                        {"idiosyncratic", s.idiosyncratic}};
            } else {
                json j{{"variant", "balancing_scenario"}, {"p", s.p}};
                if (const auto* sparse = std::get_if<SparseScore>(&s.score)) {
                    j["kind"] = "sparse";
                    j["s"] = sparse->s;
                    j["e_table"] = sparse->e_table;
                    j["q"] = sparse->q;
                } else {
                    const auto& latent = std::get<LatentClassScore>(s.score);
                    j["kind"] = "latent_class";
                    j["prior"] = latent.prior;
                    j["e_u"] = latent.e_u;
                    j["class_probs"] = latent.class_probs;
                }
                return j;
            }
        },
        spec);
}

process::ProcessSpec spec_from_json(const json& j) {
    using namespace process;
    const std::string path;
    const auto& variant = require(j, "variant", path);
    if (!variant.is_string()) throw ConfigError("/variant", "expected a string");
    const std::string v = variant.get<std::string>();

    if (v == "independent_bernoulli") {
        IndependentBernoulli s;
        s.q0 = numbers(j, "q0", path);
        s.q1 = numbers(j, "q1", path);
        s.validate();
        return s;
    }
    if (v == "lr_budgeted_bernoulli") {
        LrBudgetedBernoulli s;
        s.eta = number(j, "eta", path);
        s.pi = number(j, "pi", path);
        s.p = index(j, "p", path);
        if (j.contains("allocation")) {
            const std::string a = j.at("allocation").get<std::string>();
            if (a == "anchored") s.allocation = Allocation::anchored;
            else if (a == "symmetric") s.allocation = Allocation::symmetric;
            else throw ConfigError("/allocation", "expected anchored or symmetric");
        }
        validate(ProcessSpec{s});
        return s;
    }
    if (v == "gaussian_shift") {
        GaussianShift s;
        s.mean0 = numbers(j, "m0", path);
        s.mean1 = numbers(j, "m1", path);
        s.variances = numbers(j, "variances", path);
        s.validate();
        return s;
    }
    if (v == "ma1") {
        Ma1 s;
        s.theta = number(j, "theta", path);
        s.sigma2 = number(j, "sigma2", path);
        s.p = index(j, "p", path);
        s.validate();
        return s;
    }
    if (v == "factor") {
        FactorModel s;
        const auto& loadings = require(j, "loadings", path);
        if (!loadings.is_array()) throw ConfigError("/loadings", "expected an array");
        for (std::size_t i = 0; i < loadings.size(); ++i) {
            if (!loadings[i].is_array())
                throw ConfigError("/loadings/" + std::to_string(i), "expected an array");
            s.loadings.push_back(loadings[i].get<std::vector<double>>());
        }
        s.idiosyncratic = numbers(j, "idiosyncratic", path);
        s.validate();
        return s;
    }
    if (v == "balancing_scenario") {
        BalancingScenario s;
        s.p = index(j, "p", path);
        const std::string kind = require(j, "kind", path).get<std::string>();
        if (kind == "sparse") {
            SparseScore score;
            score.s = index(j, "s", path);
            score.e_table = numbers(j, "e_table", path);
            if (j.contains("q")) score.q = number(j, "q", path);
            s.score = score;
        } else if (kind == "latent_class") {
            LatentClassScore score;
            score.prior = numbers(j, "prior", path);
            score.e_u = numbers(j, "e_u", path);
            const auto& probs = require(j, "class_probs", path);
            if (!probs.is_array()) throw ConfigError("/class_probs", "expected an array");
            for (std::size_t i = 0; i < probs.size(); ++i)
                score.class_probs.push_back(probs[i].get<std::vector<double>>());
            s.score = score;
        } else {
            throw ConfigError("/kind", "expected sparse or latent_class");
        }
        s.validate();
        return s;
    }
    throw ConfigError("/variant", "unknown variant '" + v + "'");
}

json to_json(const estimate::OverlapAudit& a) {
    json j;
    j["n"] = a.n;
    j["p"] = a.p;
    j["pi_hat"] = a.pi_hat;
    j["eta_star_hat"] = a.eta_hats.eta_star;
    j["eta_att_hat"] = a.eta_hats.eta_att;
    j["eta_atc_hat"] = a.eta_hats.eta_atc;
    j["bayes_accuracy_hat"] = a.bayes_accuracy_hat;
    j["mad_observed"] = a.imbalance.mad;
    j["euclidean_gap"] = a.imbalance.euclidean_gap;
    j["opnorm0"] = a.imbalance.opnorm0;
    j["opnorm1"] = a.imbalance.opnorm1;
    j["per_covariate_abs_gaps"] = a.imbalance.abs_gaps;
    j["fit"] = {{"converged", a.fit.converged},
                {"iterations", a.fit.iterations},
                {"final_gradient_norm", a.fit.final_gradient_norm},
                {"coefficients", a.fit.coefficients},
                {"diagnostic", a.fit.diagnostic}};
    json bounds_at = json::object();
    for (const auto& [eta, b] : a.mad_bound_at) bounds_at[std::to_string(eta)] = b;
    j["mad_bound_at"] = bounds_at;
    json trimming = json::array();
    for (const auto& pt : a.trimming_curve)
        trimming.push_back({{"eta_tilde", pt.eta_tilde},
                            {"retained_fraction", pt.retained_fraction},
                            {"retention_bound", pt.retention_bound}});
    j["trimming_curve"] = trimming;
    json verdicts = json::array();
    for (const auto& v : a.verdicts) {
        json checks = json::array();
        for (const auto& c : v.checks)
            checks.push_back({{"quantity", c.quantity},
                              {"observed", c.observed},
                              {"bound", c.bound},
                              {"slack", c.slack},
                              {"pass", c.pass}});
        verdicts.push_back({{"eta", v.eta}, {"consistent", v.consistent}, {"checks", checks}});
    }
    j["consistency"] = verdicts;
    return j;
}

}  // namespace overlap::io
