// Command-line front end: solve/certify/track/bench on built-in demos or
// JSON-configured problems. Every output file carries a hash of the
// effective configuration, and identical configs produce byte-identical
// files (wall-clock timings go to stderr only).

#include <sys/stat.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "proxflow/demos.hpp"

using json = nlohmann::json;
using namespace proxflow;

namespace {

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// JSON numbers must stay finite; ±inf and nan are emitted as strings.
json json_num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

Mat load_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open CSV file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw DomainError("bad CSV number '" + cell + "' in " + path);
            }
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DomainError("empty CSV file: " + path);
    Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
            throw DomainError("ragged CSV rows in " + path);
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

// A matrix field is either an inline array-of-arrays or a CSV path string.
Mat load_mat(const json& node, const std::string& what) {
    if (node.is_string()) return load_csv_matrix(node.get<std::string>());
    if (!node.is_array() || node.empty())
        throw DomainError("config field " + what + " must be a 2-d array or a CSV path");
    const auto rows = static_cast<Eigen::Index>(node.size());
    const auto cols = static_cast<Eigen::Index>(node[0].size());
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(node[i].size()) != cols)
            throw DomainError("config field " + what + " has ragged rows");
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = node[i][j].get<double>();
    }
    return m;
}

Vec load_vec(const json& node, const std::string& what) {
    if (node.is_string()) {
        const Mat m = load_csv_matrix(node.get<std::string>());
        if (m.rows() != 1 && m.cols() != 1)
            throw DomainError("config field " + what + " CSV must be a single row or column");
        return m.rows() == 1 ? Vec(m.row(0).transpose()) : Vec(m.col(0));
    }
    if (!node.is_array() || node.empty())
        throw DomainError("config field " + what + " must be an array or a CSV path");
    Vec v(static_cast<Eigen::Index>(node.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = node[i].get<double>();
    return v;
}

ProxOperator build_g(const json& node) {
    const std::string type = node.value("type", "zero");
    if (type == "zero") return make_zero();
    if (type == "l1") return make_l1(node.at("lambda").get<double>());
    if (type == "box")
        return make_box_indicator(load_vec(node.at("lo"), "g.lo"), load_vec(node.at("hi"), "g.hi"));
    throw DomainError("unknown regularizer type: " + type);
}

struct LoadedRun {
    CompositeProblem problem;
    Vec x0;
    FlowConfig flow;
    json problem_desc;  // canonical description that enters the config hash
};

LoadedRun build_problem(const json& spec, std::uint64_t seed) {
    const std::string type = spec.value("type", spec.contains("name") ? "demo" : "");
    if (type == "demo") {
        const std::string name = spec.at("name").get<std::string>();
        Demo d = make_demo(name, seed);
        return {std::move(d.problem), std::move(d.x0), d.flow,
                json{{"type", "demo"}, {"name", name}}};
    }
    if (type == "lasso") {
        const Mat A = load_mat(spec.at("A"), "A");
        const Vec u = load_vec(spec.at("u"), "u");
        const double lambda = spec.at("lambda").get<double>();
        CompositeProblem p = lasso_problem(A, u, lambda);
        try {
            p = with_ista_fstar(std::move(p), Vec::Zero(p.dim));
        } catch (const NumericalError&) {
            // no reference value; checks that need one are skipped
        }
        Vec x0 = spec.contains("x0") ? load_vec(spec.at("x0"), "x0") : Vec(Vec::Zero(p.dim));
        if (x0.size() != p.dim) throw DomainError("x0 has wrong dimension");
        return {std::move(p), std::move(x0), FlowConfig{}, spec};
    }
    if (type == "quadratic") {
        const Mat Q = load_mat(spec.at("Q"), "Q");
        const Vec b = load_vec(spec.at("b"), "b");
        CompositeProblem p = quadratic_problem(Q, b, build_g(spec.value("g", json::object())));
        if (p.g.name != "box") {
            try {
                p = with_ista_fstar(std::move(p), Vec::Zero(p.dim));
            } catch (const std::exception&) {
                // singular or unbounded: leave the reference value unset
            }
        }
        Vec x0 = spec.contains("x0") ? load_vec(spec.at("x0"), "x0") : Vec(Vec::Zero(p.dim));
        if (x0.size() != p.dim) throw DomainError("x0 has wrong dimension");
        return {std::move(p), std::move(x0), FlowConfig{}, spec};
    }
    throw DomainError("problem spec needs type 'demo', 'lasso', or 'quadratic'");
}

struct FlowOverrides {
    std::optional<double> alpha, step, t_end, residual_stop;
    std::optional<std::string> method;
    std::optional<int> record_every;
};

void apply_flow(FlowConfig& cfg, const json* node, const FlowOverrides& flags) {
    if (node != nullptr) {
        if (node->contains("alpha")) cfg.alpha = node->at("alpha").get<double>();
        if (node->contains("step")) cfg.step = node->at("step").get<double>();
        if (node->contains("method")) cfg.method = parse_method(node->at("method").get<std::string>());
        if (node->contains("t_end")) cfg.t_end = node->at("t_end").get<double>();
        if (node->contains("record_every")) cfg.record_every = node->at("record_every").get<int>();
        if (node->contains("residual_stop"))
            cfg.residual_stop = node->at("residual_stop").get<double>();
    }
    if (flags.alpha) cfg.alpha = *flags.alpha;
    if (flags.step) cfg.step = *flags.step;
    if (flags.method) cfg.method = parse_method(*flags.method);
    if (flags.t_end) cfg.t_end = *flags.t_end;
    if (flags.record_every) cfg.record_every = *flags.record_every;
    if (flags.residual_stop) cfg.residual_stop = *flags.residual_stop;
}

json flow_json(const FlowConfig& cfg) {
    json j{{"alpha", cfg.alpha},
           {"step", cfg.step},
           {"method", method_name(cfg.method)},
           {"t_end", cfg.t_end},
           {"record_every", cfg.record_every}};
    if (cfg.residual_stop) j["residual_stop"] = *cfg.residual_stop;
    return j;
}

void ensure_dir(const std::string& dir) {
    if (dir.empty() || dir == ".") return;
    std::string partial;
    for (char c : dir + "/") {
        if (c == '/') {
            if (!partial.empty() && partial != ".") ::mkdir(partial.c_str(), 0755);
        }
        partial += c;
    }
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot write " + path);
    out << content;
}

// Minimal line chart: log10 of the cost gap against time.
std::string render_svg(const std::string& hash, const std::vector<double>& ts,
                       const std::vector<double>& ys, const std::string& ylabel) {
    const double w = 820, hgt = 500, l = 80, r = 790, top = 40, bot = 450;
    double tmin = ts.front(), tmax = ts.back(), ymin = ys[0], ymax = ys[0];
    for (double y : ys) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    if (tmax <= tmin) tmax = tmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;
    const auto px = [&](double t) { return l + (r - l) * (t - tmin) / (tmax - tmin); };
    const auto py = [&](double y) { return bot - (bot - top) * (y - ymin) / (ymax - ymin); };
    const auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4g", v);
        return std::string(buf);
    };
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << hgt
        << "\">\n<!-- config " << hash << " -->\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<line x1=\"" << l << "\" y1=\"" << bot << "\" x2=\"" << r << "\" y2=\"" << bot
        << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << l << "\" y1=\"" << top << "\" x2=\"" << l << "\" y2=\"" << bot
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double t = tmin + (tmax - tmin) * i / 4.0;
        const double y = ymin + (ymax - ymin) * i / 4.0;
        out << "<text x=\"" << px(t) << "\" y=\"" << bot + 20
            << "\" font-size=\"12\" text-anchor=\"middle\">" << fmt(t) << "</text>\n"
            << "<text x=\"" << l - 8 << "\" y=\"" << py(y) + 4
            << "\" font-size=\"12\" text-anchor=\"end\">" << fmt(y) << "</text>\n";
    }
    out << "<text x=\"" << (l + r) / 2 << "\" y=\"" << bot + 40
        << "\" font-size=\"14\" text-anchor=\"middle\">t</text>\n"
        << "<text x=\"18\" y=\"" << (top + bot) / 2
        << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << (top + bot) / 2 << ")\">" << ylabel << "</text>\n<polyline points=\"";
    for (std::size_t i = 0; i < ts.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(ts[i]), py(ys[i]));
        out << buf;
    }
    out << "\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n</svg>\n";
    return out.str();
}

json report_json(const CertificateReport& rep) {
    json j{{"name", rep.name},
           {"passed", rep.passed},
           {"worst_violation", json_num(rep.worst_violation)},
           {"slack", json_num(rep.slack_used)}};
    if (rep.witness_time || rep.witness_point) {
        json witness = json::object();
        if (rep.witness_time) witness["t"] = *rep.witness_time;
        if (rep.witness_point) {
            json pt = json::array();
            for (Eigen::Index i = 0; i < rep.witness_point->size(); ++i)
                pt.push_back(json_num((*rep.witness_point)(i)));
            witness["x"] = pt;
        }
        j["witness"] = witness;
    }
    json details = json::object();
    for (const auto& [key, value] : rep.details) details[key] = json_num(value);
    j["details"] = details;
    return j;
}

struct CommonFlags {
    std::string config_path, demo, out_dir = ".";
    std::uint64_t seed = 7;
    bool seed_given = false;
    FlowOverrides flow;
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& err) {
        throw DomainError(std::string("malformed config JSON: ") + err.what());
    }
}

// Resolves config file + flags into a runnable problem; demo flag wins over
// the config's problem block, an explicit --seed wins over the config's.
LoadedRun resolve_run(const CommonFlags& flags, const json& cfg, std::uint64_t* seed_out) {
    std::uint64_t seed = flags.seed;
    if (!flags.seed_given && cfg.contains("seed")) seed = cfg.at("seed").get<std::uint64_t>();
    *seed_out = seed;
    json spec;
    if (!flags.demo.empty())
        spec = json{{"type", "demo"}, {"name", flags.demo}};
    else if (cfg.contains("problem"))
        spec = cfg.at("problem");
    else
        throw DomainError("no problem given: pass --demo NAME or a config with a problem block");
    LoadedRun run = build_problem(spec, seed);
    const json* flow_node = cfg.contains("flow") ? &cfg.at("flow") : nullptr;
    apply_flow(run.flow, flow_node, flags.flow);
    validate_flow_config(run.flow);
    return run;
}

std::string out_path(const CommonFlags& flags, const std::string& file) {
    return flags.out_dir == "." ? file : flags.out_dir + "/" + file;
}

int cmd_solve(const CommonFlags& flags, bool svg, bool states) {
    const json cfg = load_config(flags.config_path);
    std::uint64_t seed = 0;
    LoadedRun run = resolve_run(flags, cfg, &seed);

    json eff{{"command", "solve"}, {"problem", run.problem_desc}, {"flow", flow_json(run.flow)},
             {"seed", seed},       {"states", states},           {"svg", svg}};
    const std::string hash = hash_hex(fnv1a(eff.dump()));

    const auto started = std::chrono::steady_clock::now();
    const Trajectory traj = integrate(run.problem, run.flow, run.x0);
    const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    std::cerr << "solve " << run.problem.name << ": " << traj.size() << " samples, wall "
              << wall_ms << " ms\n";

    ensure_dir(flags.out_dir);
    std::ostringstream csv;
    csv << "# config " << hash << "\n";
    write_trajectory_csv(csv, traj, states);
    write_file(out_path(flags, "trajectory.csv"), csv.str());

    const Eigen::Index last = traj.size() - 1;
    json summary{{"command", "solve"},
                 {"config_hash", hash},
                 {"problem", run.problem.name},
                 {"seed", seed},
                 {"flow", flow_json(run.flow)},
                 {"n_records", traj.size()},
                 {"t_final", traj.times(last)},
                 {"final_cost", json_num(traj.costs[static_cast<std::size_t>(last)].value())},
                 {"final_residual", json_num(traj.residuals(last))}};
    if (run.problem.fstar) {
        summary["fstar"] = json_num(*run.problem.fstar);
        summary["fstar_provenance"] = run.problem.fstar_provenance;
        try {
            const RateEstimate rate = estimate_exp_rate(traj, *run.problem.fstar);
            summary["fitted_rate"] =
                json{{"rate", json_num(rate.rate)}, {"r2", json_num(rate.r2)},
                     {"n_points", rate.n_points}};
        } catch (const DomainError&) {
            summary["fitted_rate"] = nullptr;
        }
    } else {
        summary["fitted_rate"] = nullptr;
    }
    write_file(out_path(flags, "summary.json"), summary.dump(2) + "\n");

    if (svg) {
        const double floor_gap = 1e-16;
        double base = run.problem.fstar ? *run.problem.fstar
                                        : [&] {
                                              double lo = std::numeric_limits<double>::infinity();
                                              for (const auto& c : traj.costs)
                                                  if (c.is_finite())
                                                      lo = std::min(lo, c.value());
                                              return lo;
                                          }();
        std::vector<double> ts, ys;
        for (Eigen::Index k = 0; k < traj.size(); ++k) {
            if (!traj.costs[static_cast<std::size_t>(k)].is_finite()) continue;
            ts.push_back(traj.times(k));
            ys.push_back(std::log10(
                std::max(traj.costs[static_cast<std::size_t>(k)].value() - base, floor_gap)));
        }
        if (ts.size() >= 2)
            write_file(out_path(flags, "trajectory.svg"),
                       render_svg(hash, ts, ys, "log10 cost gap"));
    }
    return 0;
}

const std::vector<std::string>& all_checks() {
    static const std::vector<std::string> names = {"monotone",       "dini",           "pl",
                                                   "condition12",    "kl",             "cauchy-schwarz",
                                                   "alpha-monotone", "rate"};
    return names;
}

int cmd_certify(const CommonFlags& flags, std::vector<std::string> checks,
                std::optional<double> mu_flag, std::vector<double> alphas, int cloud_n,
                double cloud_scale) {
    const json cfg = load_config(flags.config_path);
    std::uint64_t seed = 0;
    LoadedRun run = resolve_run(flags, cfg, &seed);
    // certificates reason about the Euler quotient, so default to euler with
    // every step recorded unless the caller overrides
    if (!flags.flow.method && !(cfg.contains("flow") && cfg.at("flow").contains("method")))
        run.flow.method = Method::euler;
    if (!flags.flow.record_every &&
        !(cfg.contains("flow") && cfg.at("flow").contains("record_every")))
        run.flow.record_every = 1;

    const bool checks_given = !checks.empty();
    if (!checks_given) {
        if (cfg.contains("checks"))
            checks = cfg.at("checks").get<std::vector<std::string>>();
        else
            checks = all_checks();
    }
    for (const auto& name : checks)
        if (std::find(all_checks().begin(), all_checks().end(), name) == all_checks().end())
            throw DomainError("unknown check: " + name);
    const bool explicit_selection = checks_given || cfg.contains("checks");

    if (alphas.empty()) {
        if (cfg.contains("alphas"))
            alphas = cfg.at("alphas").get<std::vector<double>>();
        else
            alphas = {0.1, 0.2, 0.5, 1.0};
    }
    std::optional<double> mu = mu_flag;
    if (!mu && cfg.contains("mu")) mu = cfg.at("mu").get<double>();

    json eff{{"command", "certify"}, {"problem", run.problem_desc},
             {"flow", flow_json(run.flow)}, {"seed", seed},
             {"checks", checks}, {"alphas", alphas},
             {"cloud_n", cloud_n}, {"cloud_scale", cloud_scale}};
    if (mu) eff["mu"] = *mu;
    const std::string hash = hash_hex(fnv1a(eff.dump()));

    const CompositeProblem& p = run.problem;
    const double alpha = run.flow.alpha;
    const Trajectory traj = integrate(p, run.flow, run.x0);
    const std::vector<Vec> cloud =
        draw_cloud(trajectory_cloud_sampler(p, traj, cloud_scale, seed), cloud_n);

    const bool has_fstar = p.fstar.has_value();
    const bool has_subgrad = bool(p.g.min_norm_composite);
    std::optional<PLEstimate> pl;
    const auto pl_estimate = [&]() -> const PLEstimate& {
        if (!pl) pl = estimate_pl_constant(p, alpha, replay_sampler(cloud), cloud_n);
        return *pl;
    };

    json entries = json::array();
    bool all_passed = true;
    const auto skip = [&](const std::string& name, const std::string& why) {
        if (explicit_selection)
            throw DomainError("check '" + name + "' is not applicable here: " + why);
        entries.push_back(json{{"name", name}, {"skipped", true}, {"reason", why}});
    };
    const auto add = [&](const CertificateReport& rep) {
        entries.push_back(report_json(rep));
        all_passed = all_passed && rep.passed;
    };

    for (const std::string& name : checks) {
        if (name == "monotone") {
            add(check_monotone_cost(traj));
        } else if (name == "dini") {
            const DiniCalibration cal =
                calibrate_dini_slack(p, alpha, run.flow.step, std::min(run.flow.t_end, 20.0),
                                     run.x0, run.flow.method);
            CertificateReport rep = check_dini_bound(traj, p, alpha, cal.slack_c);
            rep.details["halving_ratio"] = cal.ratio;
            rep.details["excess_coarse"] = cal.excess_coarse;
            add(rep);
        } else if (name == "pl") {
            if (!has_fstar) { skip(name, "no reference optimal value"); continue; }
            const PLEstimate& est = pl_estimate();
            // certifying a rate needs a strictly positive constant
            CertificateReport rep = make_report("pl", est.mu_hat > 0.0 ? -est.mu_hat : 1.0, 0.0);
            rep.witness_point = est.min_witness;
            rep.details["mu_hat"] = est.mu_hat;
            rep.details["n_samples"] = est.n_samples;
            rep.details["alpha"] = est.alpha;
            add(rep);
        } else if (name == "condition12") {
            if (!has_fstar) { skip(name, "no reference optimal value"); continue; }
            double mu_used;
            if (mu) {
                mu_used = *mu;
            } else {
                // empirical constant: the cloud minimum of ½‖ẋ‖²/(α²(F−F⋆))
                mu_used = std::numeric_limits<double>::infinity();
                for (const Vec& x : cloud) {
                    const double gap = cost(p, x).finite_value() - *p.fstar;
                    if (gap <= 1e-12) continue;
                    const double flow_sq =
                        prox_grad_vector_field(p, alpha, x).field.squaredNorm();
                    mu_used = std::min(mu_used, 0.5 * flow_sq / (alpha * alpha * gap));
                }
                if (!std::isfinite(mu_used)) { skip(name, "cloud has no admissible points"); continue; }
            }
            CertificateReport rep =
                check_condition12(p, alpha, mu_used, replay_sampler(cloud), cloud_n);
            rep.details["predicted_rate"] = 2.0 * mu_used * alpha;
            rep.details["mu_supplied"] = mu ? 1.0 : 0.0;
            add(rep);
        } else if (name == "kl") {
            if (!has_fstar) { skip(name, "no reference optimal value"); continue; }
            if (!has_subgrad) { skip(name, "no exact subdifferential rule for " + p.g.name); continue; }
            add(check_kl(p, replay_sampler(cloud), cloud_n, pl_estimate().mu_hat));
        } else if (name == "cauchy-schwarz") {
            if (!has_subgrad) { skip(name, "no exact subdifferential rule for " + p.g.name); continue; }
            add(check_lemma_cauchy_schwarz(p, alpha, replay_sampler(cloud), cloud_n));
        } else if (name == "alpha-monotone") {
            Vec grid(static_cast<Eigen::Index>(alphas.size()));
            for (std::size_t i = 0; i < alphas.size(); ++i)
                grid(static_cast<Eigen::Index>(i)) = alphas[i];
            add(check_dg_alpha_monotone(p, replay_sampler(cloud), cloud_n, grid));
        } else if (name == "rate") {
            if (!has_fstar) { skip(name, "no reference optimal value"); continue; }
            RateEstimate est{};
            try {
                est = estimate_exp_rate(traj, *p.fstar);
            } catch (const DomainError& err) {
                skip(name, err.what());
                continue;
            }
            const double mu_alpha = pl_estimate().mu_hat * alpha;
            CertificateReport rep = make_report("rate", mu_alpha - est.rate, 1e-9);
            rep.details["rate"] = est.rate;
            rep.details["r2"] = est.r2;
            rep.details["n_points"] = est.n_points;
            rep.details["mu_alpha"] = mu_alpha;
            rep.details["two_mu_alpha"] = 2.0 * mu_alpha;
            add(rep);
        }
    }

    ensure_dir(flags.out_dir);
    json doc{{"command", "certify"}, {"config_hash", hash},   {"problem", p.name},
             {"seed", seed},         {"alpha", alpha},        {"flow", flow_json(run.flow)},
             {"cloud_n", cloud_n},   {"all_passed", all_passed}, {"checks", entries}};
    write_file(out_path(flags, "certificates.json"), doc.dump(2) + "\n");
    return all_passed ? 0 : 2;
}

int cmd_track(const CommonFlags& flags) {
    const json cfg = load_config(flags.config_path);
    std::uint64_t seed = flags.seed;
    if (!flags.seed_given && cfg.contains("seed")) seed = cfg.at("seed").get<std::uint64_t>();
    std::string name = flags.demo.empty() ? cfg.value("demo", "tv-lasso") : flags.demo;

    TvDemo demo = make_tv_demo(name, seed);
    const json* flow_node = cfg.contains("flow") ? &cfg.at("flow") : nullptr;
    apply_flow(demo.flow, flow_node, flags.flow);
    validate_flow_config(demo.flow);
    if (cfg.contains("x0")) {
        demo.x0 = load_vec(cfg.at("x0"), "x0");
        if (demo.x0.size() != make_tv_demo(name, seed).x0.size())
            throw DomainError("track: x0 has wrong dimension");
    }

    json eff{{"command", "track"},
             {"demo", name},
             {"flow", flow_json(demo.flow)},
             {"seed", seed}};
    if (cfg.contains("x0")) {
        json x0j = json::array();
        for (Eigen::Index i = 0; i < demo.x0.size(); ++i) x0j.push_back(demo.x0(i));
        eff["x0"] = x0j;
    }
    const std::string hash = hash_hex(fnv1a(eff.dump()));

    const auto started = std::chrono::steady_clock::now();
    const TrackingRecord rec = integrate_tv(demo.problem, demo.flow, demo.x0);
    const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    std::cerr << "track " << name << ": " << rec.times.size() << " samples, wall " << wall_ms
              << " ms\n";

    const CertificateReport rep = check_tracking(rec, demo.problem.mu, demo.flow.alpha);

    ensure_dir(flags.out_dir);
    std::ostringstream csv;
    csv << "# config " << hash << "\n";
    write_tracking_csv(csv, rec);
    write_file(out_path(flags, "tracking.csv"), csv.str());

    double tail_max = 0.0;
    for (Eigen::Index i = 0; i < rec.times.size(); ++i)
        if (rec.times(i) >= 0.9 * rec.times(rec.times.size() - 1))
            tail_max = std::max(tail_max, rec.V(i));
    json doc{{"command", "track"},
             {"config_hash", hash},
             {"demo", name},
             {"seed", seed},
             {"mu", demo.problem.mu},
             {"alpha", demo.flow.alpha},
             {"v0", json_num(rec.v0)},
             {"tail_max_gap", json_num(tail_max)},
             {"bound", report_json(rep)}};
    write_file(out_path(flags, "tracking.json"), doc.dump(2) + "\n");
    return rep.passed ? 0 : 2;
}

int cmd_bench(const CommonFlags& flags, std::vector<double> alphas) {
    const json cfg = load_config(flags.config_path);
    std::uint64_t seed = flags.seed;
    if (!flags.seed_given && cfg.contains("seed")) seed = cfg.at("seed").get<std::uint64_t>();
    bool grid_given = !alphas.empty();
    if (!grid_given && cfg.contains("alphas")) {
        alphas = cfg.at("alphas").get<std::vector<double>>();
        grid_given = true;
    }
    if (grid_given && alphas.empty()) throw DomainError("bench: the alpha grid is empty");
    if (!grid_given) alphas = {0.2, 0.5, 1.0};
    const std::string name = flags.demo.empty() ? cfg.value("demo", "lasso") : flags.demo;

    json eff{{"command", "bench"}, {"demo", name}, {"alphas", alphas}, {"seed", seed}};
    const std::string hash = hash_hex(fnv1a(eff.dump()));

    Demo demo = make_demo(name, seed);
    if (!demo.problem.fstar) throw DomainError("bench: demo has no reference optimal value");

    std::ostringstream csv;
    csv << "# config " << hash << "\nalpha,rate,r2,n_points\n";
    for (double alpha : alphas) {
        if (!(alpha > 0.0)) throw DomainError("bench: alphas must be positive");
        FlowConfig run_cfg{.alpha = alpha,
                           .step = 1e-2,
                           .method = Method::rk4,
                           .t_end = std::min(300.0, 60.0 / alpha),
                           .record_every = 1};
        const auto started = std::chrono::steady_clock::now();
        const Trajectory traj = integrate(demo.problem, run_cfg, demo.x0);
        const RateEstimate rate = estimate_exp_rate(traj, *demo.problem.fstar);
        const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - started)
                                 .count();
        std::cerr << "bench alpha=" << format_double(alpha) << ": wall " << wall_ms << " ms\n";
        csv << format_double(alpha) << ',' << format_double(rate.rate) << ','
            << format_double(rate.r2) << ',' << rate.n_points << "\n";
    }
    ensure_dir(flags.out_dir);
    write_file(out_path(flags, "bench.csv"), csv.str());
    return 0;
}

int cmd_demo_list() {
    for (const DemoInfo& info : demo_catalog())
        std::cout << info.name << " - " << info.description << "\n";
    for (const DemoInfo& info : tv_demo_catalog())
        std::cout << info.name << " - " << info.description << "\n";
    return 0;
}

void add_common(CLI::App* sub, CommonFlags& flags, bool with_flow = true) {
    sub->add_option("--config", flags.config_path, "JSON config file");
    sub->add_option("--demo", flags.demo, "built-in demo name (see demo-list)");
    sub->add_option("--seed", flags.seed, "RNG seed (default 7)");
    sub->add_option("--out", flags.out_dir, "output directory (default .)");
    if (with_flow) {
        sub->add_option("--alpha", flags.flow.alpha, "prox scale of the dynamics");
        sub->add_option("--step", flags.flow.step, "integration step");
        sub->add_option("--t-end", flags.flow.t_end, "integration horizon");
        sub->add_option("--method", flags.flow.method, "integrator: euler or rk4");
        sub->add_option("--record-every", flags.flow.record_every, "record every k-th step");
        sub->add_option("--residual-stop", flags.flow.residual_stop,
                        "stop once the prox residual falls below");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"proximal gradient flow: solve, certify, track, bench"};
    app.require_subcommand(1);

    CommonFlags solve_flags, certify_flags, track_flags, bench_flags;
    bool svg = false, states = false;
    std::vector<std::string> checks;
    std::vector<double> certify_alphas, bench_alphas;
    std::optional<double> mu;
    int cloud_n = 1000;
    double cloud_scale = 1.0;

    CLI::App* solve = app.add_subcommand("solve", "integrate and write trajectory outputs");
    add_common(solve, solve_flags);
    solve->add_flag("--svg", svg, "also write a cost-gap plot");
    solve->add_flag("--states", states, "include state columns in trajectory.csv");

    CLI::App* certify = app.add_subcommand("certify", "run inequality certificates");
    add_common(certify, certify_flags);
    certify->add_option("--checks", checks, "subset of checks to run")->delimiter(',');
    certify->add_option("--mu", mu, "use this mu in condition12 instead of the empirical one");
    certify->add_option("--alphas", certify_alphas, "grid for the alpha-monotonicity check")
        ->delimiter(',');
    certify->add_option("--cloud-size", cloud_n, "sample cloud size (default 1000)");
    certify->add_option("--cloud-scale", cloud_scale, "sample cloud radius scale");

    CLI::App* track = app.add_subcommand("track", "time-varying run with tracking bounds");
    add_common(track, track_flags);

    CLI::App* bench = app.add_subcommand("bench", "fitted decay rate across an alpha grid");
    add_common(bench, bench_flags, /*with_flow=*/false);
    bench->add_option("--alphas", bench_alphas, "alpha grid")->delimiter(',');

    app.add_subcommand("demo-list", "list built-in demos");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    solve_flags.seed_given = solve->count("--seed") > 0;
    certify_flags.seed_given = certify->count("--seed") > 0;
    track_flags.seed_given = track->count("--seed") > 0;
    bench_flags.seed_given = bench->count("--seed") > 0;

    try {
        if (solve->parsed()) return cmd_solve(solve_flags, svg, states);
        if (certify->parsed())
            return cmd_certify(certify_flags, checks, mu, certify_alphas, cloud_n, cloud_scale);
        if (track->parsed()) return cmd_track(track_flags);
        if (bench->parsed()) return cmd_bench(bench_flags, bench_alphas);
        return cmd_demo_list();
    } catch (const DomainError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 1;
    } catch (const UnsupportedOperatorError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return 1;
    } catch (const DivergenceError& err) {
        std::cerr << "numerical error: " << err.what() << " (t=" << err.time() << ")\n";
        return 2;
    } catch (const NumericalError& err) {
        std::cerr << "numerical error: " << err.what() << "\n";
        return 2;
    }
}
