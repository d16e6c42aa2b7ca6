// ratectl command-line tool. Talks to the library only through ratectl.h.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ratectl/ratectl.h"

namespace {

// Exit codes: 0 ok, 2 invalid input, 3 numerical/policy failure, 4 capacity.
struct Failure {
    int code;
    std::string message;
};

[[noreturn]] void fail(int code, std::string message) { throw Failure{code, std::move(message)}; }

void check(rc_status st) {
    if (st != RC_OK) fail(static_cast<int>(st), rc_last_error());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(2, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct OwnedString {
    char* p = nullptr;
    ~OwnedString() { rc_string_free(p); }
    std::string str() const { return p ? std::string(p) : std::string(); }
};

struct ModelHandle {
    rc_model* p = nullptr;
    ~ModelHandle() { rc_model_free(p); }
};

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) fail(2, "cannot write " + out_path);
    out << text;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::istringstream is(item);
        is.imbue(std::locale::classic());
        T v{};
        if (!(is >> v) || !(is >> std::ws).eof()) fail(2, std::string("bad value in ") + flag + ": '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) fail(2, std::string(flag) + " is empty");
    return out;
}

void load_model(ModelHandle& h, const std::string& path, std::optional<double> beta) {
    check(rc_model_from_json(read_file(path).c_str(), &h.p));
    if (beta) check(rc_model_set_beta(h.p, *beta));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Growth-rate control of multi-type branching populations"};
    app.require_subcommand(1);

    std::string model_path, out_path;
    std::optional<double> beta;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--model", model_path, "model JSON")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", out_path, "output file (default: stdout)");
    };

    std::string method = "auto";
    std::size_t resolution = 200;
    auto* optimize = app.add_subcommand("optimize", "optimal mixture and growth factor");
    add_common(optimize);
    optimize->add_option("--beta", beta, "override the model's beta");
    optimize->add_option("--method", method)->check(CLI::IsMember({"auto", "k2", "general"}));
    optimize->add_option("--resolution", resolution, "lattice denominator of the general solver");

    double beta_min = 0.01, beta_max = 0.99;
    std::size_t steps = 99;
    auto* sweep = app.add_subcommand("sweep", "kappa_opt and kappa_uniform across beta");
    add_common(sweep);
    sweep->add_option("--beta-min", beta_min);
    sweep->add_option("--beta-max", beta_max);
    sweep->add_option("--steps", steps);
    sweep->add_option("--resolution", resolution);

    double target = 1.0;
    std::string solver = "optimal";
    auto* threshold = app.add_subcommand("threshold", "smallest beta reaching a growth factor");
    add_common(threshold);
    threshold->add_option("--target", target);
    threshold->add_option("--solver", solver)->check(CLI::IsMember({"optimal", "uniform"}));
    threshold->add_option("--resolution", resolution);

    std::string mode = "det", policy = "optimal", z0_text, offspring_path;
    std::size_t runs = 200, horizon = 100;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    auto* simulate = app.add_subcommand("simulate", "deterministic rollout or Monte Carlo");
    add_common(simulate);
    simulate->add_option("--beta", beta);
    simulate->add_option("--mode", mode)->check(CLI::IsMember({"det", "stoch"}));
    simulate->add_option("--policy", policy)->check(CLI::IsMember({"optimal", "uniform"}));
    simulate->add_option("--runs", runs);
    simulate->add_option("--horizon", horizon);
    simulate->add_option("--seed", seed);
    simulate->add_option("--z0", z0_text, "initial population, e.g. \"500,500\"");
    simulate->add_option("--offspring", offspring_path, "offspring JSON (default poisson)")->check(CLI::ExistingFile);
    simulate->add_option("--threads", threads);
    simulate->add_option("--resolution", resolution);

    std::uint32_t grid_m = 500;
    double gamma = 0.999, epsilon = 1e-6;
    std::string table_path;
    auto* mdp = app.add_subcommand("mdp", "value-iteration estimate of the growth rate");
    add_common(mdp);
    mdp->add_option("--beta", beta);
    mdp->add_option("--grid-m", grid_m);
    mdp->add_option("--gamma", gamma);
    mdp->add_option("--epsilon", epsilon);
    mdp->add_option("--table", table_path, "also write the value table as CSV");

    std::string spec_path;
    double kinetics_beta = 1.0;
    auto* kinetics = app.add_subcommand("kinetics", "reproduction matrix from cell-cycle rates");
    kinetics->add_option("--spec,--model", spec_path, "kinetics JSON")->required()->check(CLI::ExistingFile);
    kinetics->add_option("--out", out_path);
    kinetics->add_option("--beta", kinetics_beta);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*kinetics) {
            OwnedString json;
            int degenerate = 0;
            check(rc_kinetics_json(read_file(spec_path).c_str(), kinetics_beta, &json.p, &degenerate));
            if (degenerate) std::cerr << "warning: matrix is not strictly positive; not a valid model\n";
            emit(json.str(), out_path);
            return 0;
        }

        ModelHandle model;
        load_model(model, model_path, beta);

        if (*optimize) {
            const rc_method m = method == "k2" ? RC_METHOD_K2 : method == "general" ? RC_METHOD_GENERAL : RC_METHOD_AUTO;
            rc_solution* raw = nullptr;
            check(rc_optimize(model.p, m, resolution, &raw));
            std::unique_ptr<rc_solution, void (*)(rc_solution*)> sol(raw, rc_solution_free);
            OwnedString json;
            check(rc_solution_to_json(sol.get(), &json.p));
            emit(json.str(), out_path);
            if (!rc_solution_verified(sol.get())) fail(3, "solution failed verification");
        } else if (*sweep) {
            OwnedString csv;
            check(rc_sweep_csv(model.p, beta_min, beta_max, steps, resolution, &csv.p));
            emit(csv.str(), out_path);
        } else if (*threshold) {
            OwnedString json;
            check(rc_threshold_json(model.p, target, solver == "uniform" ? RC_SOLVER_UNIFORM : RC_SOLVER_OPTIMAL,
                                    resolution, &json.p));
            emit(json.str(), out_path);
        } else if (*simulate) {
            const rc_policy pol = policy == "uniform" ? RC_POLICY_UNIFORM : RC_POLICY_OPTIMAL;
            const std::size_t K = rc_model_dim(model.p);
            OwnedString text;
            if (mode == "det") {
                if (!offspring_path.empty()) fail(2, "--offspring only applies to --mode stoch");
                std::vector<double> w0;
                if (!z0_text.empty()) {
                    w0 = parse_list<double>(z0_text, "--z0");
                    if (w0.size() != K) fail(2, "--z0 length does not match the model");
                }
                check(rc_simulate_det_csv(model.p, pol, horizon, w0.empty() ? nullptr : w0.data(), resolution, &text.p));
            } else {
                std::vector<std::int64_t> z0 =
                    z0_text.empty() ? std::vector<std::int64_t>(K, 1000) : parse_list<std::int64_t>(z0_text, "--z0");
                if (z0.size() != K) fail(2, "--z0 length does not match the model");
                const std::string offspring = offspring_path.empty() ? std::string() : read_file(offspring_path);
                check(rc_simulate_stoch_json(model.p, offspring_path.empty() ? nullptr : offspring.c_str(), pol, runs,
                                             horizon, seed, z0.data(), K, threads, resolution, &text.p));
            }
            emit(text.str(), out_path);
        } else if (*mdp) {
            OwnedString json, table;
            check(rc_mdp_json(model.p, grid_m, gamma, epsilon, &json.p, table_path.empty() ? nullptr : &table.p));
            if (!table_path.empty()) emit(table.str(), table_path);
            emit(json.str(), out_path);
        }
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << '\n';
        return f.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
