#include <lds_lab/lds_lab.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

namespace {

struct Common {
    std::string config;
    std::string out = "out";
    unsigned threads = lds::default_thread_count();
    std::string formats;
};

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& s) {
    std::vector<T> out;
    for (const auto& item : split(s)) {
        std::istringstream in(item);
        T v;
        if (!(in >> v) || !in.eof()) throw lds::ValidationError("bad list entry \"" + item + "\"");
        out.push_back(v);
    }
    return out;
}

std::optional<std::uint64_t> env_seed() {
    const char* s = std::getenv("LDS_LAB_SEED");
    if (!s || !*s) return std::nullopt;
    char* end = nullptr;
    const auto v = std::strtoull(s, &end, 10);
    if (*end != '\0') throw lds::ValidationError("LDS_LAB_SEED must be an unsigned integer");
    return v;
}

lds::ExperimentConfig load(const Common& c, const std::string& expected) {
    if (c.config.empty()) throw lds::ValidationError(expected + " needs --config");
    auto cfg = lds::load_config(c.config, env_seed());
    if (cfg.experiment != expected)
        throw lds::ValidationError("config is for \"" + cfg.experiment + "\", not \"" + expected + "\"");
    if (!c.formats.empty()) cfg.formats = split(c.formats);
    if (c.threads == 0) throw lds::ValidationError("--threads must be >= 1");
    return cfg;
}

void report(const std::vector<std::filesystem::path>& files) {
    for (const auto& f : files) std::cout << f.string() << '\n';
}

int run_sweep(const Common& c, const std::string& name) {
    const auto cfg = load(c, name);
    const auto result = name == "jordan-sweep" ? lds::run_jordan_sweep(cfg, c.threads) : lds::run_filter_sweep(cfg, c.threads);
    report(lds::emit_outputs(result, c.out, cfg.formats, name));
    return 0;
}

int run_lemmas(const Common& c, const std::string& ns, const std::string& hs, const std::string& rhos,
               std::optional<double> tol) {
    lds::ExperimentConfig cfg;
    if (!c.config.empty()) cfg = load(c, "verify-lemmas");
    if (!ns.empty()) cfg.lemma_n = parse_list<long>(ns);
    if (!hs.empty()) cfg.lemma_h = parse_list<long>(hs);
    if (!rhos.empty()) cfg.lemma_rho = parse_list<double>(rhos);
    if (tol) cfg.tol = *tol;
    const auto checks = lds::run_verify_lemmas(cfg.lemma_n, cfg.lemma_h, cfg.lemma_rho, cfg.tol);
    lds::json cases = lds::json::array();
    bool all = true;
    for (const auto& chk : checks) {
        cases.push_back(lds::lemma_check_to_json(chk));
        all = all && chk.passed;
    }
    const lds::json doc = {{"tol", cfg.tol}, {"passed", all}, {"cases", cases}};
    std::cout << doc.dump(2) << '\n';
    if (!c.config.empty()) {
        std::filesystem::create_directories(c.out);
        std::ofstream(std::filesystem::path(c.out) / "verify-lemmas.json") << doc.dump(2) << '\n';
    }
    return all ? 0 : 2;
}

lds::StateSpaceModel model_file(const std::string& path) {
    const std::filesystem::path p(path);
    if (!std::filesystem::exists(p)) throw lds::IoError("model file not found: " + path);
    return lds::detail::resolve_model(lds::json(p.filename().string()), p.parent_path()).model;
}

int run_dare(const Common& c, std::optional<double> q, std::optional<double> r) {
    lds::StateSpaceModel model = [&] {
        if (!c.config.empty()) return load(c, "dare").model->model;
        return lds::make_random_walk(q.value_or(1.0), r.value_or(1.0), q.value_or(1.0));
    }();
    std::cout << lds::dare_report(model).dump(2) << '\n';
    return 0;
}

int run_kl(const Common& c, const std::string& p, const std::string& q, long horizon) {
    lds::ExperimentConfig cfg;
    if (!c.config.empty()) {
        cfg = load(c, "kl");
    } else {
        if (p.empty() || q.empty() || horizon < 1) throw lds::ValidationError("kl needs --config or --p, --q and --T");
        cfg.model = lds::ModelSpec{model_file(p), std::nullopt};
        cfg.model_q = lds::ModelSpec{model_file(q), std::nullopt};
        cfg.horizon = horizon;
    }
    if (horizon >= 1) cfg.horizon = horizon;
    const auto doc = lds::kl_report(cfg);
    std::cout << doc.dump(2) << '\n';
    if (!c.config.empty()) {
        std::filesystem::create_directories(c.out);
        std::ofstream(std::filesystem::path(c.out) / "kl.json") << doc.dump(2) << '\n';
    }
    return 0;
}

int run_simulate(const Common& c) {
    const auto cfg = load(c, "simulate");
    const auto sim = lds::run_simulate(cfg, c.threads);
    std::error_code ec;
    std::filesystem::create_directories(c.out, ec);
    if (ec) throw lds::IoError("cannot create " + c.out + ": " + ec.message());
    const auto dir = std::filesystem::path(c.out);
    lds::write_trajectory_csv(sim.states, (dir / "states.csv").string());
    lds::write_trajectory_csv(sim.observations, (dir / "observations.csv").string());
    std::cout << (dir / "states.csv").string() << '\n' << (dir / "observations.csv").string() << '\n';
    return 0;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "experiment config (JSON)");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--threads", c.threads, "worker threads");
    sub->add_option("--formats", c.formats, "comma list of csv,json,svg");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk and filter-length experiments for linear dynamical systems"};
    app.set_version_flag("--version", std::string(lds::kVersion));
    app.require_subcommand(1);

    Common common;
    auto* jordan = app.add_subcommand("jordan-sweep", "Jordan-system least-squares sweep over (k, T)");
    add_common(jordan, common);
    auto* filter = app.add_subcommand("filter-sweep", "Truncated-filter excess risk sweep over (h, T)");
    add_common(filter, common);

    auto* lemmas = app.add_subcommand("verify-lemmas", "Check the Toeplitz closed forms against dense algebra");
    add_common(lemmas, common);
    lemmas->set_help_flag("--help", "Print this help message and exit");
    std::string ns, hs, rhos;
    std::optional<double> tol;
    lemmas->add_option("--n", ns, "comma list of N");
    lemmas->add_option("--h", hs, "comma list of h");
    lemmas->add_option("--rho", rhos, "comma list of rho");
    lemmas->add_option("--tol", tol, "relative tolerance");

    auto* dare = app.add_subcommand("dare", "Steady-state Kalman filter as JSON");
    add_common(dare, common);
    std::optional<double> q, r;
    dare->add_option("--q", q, "random-walk process variance");
    dare->add_option("--r", r, "random-walk observation variance");

    auto* kl = app.add_subcommand("kl", "KL divergence between two models over T steps");
    add_common(kl, common);
    std::string p_file, q_file;
    long horizon = 0;
    kl->add_option("--p", p_file, "model file for P");
    kl->add_option("--q", q_file, "model file for Q");
    kl->add_option("--T", horizon, "horizon");

    auto* sim = app.add_subcommand("simulate", "Write sampled trajectories as CSV");
    add_common(sim, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (jordan->parsed()) return run_sweep(common, "jordan-sweep");
        if (filter->parsed()) return run_sweep(common, "filter-sweep");
        if (lemmas->parsed()) return run_lemmas(common, ns, hs, rhos, tol);
        if (dare->parsed()) return run_dare(common, q, r);
        if (kl->parsed()) return run_kl(common, p_file, q_file, horizon);
        if (sim->parsed()) return run_simulate(common);
    } catch (const lds::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const lds::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const lds::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
