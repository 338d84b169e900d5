// ks: command-line driver for simulations, continuation, orbits and tables.

#include "ks/analysis.hpp"
#include "ks/continuation.hpp"
#include "ks/errors.hpp"
#include "ks/integrate.hpp"
#include "ks/io.hpp"
#include "ks/orbits.hpp"
#include "ks/system.hpp"
#include "ks/tables.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace ks;

namespace {

struct Key {
    std::string name;
    std::string fallback; ///< empty: no default
    std::string help;
};

struct Command {
    std::string name;
    std::string help;
    std::vector<Key> keys;
    std::function<void(const RunConfig&)> run;
};

const Key model_key{"model", "", "hol:3|hol:4|hol:5|cd:2|cd:4|cd:6|gal:m|nlgal:m"};
const Key geometry_key{"geometry", "", "full:N | odd:m | nodal:m (omit for Galerkin models)"};
const Key out_key{"out", "ks_out", "output directory"};
const Key seed_key{"seed", "0", "seed for random initial conditions"};

fs::path out_dir(const RunConfig& cfg)
{
    const fs::path dir = cfg.text("out");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

void write_run_manifest(const RunConfig& cfg, const fs::path& dir, const std::vector<std::string>& outputs)
{
    KeyValues kv = cfg.manifest();
    kv.emplace_back("version", library_version);
#ifdef __VERSION__
    kv.emplace_back("compiler", __VERSION__);
#endif
    std::string list;
    for (const auto& o : outputs) list += (list.empty() ? "" : ",") + o;
    kv.emplace_back("outputs", list);
    save_manifest((dir / "manifest.txt").string(), kv);
}

std::string initial_condition(const RunConfig& cfg)
{
    const std::string& ic = cfg.text("ic");
    if (ic == "random") return "random(" + cfg.text("seed") + ")";
    return ic;
}

// --- commands ---------------------------------------------------------------

void run_sim(const RunConfig& cfg)
{
    const System sys = system_from_config(cfg, cfg.number("alpha"));
    const Vector x0 = builtin_ic(initial_condition(cfg), sys);
    const std::string& scheme = cfg.text("scheme");
    const double dt = cfg.number("dt");
    const double t_end = cfg.number("t-end");
    const int every = static_cast<int>(cfg.integer("record-every"));
    Trajectory traj;
    if (scheme == "rk4") traj = integrate(sys, x0, dt, t_end, every);
    else if (scheme == "lawson") traj = integrate_stiff(sys, x0, dt, t_end, every);
    else fail(ErrorKind::usage, "scheme must be rk4 or lawson, got '" + scheme + "'");
    const fs::path dir = out_dir(cfg);
    save_csv((dir / "trajectory.csv").string(), trajectory_csv(traj));
    write_run_manifest(cfg, dir, {"trajectory.csv"});
    std::printf("%zu snapshots to %s\n", traj.size(), (dir / "trajectory.csv").string().c_str());
}

void run_steady(const RunConfig& cfg)
{
    const double alpha = cfg.number("alpha");
    const System sys = system_from_config(cfg, alpha);
    const std::string& label = cfg.text("branch");
    SteadyState st;
    if (label == "trivial") st = newton_solve(sys, Vector(sys.dim(), 0.0));
    else st = branch_state(sys, label, alpha);
    Branch b;
    b.label = label;
    b.points.push_back(st);
    b.signed_norms.push_back(signed_norm(sys, st.x));
    CsvTable eig;
    eig.header = {"re_lambda", "im_lambda"};
    for (const auto& l : st.eigenvalues) eig.rows.push_back({format_double(l.real()), format_double(l.imag())});
    const fs::path dir = out_dir(cfg);
    save_csv((dir / "steady.csv").string(), branch_csv(b));
    save_csv((dir / "eigenvalues.csv").string(), eig);
    write_run_manifest(cfg, dir, {"steady.csv", "eigenvalues.csv"});
    std::printf("%s at alpha=%s: signed norm %s, %d unstable\n", label.c_str(), format_double(alpha).c_str(),
                format_double(b.signed_norms[0]).c_str(), st.n_unstable);
}

void run_cont(const RunConfig& cfg)
{
    const System sys = system_from_config(cfg);
    const auto [lo, hi] = cfg.range("alpha-range");
    if (!(hi > lo)) fail(ErrorKind::usage, "alpha-range must have lo < hi");
    ContinuationOptions opt;
    opt.alpha_min = lo;
    opt.alpha_max = hi;
    const std::string& seed = cfg.text("seed-branch");
    std::vector<Branch> branches;
    std::vector<BifurcationPoint> events;
    if (seed == "trivial") {
        const SteadyState s0 = newton_solve(sys, lo, Vector(sys.dim(), 0.0));
        auto [b, ev] = continue_branch(sys, s0, "trivial", opt);
        branches.push_back(std::move(b));
        events = std::move(ev);
    } else {
        Survey s = survey(sys, opt);
        if (seed == "all") {
            branches = std::move(s.branches);
            events = std::move(s.events);
        } else {
            const Branch* b = s.find(seed);
            if (!b) fail(ErrorKind::usage, "seed-branch '" + seed + "' not found; use trivial, all or a label such as bimodal+");
            branches.push_back(*b);
            events = s.events_on(seed);
        }
    }
    const fs::path dir = out_dir(cfg);
    std::vector<std::string> outputs;
    for (const auto& b : branches) {
        const std::string name = "branch_" + b.label + ".csv";
        save_csv((dir / name).string(), branch_csv(b));
        outputs.push_back(name);
    }
    save_csv((dir / "bifurcations.csv").string(), bifurcation_csv(events));
    outputs.emplace_back("bifurcations.csv");
    write_run_manifest(cfg, dir, outputs);
    for (const auto& e : events)
        std::printf("%-16s %-16s %.6f\n", e.branch_label.c_str(), bifurcation_kind_name(e.kind), e.alpha);
}

// "HB<k>" picks the k-th Hopf point by alpha.
std::size_t hopf_index(const std::string& name)
{
    if (name.size() < 3 || name.compare(0, 2, "HB") != 0) fail(ErrorKind::usage, "from-hopf must be HB1, HB2, ...");
    long k = 0;
    try {
        k = parse_integer(name.substr(2));
    } catch (const Error&) {
        fail(ErrorKind::usage, "from-hopf must be HB1, HB2, ...");
    }
    if (k < 1) fail(ErrorKind::usage, "from-hopf must be HB1, HB2, ...");
    return static_cast<std::size_t>(k - 1);
}

void run_orbit(const RunConfig& cfg)
{
    const System sys = system_from_config(cfg);
    const auto [lo, hi] = cfg.range("alpha-range");
    const std::size_t k = hopf_index(cfg.text("from-hopf"));
    ContinuationOptions so;
    so.alpha_max = hi;
    const Survey s = survey(sys, so);
    std::vector<BifurcationPoint> hopfs;
    for (const auto& e : s.events)
        if (e.kind == BifurcationKind::hopf) hopfs.push_back(e);
    std::sort(hopfs.begin(), hopfs.end(), [](const auto& a, const auto& b) { return a.alpha < b.alpha; });
    if (k >= hopfs.size()) fail(ErrorKind::orbit_not_found, cfg.text("from-hopf") + " not found below alpha = " + format_double(hi));
    const BifurcationPoint& hb = hopfs[k];
    if (hb.alpha < lo) fail(ErrorKind::usage, cfg.text("from-hopf") + " lies at " + format_double(hb.alpha) + ", below alpha-range");
    OrbitContinuationOptions oc;
    oc.step = cfg.number("step");
    oc.follow_stable = cfg.integer("follow-stable") != 0;
    oc.allow_partial = true;
    const PeriodicOrbit first = orbit_from_hopf(sys, hb);
    auto [branch, events] = continue_orbits(sys, first, hi, oc, cfg.text("from-hopf"));
    events.insert(events.begin(), hb);
    const fs::path dir = out_dir(cfg);
    save_csv((dir / "orbits.csv").string(), orbit_csv(branch));
    save_csv((dir / "bifurcations.csv").string(), bifurcation_csv(events));
    write_run_manifest(cfg, dir, {"orbits.csv", "bifurcations.csv"});
    for (const auto& e : events) std::printf("%-16s %.6f\n", bifurcation_kind_name(e.kind), e.alpha);
    if (!branch.complete)
        std::printf("orbit continuation stopped early at alpha = %s\n", format_double(branch.orbits.back().alpha).c_str());
}

void run_dtmax(const RunConfig& cfg)
{
    const double alpha = cfg.number("alpha");
    const System sys = system_from_config(cfg);
    const SteadyState st = branch_state(sys, cfg.text("branch"), alpha);
    const double dt = max_stable_dt(sys.at_alpha(alpha), st.x, cfg.number("horizon"), cfg.number("bound"));
    CsvTable t;
    t.header = {"model", "geometry", "alpha", "branch", "dt_max"};
    t.rows.push_back({sys.spec().selector(), sys.geometry().label(), format_double(alpha), cfg.text("branch"), format_double(dt)});
    const fs::path dir = out_dir(cfg);
    save_csv((dir / "dtmax.csv").string(), t);
    write_run_manifest(cfg, dir, {"dtmax.csv"});
    std::printf("%s\n", format_double(dt).c_str());
}

void run_spectrum(const RunConfig& cfg)
{
    const fs::path traj_path = cfg.text("traj");
    std::string geometry = cfg.has("geometry") ? cfg.text("geometry") : "";
    if (geometry.empty()) {
        const fs::path sibling = traj_path.parent_path() / "manifest.txt";
        if (!fs::exists(sibling)) fail(ErrorKind::usage, "missing key: geometry (no manifest.txt beside the trajectory)");
        for (const auto& [k, v] : load_manifest(sibling.string()))
            if (k == "geometry") geometry = v;
        if (geometry.empty()) fail(ErrorKind::incompatible_domain, "trajectory manifest has no geometry (Galerkin run?)");
    }
    const Trajectory traj = trajectory_from_csv(load_csv(traj_path.string()), Geometry::parse(geometry));
    const SpectrumResult s = time_averaged_spectrum(traj, cfg.number("skip"));
    const fs::path dir = out_dir(cfg);
    save_csv((dir / "spectrum.csv").string(), spectrum_csv(s));
    write_run_manifest(cfg, dir, {"spectrum.csv"});
    std::printf("%d snapshots averaged\n", s.samples_used);
}

void run_consistency(const RunConfig& cfg)
{
    const ModelSpec spec = ModelSpec::parse(cfg.text("model"), cfg.number("alpha"));
    const ConsistencyReport r = consistency_order(spec, cfg.integer_list("grids"));
    const fs::path dir = out_dir(cfg);
    save_csv((dir / "consistency.csv").string(), consistency_csv(r));
    write_run_manifest(cfg, dir, {"consistency.csv"});
    std::printf("%s fitted order %.4f\n", spec.selector().c_str(), r.fitted_order);
}

std::string optional_text(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

bool model_selected(const RunConfig& cfg, const std::string& model, const std::string& geometry)
{
    const std::string& sel = cfg.text("models");
    if (sel == "all") return true;
    std::istringstream in(sel);
    std::string item;
    while (std::getline(in, item, ','))
        if (item == model || item == model + "@" + geometry) return true;
    return false;
}

void run_tables(const RunConfig& cfg)
{
    const std::string& target = cfg.text("target");
    const fs::path dir = out_dir(cfg);
    CsvTable t;
    if (target == "table1") {
        t.header = {"model", "geometry"};
        for (const char* c : table1_columns()) t.header.emplace_back(c);
        const std::vector<std::pair<std::string, std::string>> rows{
            {"cd:6", "odd:24"}, {"hol:3", "odd:8"},  {"hol:4", "odd:8"},  {"hol:5", "odd:8"},  {"cd:2", "odd:8"},
            {"cd:4", "odd:8"},  {"cd:6", "odd:8"},   {"hol:3", "odd:12"}, {"hol:4", "odd:12"}, {"hol:5", "odd:12"},
            {"cd:2", "odd:12"}, {"cd:4", "odd:12"}, {"cd:6", "odd:12"}};
        for (const auto& [m, g] : rows) {
            if (!model_selected(cfg, m, g)) continue;
            const Table1Row r = table1_row(System(ModelSpec::parse(m), Geometry::parse(g)));
            std::vector<std::string> row{m, g};
            for (const auto& v : r.values) row.push_back(optional_text(v));
            t.rows.push_back(std::move(row));
        }
    } else if (target == "table3") {
        t.header = {"model", "geometry", "alpha", "dt_max"};
        for (const auto& p : published_table3()) {
            if (!model_selected(cfg, p.model, p.geometry)) continue;
            const System sys(ModelSpec::parse(p.model), Geometry::parse(p.geometry));
            for (double alpha : {10.0, 20.0, 30.0}) {
                std::string value;
                try {
                    value = format_double(table3_entry(sys, alpha).dt);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::search_invalid) throw;
                }
                t.rows.push_back({p.model, p.geometry, format_double(alpha), value});
            }
        }
    } else if (target == "table4") {
        t.header = {"model", "geometry", "HB1", "PD"};
        for (const auto& p : published_table4()) {
            if (!model_selected(cfg, p.model, p.geometry)) continue;
            const Table4Row r = table4_row(System(ModelSpec::parse(p.model), Geometry::parse(p.geometry)));
            t.rows.push_back({p.model, p.geometry, optional_text(r.hopf), optional_text(r.period_doubling)});
        }
    } else {
        fail(ErrorKind::usage, "target must be table1, table3 or table4, got '" + target + "'");
    }
    const std::string name = target + ".csv";
    save_csv((dir / name).string(), t);
    write_run_manifest(cfg, dir, {name});
    write_csv(std::cout, t);
}

std::vector<Command> commands()
{
    return {
        {"sim", "integrate a model in time",
         {model_key, geometry_key, {"alpha", "20", "KS parameter"}, {"dt", "1e-4", "time step"}, {"t-end", "1", "final time"},
          {"ic", "halfwave", "zero | halfwave | sine(k) | random | random(seed,amp)"},
          {"record-every", "10", "keep every n-th step"}, {"scheme", "rk4", "rk4 | lawson"}, seed_key, out_key},
         run_sim},
        {"steady", "solve for one steady state and its spectrum",
         {model_key, geometry_key, {"alpha", "10", "KS parameter"}, {"branch", "trivial", "trivial or a branch label (unimodal-, bimodal+, ...)"}, out_key},
         run_steady},
        {"cont", "continue steady branches and detect bifurcations",
         {model_key, geometry_key, {"alpha-range", "0:70", "lo:hi"}, {"seed-branch", "trivial", "trivial | all | branch label"}, out_key},
         run_cont},
        {"orbit", "continue periodic orbits born at a Hopf point",
         {model_key, geometry_key, {"from-hopf", "HB1", "HB1, HB2, ... ordered by alpha"}, {"alpha-range", "30:37", "lo:hi"},
          {"step", "0.25", "alpha step"}, {"follow-stable", "1", "switch to the attracting cycle after a +1 crossing"}, out_key},
         run_orbit},
        {"dtmax", "largest stable RK4 step on a steady state",
         {model_key, geometry_key, {"alpha", "10", "KS parameter"}, {"branch", "unimodal-", "branch label"},
          {"horizon", "1", "test horizon"}, {"bound", "10", "growth bound factor"}, out_key},
         run_dtmax},
        {"spectrum", "time-averaged power spectrum of a trajectory",
         {{"traj", "", "trajectory CSV"}, {"skip", "10", "transient to discard"}, {"geometry", "", "geometry of the trajectory (default: from its manifest)"}, out_key},
         run_spectrum},
        {"consistency", "fitted consistency order of a grid model",
         {model_key, {"alpha", "7", "KS parameter"}, {"grids", "32,64,128,256", "ascending grid sizes"}, out_key},
         run_consistency},
        {"tables", "regenerate a bifurcation or time-step table",
         {{"target", "", "table1 | table3 | table4"}, {"models", "all", "all or a list such as hol:5,cd:6@odd:24"}, out_key},
         run_tables},
    };
}

// Defaults, then the config file, then explicit flags. Unknown config keys are rejected.
RunConfig resolve(const Command& cmd, const std::map<std::string, std::string>& flags,
                  const std::map<std::string, std::size_t>& counts, const std::string& config_path)
{
    RunConfig cfg(cmd.name, {});
    for (const auto& k : cmd.keys)
        if (!k.fallback.empty()) cfg.set(k.name, k.fallback);
    if (!config_path.empty()) {
        std::vector<std::string> unknown;
        for (const auto& [k, v] : load_manifest(config_path)) {
            if (k == "command") {
                if (v != cmd.name) fail(ErrorKind::usage, "conflicting keys: command (config is for '" + v + "')");
                continue;
            }
            if (k == "version" || k == "compiler" || k == "outputs") continue;
            const bool known = std::any_of(cmd.keys.begin(), cmd.keys.end(), [&, &k = k](const Key& key) { return key.name == k; });
            if (!known) unknown.push_back(k);
            else cfg.set(k, v);
        }
        if (!unknown.empty()) {
            std::string list;
            for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
            fail(ErrorKind::usage, "unknown keys for " + cmd.name + ": " + list);
        }
    }
    for (const auto& [k, v] : flags)
        if (counts.at(k) > 0) cfg.set(k, v);
    std::vector<std::string> missing;
    for (const auto& k : cmd.keys)
        if (k.name != "geometry" && !cfg.has(k.name)) missing.push_back(k.name);
    if (!missing.empty()) {
        std::string list;
        for (const auto& k : missing) list += (list.empty() ? "" : ", ") + k;
        fail(ErrorKind::usage, "missing keys: " + list);
    }
    return cfg;
}

int report(const Error& e)
{
    std::fprintf(stderr, "error_kind=%s\nerror: %s\n", e.kind_name(), e.what());
    return e.kind() == ErrorKind::usage ? 2 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Kuramoto-Sivashinsky discretisations: simulation, continuation, orbits, tables"};
    app.require_subcommand(1);
    app.set_version_flag("--version", library_version);
    const auto cmds = commands();
    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::string> configs;
    std::map<std::string, CLI::App*> subs;
    std::map<std::string, std::map<std::string, CLI::Option*>> options;
    for (const auto& cmd : cmds) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
        subs[cmd.name] = sub;
        sub->add_option("--config", configs[cmd.name], "key=value file with the same key names; flags override it");
        for (const auto& k : cmd.keys) {
            std::string help = k.help;
            if (!k.fallback.empty()) help += " [" + k.fallback + "]";
            options[cmd.name][k.name] = sub->add_option("--" + k.name, values[cmd.name][k.name], help);
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::fprintf(stderr, "error_kind=usage\nerror: %s\n", e.what());
        return 2;
    }
    for (const auto& cmd : cmds) {
        if (!subs[cmd.name]->parsed()) continue;
        try {
            std::map<std::string, std::size_t> counts;
            for (const auto& [k, opt] : options[cmd.name]) counts[k] = opt->count();
            const RunConfig cfg = resolve(cmd, values[cmd.name], counts, configs[cmd.name]);
            cmd.run(cfg);
            return 0;
        } catch (const Error& e) {
            return report(e);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error_kind=io\nerror: %s\n", e.what());
            return 1;
        }
    }
    return 2;
}
