// shm: command-line front end for Shoenfield register machines.
//
// Subcommands: run (deterministic execution), tree (non-deterministic
// exploration), prob (exact acceptance probability), estimate (Monte Carlo),
// decide (bounded-error decision), gen (random programs), check (format
// validation). Structured output is a single JSON document per invocation
// and is byte-identical across repeated identical invocations; timing is
// therefore reported only in text mode (or on stderr).

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shoenfield/shoenfield.hpp"

namespace {

using nlohmann::ordered_json;
using namespace shoenfield;

// Exit codes, stable by contract. CLI11's own usage errors use codes >= 100
// and cannot collide.
namespace exit_code {
constexpr int kAccept = 0;
constexpr int kReject = 1;
constexpr int kParse = 2;
constexpr int kNotDeterministic = 3;
constexpr int kFuelExhausted = 4;
constexpr int kWeight = 5;
constexpr int kBudget = 6;
constexpr int kRange = 7;
constexpr int kUndetermined = 8;
constexpr int kInvalidParams = 9;
constexpr int kInternal = 70;
}  // namespace exit_code

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError(ParseError::Kind::Syntax, 0, 0, "cannot open program file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Rational parse_rational_arg(const std::string& text) {
    std::size_t slash = text.find('/');
    try {
        if (slash == std::string::npos)
            return Rational(Integer(text));
        return make_rational(Integer(text.substr(0, slash)), Integer(text.substr(slash + 1)));
    } catch (const std::invalid_argument&) {
        throw CLI::ValidationError("expected a rational like 2/3 or 1, got '" + text + "'");
    }
}

const CLI::Validator kRationalArg(
    [](std::string& text) {
        parse_rational_arg(text);
        return std::string();
    },
    "RATIONAL");

const CLI::Validator kRegAssignment(
    [](std::string& text) {
        std::size_t eq = text.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
            return std::string("expected REGISTER=VALUE, got '" + text + "'");
        try {
            (void)std::stoull(text.substr(0, eq));
            (void)std::stoull(text.substr(eq + 1));
        } catch (const std::exception&) {
            return std::string("expected REGISTER=VALUE with natural numbers, got '" + text + "'");
        }
        return std::string();
    },
    "REG=VAL");

RegisterMap parse_reg_args(const std::vector<std::string>& assignments) {
    RegisterMap inputs;
    for (const std::string& text : assignments) {
        std::size_t eq = text.find('=');
        std::uint64_t reg = std::stoull(text.substr(0, eq));
        std::uint64_t value = std::stoull(text.substr(eq + 1));
        if (value > 0)
            inputs[reg] = value;
        else
            inputs.erase(reg);
    }
    return inputs;
}

// Shared flags. Not every subcommand reads every field.
struct CommonOpts {
    std::string program_path;
    std::vector<std::string> reg_args;
    std::uint64_t fuel = 10000;
    std::uint64_t accept_reg = 0;
    std::uint64_t seed = 0;
    std::size_t node_cap = kDefaultNodeCap;
    std::string format = "text";

    RegisterMap inputs() const { return parse_reg_args(reg_args); }
    AcceptancePolicy policy() const { return AcceptancePolicy{accept_reg}; }
};

void add_program_arg(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("program", opts.program_path, "program file (.shm)")->required();
    cmd->add_option("--reg", opts.reg_args, "input register, REGISTER=VALUE (repeatable)")->check(kRegAssignment);
}

void add_format_flag(CLI::App* cmd, CommonOpts& opts, const std::string& choices = "text,structured") {
    cmd->add_option("--format", opts.format, "output format")
        ->check(CLI::IsMember(CLI::detail::split(choices, ',')))
        ->capture_default_str();
}

double approx(const Rational& q) { return q.get_d(); }

ordered_json json_probability(const Rational& q) {
    return ordered_json{{"fraction", fraction_string(q)}, {"decimal", approx(q)}};
}

ordered_json json_registers(const RegisterMap& registers) {
    ordered_json object = ordered_json::object();
    for (const auto& [reg, value] : registers)
        object[std::to_string(reg)] = value;
    return object;
}

ordered_json json_interval(const ProbabilityInterval& interval) {
    return ordered_json{{"accept", json_probability(interval.accept_mass)},
                        {"reject", json_probability(interval.reject_mass)},
                        {"unresolved", json_probability(interval.unresolved_mass)}};
}

ordered_json json_estimate(const EstimateReport& report) {
    return ordered_json{{"estimate", json_probability(report.estimate)}, {"sample_count", report.sample_count},
                        {"accepts", report.accepts},                     {"rejects", report.rejects},
                        {"unresolved", report.unresolved},               {"epsilon", json_probability(report.epsilon)},
                        {"seed", report.seed}};
}

void emit_structured(const std::string& command, ordered_json parameters, ordered_json result) {
    ordered_json envelope{
        {"schema_version", "1"}, {"command", command}, {"parameters", std::move(parameters)}, {"result", std::move(result)}};
    std::cout << envelope.dump(2) << "\n";
}

std::string probability_line(const char* label, const Rational& q) {
    std::ostringstream out;
    out << label << ": " << fraction_string(q) << " (~" << approx(q) << ")";
    return out.str();
}

class Stopwatch {
public:
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Timing goes to stdout in text mode and to stderr otherwise, keeping
// structured stdout reproducible.
void emit_timing(const CommonOpts& opts, const Stopwatch& watch) {
    if (opts.format == "text")
        std::cout << "time_ms: " << watch.elapsed_ms() << "\n";
    else
        std::cerr << "time_ms: " << watch.elapsed_ms() << "\n";
}

int cmd_run(const CommonOpts& opts, bool trace) {
    Stopwatch watch;
    SourceProgram source = parse_program(read_file(opts.program_path));
    if (!is_deterministic(source.parsed))
        throw NotDeterministicError();
    RegisterMap inputs = opts.inputs();

    std::vector<Configuration> chain;
    chain.push_back(make_configuration(inputs));
    std::uint64_t steps = 0;
    while (!is_halted(source.parsed, chain.back()) && steps < opts.fuel) {
        chain.push_back(step(source.parsed, chain.back(), 0).config);
        ++steps;
    }
    const Configuration& last = chain.back();
    bool halted = is_halted(source.parsed, last);
    const char* status = halted ? "halted" : "fuel-exhausted";

    if (opts.format == "text") {
        if (trace)
            for (std::size_t i = 0; i < chain.size(); ++i)
                std::cout << "step " << i << ": counter=" << chain[i].counter << " " << register_summary(chain[i])
                          << "\n";
        std::cout << "status: " << status << "\n";
        std::cout << "steps: " << steps << "\n";
        std::cout << "counter: " << last.counter << "\n";
        std::cout << "registers: " << register_summary(last) << "\n";
    } else {
        ordered_json result{
            {"status", status}, {"steps", steps}, {"counter", last.counter}, {"registers", json_registers(last.registers)}};
        if (trace) {
            ordered_json steps_json = ordered_json::array();
            for (std::size_t i = 0; i < chain.size(); ++i)
                steps_json.push_back(ordered_json{
                    {"step", i}, {"counter", chain[i].counter}, {"registers", json_registers(chain[i].registers)}});
            result["trace"] = std::move(steps_json);
        }
        emit_structured("run",
                        ordered_json{{"program", opts.program_path},
                                     {"fuel", opts.fuel},
                                     {"registers", json_registers(inputs)},
                                     {"trace", trace}},
                        std::move(result));
    }
    emit_timing(opts, watch);
    return halted ? exit_code::kAccept : exit_code::kFuelExhausted;
}

int cmd_tree(const CommonOpts& opts, std::uint64_t depth, std::size_t node_budget) {
    Stopwatch watch;
    SourceProgram source = parse_program(read_file(opts.program_path));
    RegisterMap inputs = opts.inputs();
    ComputationTree tree = build_tree(source.parsed, inputs, depth, node_budget);

    if (opts.format == "graph") {
        std::cout << to_dot(tree);
    } else if (opts.format == "text") {
        std::size_t edges = 0;
        for (const TreeNode& node : tree.nodes)
            edges += node.children.size();
        std::cout << "nodes: " << tree.node_count() << "\n";
        std::cout << "edges: " << edges << "\n";
        std::cout << "truncated: " << (tree.truncated ? "true" : "false") << "\n";
        for (NodeId id = 0; id < tree.node_count(); ++id) {
            const TreeNode& node = tree.nodes[id];
            std::cout << "n" << id << ": depth=" << node.depth << " counter=" << node.config.counter << " "
                      << register_summary(node.config) << " " << to_string(node.status);
            if (node.parent != kNoNode)
                std::cout << " (from n" << node.parent << " via choice " << node.choice_from_parent << ")";
            std::cout << "\n";
        }
    } else {
        ordered_json nodes = ordered_json::array();
        ordered_json edges = ordered_json::array();
        for (NodeId id = 0; id < tree.node_count(); ++id) {
            const TreeNode& node = tree.nodes[id];
            nodes.push_back(ordered_json{{"id", id},
                                         {"depth", node.depth},
                                         {"counter", node.config.counter},
                                         {"registers", json_registers(node.config.registers)},
                                         {"status", to_string(node.status)}});
            for (const TreeEdge& edge : node.children)
                edges.push_back(ordered_json{{"parent", id}, {"child", edge.child}, {"choice", edge.choice}});
        }
        emit_structured("tree",
                        ordered_json{{"program", opts.program_path},
                                     {"depth", depth},
                                     {"node_budget", node_budget},
                                     {"registers", json_registers(inputs)}},
                        ordered_json{{"truncated", tree.truncated}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}});
    }
    emit_timing(opts, watch);
    return 0;
}

int cmd_prob(const CommonOpts& opts, const std::string& engine) {
    Stopwatch watch;
    SourceProgram source = parse_program(read_file(opts.program_path));
    RegisterMap inputs = opts.inputs();
    ProbabilityInterval interval =
        engine == "naive" ? exact_acceptance(source.parsed, inputs, opts.fuel, opts.policy(), opts.node_cap)
                          : exact_acceptance_memoized(source.parsed, inputs, opts.fuel, opts.policy(), opts.node_cap);

    if (opts.format == "text") {
        std::cout << "engine: " << engine << "\n";
        std::cout << probability_line("accept", interval.accept_mass) << "\n";
        std::cout << probability_line("reject", interval.reject_mass) << "\n";
        std::cout << probability_line("unresolved", interval.unresolved_mass) << "\n";
    } else {
        emit_structured("prob",
                        ordered_json{{"program", opts.program_path},
                                     {"fuel", opts.fuel},
                                     {"engine", engine},
                                     {"node_cap", opts.node_cap},
                                     {"accept_reg", opts.accept_reg},
                                     {"registers", json_registers(inputs)}},
                        json_interval(interval));
    }
    emit_timing(opts, watch);
    return 0;
}

int cmd_estimate(const CommonOpts& opts, const std::string& epsilon_text) {
    Stopwatch watch;
    SourceProgram source = parse_program(read_file(opts.program_path));
    RegisterMap inputs = opts.inputs();
    Rational epsilon = parse_rational_arg(epsilon_text);
    EstimateReport report = estimate_acceptance(source.parsed, inputs, epsilon, opts.fuel, opts.seed, opts.policy());

    if (opts.format == "text") {
        std::cout << probability_line("estimate", report.estimate) << "\n";
        std::cout << "sample_count: " << report.sample_count << "\n";
        std::cout << "accepts: " << report.accepts << "\n";
        std::cout << "rejects: " << report.rejects << "\n";
        std::cout << "unresolved: " << report.unresolved << "\n";
        std::cout << "epsilon: " << weight_string(report.epsilon) << "\n";
        std::cout << "seed: " << report.seed << "\n";
    } else {
        emit_structured("estimate",
                        ordered_json{{"program", opts.program_path},
                                     {"fuel", opts.fuel},
                                     {"epsilon", json_probability(epsilon)},
                                     {"seed", opts.seed},
                                     {"accept_reg", opts.accept_reg},
                                     {"registers", json_registers(inputs)}},
                        json_estimate(report));
    }
    emit_timing(opts, watch);
    return 0;
}

int cmd_decide(const CommonOpts& opts, const std::string& eta_text, const std::string& mode_text) {
    Stopwatch watch;
    SourceProgram source = parse_program(read_file(opts.program_path));
    RegisterMap inputs = opts.inputs();
    Rational eta = parse_rational_arg(eta_text);
    DecideMode mode = mode_text == "sampled" ? DecideMode::Sampled : DecideMode::Exact;
    Verdict verdict =
        decide_bounded_error(source.parsed, inputs, eta, opts.fuel, mode, opts.seed, opts.policy(), opts.node_cap);

    if (opts.format == "text") {
        std::cout << "verdict: " << to_string(verdict.kind) << "\n";
        std::cout << "reason: " << to_string(verdict.reason) << "\n";
        if (verdict.interval) {
            std::cout << probability_line("accept", verdict.interval->accept_mass) << "\n";
            std::cout << probability_line("reject", verdict.interval->reject_mass) << "\n";
            std::cout << probability_line("unresolved", verdict.interval->unresolved_mass) << "\n";
        }
        if (verdict.estimate) {
            std::cout << probability_line("estimate", verdict.estimate->estimate) << "\n";
            std::cout << "sample_count: " << verdict.estimate->sample_count << "\n";
            std::cout << "unresolved_samples: " << verdict.estimate->unresolved << "\n";
        }
    } else {
        ordered_json result{{"verdict", to_string(verdict.kind)}, {"reason", to_string(verdict.reason)}};
        result["interval"] = verdict.interval ? json_interval(*verdict.interval) : ordered_json(nullptr);
        result["estimate"] = verdict.estimate ? json_estimate(*verdict.estimate) : ordered_json(nullptr);
        emit_structured("decide",
                        ordered_json{{"program", opts.program_path},
                                     {"fuel", opts.fuel},
                                     {"eta", json_probability(eta)},
                                     {"mode", mode == DecideMode::Sampled ? "sampled" : "exact"},
                                     {"seed", opts.seed},
                                     {"node_cap", opts.node_cap},
                                     {"accept_reg", opts.accept_reg},
                                     {"registers", json_registers(inputs)}},
                        std::move(result));
    }
    emit_timing(opts, watch);
    switch (verdict.kind) {
        case VerdictKind::Accept: return exit_code::kAccept;
        case VerdictKind::Reject: return exit_code::kReject;
        default: return exit_code::kUndetermined;
    }
}

struct GenOpts {
    std::string mode = "det";
    std::uint64_t lines = 0;  // 0 = use the min/max range
    GeneratorParams params;
    std::uint64_t max_choices = 0;  // 0 = 1 for det, 3 otherwise
    std::uint64_t seed = 0;
};

int cmd_gen(const GenOpts& gen) {
    GeneratorParams params = gen.params;
    params.mode = gen.mode == "prob"     ? ProgramMode::Probabilistic
                  : gen.mode == "nondet" ? ProgramMode::NonDeterministic
                                         : ProgramMode::Deterministic;
    if (gen.lines > 0) {
        params.min_lines = gen.lines;
        params.max_lines = gen.lines;
    }
    params.max_choices_per_line =
        gen.max_choices > 0 ? gen.max_choices : (params.mode == ProgramMode::Deterministic ? 1 : 3);
    std::cout << format_program(generate_program(params, gen.seed));
    return 0;
}

int cmd_check(const CommonOpts& opts) {
    SourceProgram source = parse_program(read_file(opts.program_path));
    check_weights(source.parsed);
    std::size_t max_choices = 0;
    for (const ProgramLine& line : source.parsed.lines)
        max_choices = std::max(max_choices, line.choices.size());

    std::string formatted = format_program(source.parsed);
    SourceProgram reparsed = parse_program(formatted);
    bool fixpoint = reparsed.parsed == source.parsed && format_program(reparsed.parsed) == formatted;

    if (opts.format == "text") {
        std::cout << "ok\n";
        std::cout << "mode: " << to_string(source.mode) << "\n";
        std::cout << "lines: " << source.parsed.line_count() << "\n";
        std::cout << "max_choices: " << max_choices << "\n";
        std::cout << "weights: ok\n";
        std::cout << "format_fixpoint: " << (fixpoint ? "true" : "false") << "\n";
    } else {
        emit_structured("check", ordered_json{{"program", opts.program_path}},
                        ordered_json{{"ok", true},
                                     {"mode", to_string(source.mode)},
                                     {"lines", source.parsed.line_count()},
                                     {"max_choices", max_choices},
                                     {"weights", "ok"},
                                     {"format_fixpoint", fixpoint}});
    }
    return fixpoint ? 0 : exit_code::kInternal;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shoenfield register machine toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    bool trace = false;
    std::uint64_t tree_depth = 8;
    std::size_t tree_budget = 10000;
    std::string engine = "memoized";
    std::string epsilon_text;
    std::string eta_text;
    std::string decide_mode = "exact";
    GenOpts gen;

    CLI::App* run = app.add_subcommand("run", "execute a deterministic program");
    add_program_arg(run, opts);
    run->add_option("--fuel", opts.fuel, "step budget")->capture_default_str();
    run->add_flag("--trace", trace, "list every configuration of the chain");
    add_format_flag(run, opts);

    CLI::App* tree = app.add_subcommand("tree", "explore the non-deterministic computation tree");
    add_program_arg(tree, opts);
    tree->add_option("--depth", tree_depth, "expansion depth bound")->capture_default_str();
    tree->add_option("--node-budget", tree_budget, "maximum tree nodes")->capture_default_str();
    add_format_flag(tree, opts, "text,structured,graph");

    CLI::App* prob = app.add_subcommand("prob", "exact acceptance probability by enumeration");
    add_program_arg(prob, opts);
    prob->add_option("--fuel", opts.fuel, "path depth bound")->capture_default_str();
    prob->add_option("--engine", engine, "enumeration engine")
        ->check(CLI::IsMember({"naive", "memoized"}))
        ->capture_default_str();
    prob->add_option("--node-cap", opts.node_cap, "exploration budget")->envname("SHM_NODE_CAP")->capture_default_str();
    prob->add_option("--accept-reg", opts.accept_reg, "acceptance register")->capture_default_str();
    add_format_flag(prob, opts);

    CLI::App* estimate = app.add_subcommand("estimate", "Monte Carlo acceptance estimate");
    add_program_arg(estimate, opts);
    estimate->add_option("--fuel", opts.fuel, "per-sample step budget")->capture_default_str();
    estimate->add_option("--epsilon", epsilon_text, "additive error bound (rational)")->required()->check(kRationalArg);
    estimate->add_option("--seed", opts.seed, "base seed (seed 0 is honored)")->capture_default_str();
    estimate->add_option("--accept-reg", opts.accept_reg, "acceptance register")->capture_default_str();
    add_format_flag(estimate, opts);

    CLI::App* decide = app.add_subcommand("decide", "bounded-error accept/reject decision");
    add_program_arg(decide, opts);
    decide->add_option("--fuel", opts.fuel, "step budget")->capture_default_str();
    decide->add_option("--eta", eta_text, "acceptance gap in (0, 1/2)")->required()->check(kRationalArg);
    decide->add_option("--mode", decide_mode, "decision mode")
        ->check(CLI::IsMember({"exact", "sampled"}))
        ->capture_default_str();
    decide->add_option("--seed", opts.seed, "base seed for sampled mode")->capture_default_str();
    decide->add_option("--node-cap", opts.node_cap, "exploration budget (exact mode)")
        ->envname("SHM_NODE_CAP")
        ->capture_default_str();
    decide->add_option("--accept-reg", opts.accept_reg, "acceptance register")->capture_default_str();
    add_format_flag(decide, opts);

    CLI::App* gen_cmd = app.add_subcommand("gen", "generate a random program");
    gen_cmd->add_option("--mode", gen.mode, "program mode")
        ->check(CLI::IsMember({"det", "nondet", "prob"}))
        ->capture_default_str();
    CLI::Option* lines_opt = gen_cmd->add_option("--lines", gen.lines, "exact line count");
    gen_cmd->add_option("--min-lines", gen.params.min_lines, "minimum line count")
        ->capture_default_str()
        ->excludes(lines_opt);
    gen_cmd->add_option("--max-lines", gen.params.max_lines, "maximum line count")
        ->capture_default_str()
        ->excludes(lines_opt);
    gen_cmd->add_option("--max-choices", gen.max_choices, "maximum choices per line (default 1 det / 3 otherwise)");
    gen_cmd->add_option("--register-span", gen.params.register_span, "registers drawn from [0, span)")
        ->capture_default_str();
    gen_cmd->add_option("--jump-span", gen.params.jump_span, "jump overshoot beyond the last line")
        ->capture_default_str();
    gen_cmd->add_option("--weight-bound", gen.params.weight_denominator_bound, "raw weights drawn from [1, bound]")
        ->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "generator seed (seed 0 is honored)")->capture_default_str();

    CLI::App* check = app.add_subcommand("check", "validate and round-trip a program file");
    add_program_arg(check, opts);
    add_format_flag(check, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (run->parsed())
            return cmd_run(opts, trace);
        if (tree->parsed())
            return cmd_tree(opts, tree_depth, tree_budget);
        if (prob->parsed())
            return cmd_prob(opts, engine);
        if (estimate->parsed())
            return cmd_estimate(opts, epsilon_text);
        if (decide->parsed())
            return cmd_decide(opts, eta_text, decide_mode);
        if (gen_cmd->parsed())
            return cmd_gen(gen);
        if (check->parsed())
            return cmd_check(opts);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kParse;
    } catch (const NotDeterministicError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kNotDeterministic;
    } catch (const WeightError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kWeight;
    } catch (const BudgetExceededError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kBudget;
    } catch (const EpsilonOutOfRangeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kRange;
    } catch (const EtaOutOfRangeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kRange;
    } catch (const InvalidParamsError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::kInvalidParams;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return exit_code::kInternal;
    }
    return exit_code::kInternal;
}
