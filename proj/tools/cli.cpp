#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "simulsa/backend.hpp"
#include "simulsa/corpus.hpp"
#include "simulsa/metrics.hpp"
#include "simulsa/stream_sim.hpp"

namespace simulsa::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct BackendFlags {
    std::string uri;
    unsigned concurrency = 4;
};

struct AugmentFlags {
    std::string manifest;
    std::string out;
    std::int64_t m = 3000;
    std::int64_t l_ms = 500;
    std::int64_t r_ms = 5000;
    std::string dist = "beta";
    std::int64_t grid_step_ms = 500;
    double alpha = 1.0;
    double beta = 3.0;
    std::string tau = "6.6e-4";
    std::uint64_t seed = 0;
    std::string selection = "uniform";
    std::string prompt_template = "default";
    std::string stats_out;
    std::string audio_out;
    std::string checkpoint;
    std::size_t checkpoint_every = 100;
    unsigned jobs = default_jobs();
    BackendFlags backend;
};

struct SimulateFlags {
    std::string manifest;
    std::string chunk_ms = "500";
    std::int64_t rollback = 0;
    std::int64_t max_new_tokens = 128;
    std::string out_hyps;
    std::string out_log;
    std::string prompt_template = "default";
    unsigned jobs = default_jobs();
    BackendFlags backend;
};

struct EvaluateFlags {
    std::string hyps;
    std::string refs;
    std::string tokenizer;
    std::string out_csv;
    std::string model = "model";
    std::string chunk_ms = "inf";
    std::int64_t rollback = 0;
};

struct SweepFlags {
    std::string manifest;
    std::string m_list = "1000,2000,3000";
    std::string k_list = "500,1000,1500,2000";
    std::string b_list = "0,3,5";
    std::string out_csv;
    std::string model = "model";
    std::string tokenizer;
    std::int64_t max_new_tokens = 128;
    std::string prompt_template = "default";
    unsigned jobs = default_jobs();
    BackendFlags backend;
};

const std::map<std::string, TruncationFamily> kFamilies = {
    {"beta", TruncationFamily::beta_decay},
    {"uniform", TruncationFamily::uniform},
    {"beta-full", TruncationFamily::beta_decay_fullspan},
    {"beta-grid", TruncationFamily::beta_decay_grid},
};

const std::map<std::string, Selection> kSelections = {
    {"uniform", Selection::uniform_random},
    {"first", Selection::first_m},
};

Error usage(const std::string &message) { return Error(ErrorCode::InvalidArgument, message); }

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::BackendUnavailable:
    case ErrorCode::ProtocolViolation: return kBackend;
    case ErrorCode::IoFailure:
    case ErrorCode::AudioDecode: return kIo;
    default: return kUsage;
    }
}

void configure_logging(const std::string &level) {
    auto logger = std::make_shared<spdlog::logger>("simulsa", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    logger->set_pattern("%Y-%m-%dT%H:%M:%S.%e level=%l %v");
    logger->set_level(spdlog::level::from_str(level));
    spdlog::set_default_logger(logger);
}

void write_text(const fs::path &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

std::string read_text(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
    for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
        text.replace(pos, from.size(), to);
    }
    return text;
}

std::unique_ptr<Provider> open_backend(const std::string &uri, const BackendFlags &flags) {
    ProviderOptions options;
    options.max_concurrency = flags.concurrency;
    if (const char *token = std::getenv("SIMULSA_BACKEND_TOKEN")) options.bearer_token = token;
    return open_provider(uri, options);
}

void check_positive(std::int64_t value, const char *flag) {
    if (value < 1) throw Error(ErrorCode::NonPositiveParameter, std::string(flag) + " must be positive");
}

double parse_real(const std::string &text, const char *flag) {
    double value = 0.0;
    const char *end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw usage(std::string(flag) + ": '" + text + "' is not a number");
    }
    return value;
}

std::optional<double> parse_tau(const std::string &text) {
    if (text == "auto") return std::nullopt;
    const double tau = parse_real(text, "--tau");
    if (tau <= 0.0 || tau > 1.0) throw usage("--tau must lie in (0, 1]");
    return tau;
}

std::vector<std::string> split_list(const std::string &text, const char *flag) {
    std::vector<std::string> items;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t");
        if (first == std::string::npos) throw usage(std::string(flag) + ": empty list item in '" + text + "'");
        items.push_back(item.substr(first, last - first + 1));
    }
    if (items.empty() || text.back() == ',') throw usage(std::string(flag) + ": malformed list '" + text + "'");
    return items;
}

std::int64_t parse_integer(const std::string &text, const char *flag) {
    std::int64_t value = 0;
    const char *end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw usage(std::string(flag) + ": '" + text + "' is not an integer");
    return value;
}

void check_label(const std::string &label) {
    if (label.empty() || label.find_first_of(",\"\r\n") != std::string::npos) {
        throw usage("--model must be non-empty and free of commas, quotes and newlines");
    }
}

// ─── augment ────────────────────────────────────────────────────────────────

int cmd_augment(const AugmentFlags &f, std::ostream &out) {
    AugmentationPlan plan;
    plan.m = f.m;
    plan.policy.family = kFamilies.at(f.dist);
    plan.policy.l_ms = f.l_ms;
    plan.policy.r_ms = f.r_ms;
    plan.policy.grid_step_ms = f.grid_step_ms;
    plan.policy.alpha = f.alpha;
    plan.policy.beta = f.beta;
    plan.spec_cfg.tau = parse_tau(f.tau);
    plan.spec_cfg.prompt_template_id = f.prompt_template;
    plan.seed = f.seed;
    plan.selection = kSelections.at(f.selection);
    check_positive(f.m, "--m");
    check_positive(static_cast<std::int64_t>(f.checkpoint_every), "--checkpoint-every");
    validate_policy(plan.policy);
    render_prompt(f.prompt_template, "", "en");

    const auto manifest = load_manifest(f.manifest);
    const WavFileStore audio(manifest.base_dir);
    validate_manifest(manifest, audio);
    if (static_cast<std::size_t>(f.m) > manifest.records.size()) {
        throw usage("--m " + std::to_string(f.m) + " exceeds the manifest size " +
                    std::to_string(manifest.records.size()));
    }
    auto provider = open_backend(f.backend.uri, f.backend);
    spdlog::info("stage=augment records={} m={} dist={} seed={}", manifest.records.size(), f.m,
                 f.dist, f.seed);

    AugmentationOptions options;
    options.jobs = f.jobs;
    options.checkpoint_every = f.checkpoint_every;
    if (!f.checkpoint.empty()) options.checkpoint_path = f.checkpoint;
    const auto result = run_augmentation(manifest, plan, *provider, audio, options);

    EmitOptions emit;
    emit.template_id = f.prompt_template;
    if (!f.audio_out.empty()) emit.audio_dir = f.audio_out;
    const auto count = emit_mixed_corpus(manifest, result.augmented, f.out, emit);
    const auto stats = result.stats.to_json();
    write_text(f.stats_out.empty() ? f.out + ".stats.json" : f.stats_out, stats + "\n");
    spdlog::info("stage=emit records={} path={}", count, f.out);
    out << stats << '\n';
    return kOk;
}

// ─── simulate ───────────────────────────────────────────────────────────────

int cmd_simulate(const SimulateFlags &f, std::ostream &) {
    const auto chunk = ChunkSize::parse(f.chunk_ms);
    if (f.rollback < 0) throw usage("--rollback must be non-negative");
    check_positive(f.max_new_tokens, "--max-new-tokens");
    render_prompt(f.prompt_template, "", "en");

    const auto manifest = load_manifest(f.manifest);
    const WavFileStore audio(manifest.base_dir);
    validate_manifest(manifest, audio);
    auto provider = open_backend(f.backend.uri, f.backend);

    SweepOptions options;
    options.template_id = f.prompt_template;
    options.max_new_tokens_per_step = f.max_new_tokens;
    options.jobs = f.jobs;
    std::vector<std::vector<std::string>> logs;
    const auto hyps = simulate_corpus(manifest, *provider, audio, chunk, f.rollback, options,
                                      f.out_log.empty() ? nullptr : &logs);

    std::string hyp_lines;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
        ordered_json j;
        j["id"] = manifest.records[i].id;
        j["hyp"] = hyps[i];
        j["ref"] = manifest.records[i].target_text;
        hyp_lines += j.dump() + "\n";
    }
    write_text(f.out_hyps, hyp_lines);

    if (!f.out_log.empty()) {
        std::string log_lines;
        for (std::size_t i = 0; i < logs.size(); ++i) {
            ordered_json id;
            id["id"] = manifest.records[i].id;
            auto head = id.dump();
            head.pop_back();
            for (const auto &step : logs[i]) log_lines += head + "," + step.substr(1) + "\n";
        }
        write_text(f.out_log, log_lines);
    }
    spdlog::info("stage=simulate records={} chunk_ms={} rollback={}", hyps.size(), chunk.to_string(), f.rollback);
    return kOk;
}

// ─── evaluate ───────────────────────────────────────────────────────────────

struct TextFile {
    std::vector<std::string> texts;
    std::string target_lang;
};

// One text per line. JSON object lines contribute their "hyp", "ref" or
// "target_text" field (first present in `keys`); a JSON line carrying only
// language metadata is a header. Other lines are plain text.
TextFile read_texts(const fs::path &path, std::initializer_list<const char *> keys) {
    TextFile file;
    std::istringstream in(read_text(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line.front() == '{') {
            json j = json::parse(line, nullptr, false);
            if (j.is_object()) {
                bool found = false;
                for (const char *key : keys) {
                    if (j.contains(key) && j[key].is_string()) {
                        file.texts.push_back(j[key].get<std::string>());
                        found = true;
                        break;
                    }
                }
                if (found) continue;
                if (j.contains("target_lang") && !j.contains("id")) {
                    if (j["target_lang"].is_string()) file.target_lang = j["target_lang"].get<std::string>();
                    continue;
                }
                throw Error(ErrorCode::InvalidManifest,
                            path.string() + ":" + std::to_string(line_no) + ": no text field");
            }
        }
        file.texts.push_back(line);
    }
    return file;
}

// Merges `row` into the grid report at `path`, replacing a row with the same
// (model, chunk, rollback) key.
std::string merged_grid_report(const fs::path &path, GridRow row) {
    std::vector<GridRow> rows;
    std::error_code ec;
    if (fs::exists(path, ec)) {
        std::istringstream in(read_text(path));
        std::string line;
        std::getline(in, line);
        if (!line.empty() && line != "model,chunk_ms,rollback,bleu") {
            throw Error(ErrorCode::InvalidArgument, path.string() + " is not a grid report");
        }
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::istringstream fields(line);
            for (std::string cell; std::getline(fields, cell, ',');) cells.push_back(cell);
            if (cells.size() != 4) throw Error(ErrorCode::InvalidArgument, path.string() + ": malformed row");
            GridRow existing{cells[0], std::nullopt, ChunkSize::parse(cells[1]),
                             parse_integer(cells[2], "rollback"), parse_real(cells[3], "bleu")};
            if (existing.model_label == row.model_label && existing.chunk == row.chunk &&
                existing.rollback == row.rollback) {
                continue;
            }
            rows.push_back(std::move(existing));
        }
    }
    rows.push_back(std::move(row));
    return assemble_grid_report(std::move(rows));
}

int cmd_evaluate(const EvaluateFlags &f, std::ostream &out) {
    check_label(f.model);
    const auto chunk = ChunkSize::parse(f.chunk_ms);
    if (f.rollback < 0) throw usage("--rollback must be non-negative");
    std::optional<BleuTokenizer> tokenizer;
    if (!f.tokenizer.empty()) tokenizer = parse_bleu_tokenizer(f.tokenizer);

    const auto hyps = read_texts(f.hyps, {"hyp"});
    const auto refs = read_texts(f.refs, {"ref", "target_text"});
    if (hyps.texts.size() != refs.texts.size() || hyps.texts.empty()) {
        throw Error(ErrorCode::LengthMismatch, std::to_string(hyps.texts.size()) + " hypotheses vs " +
                                                   std::to_string(refs.texts.size()) + " references");
    }
    const auto mode = tokenizer.value_or(default_tokenizer_for(refs.target_lang));
    std::vector<std::vector<std::string>> hyp_tokens, ref_tokens;
    for (const auto &h : hyps.texts) hyp_tokens.push_back(tokenize_for_bleu(h, mode));
    for (const auto &r : refs.texts) ref_tokens.push_back(tokenize_for_bleu(r, mode));
    const auto report = corpus_bleu(hyp_tokens, ref_tokens);
    spdlog::info("stage=evaluate tokenizer={} hyp_len={} ref_len={} bp={}", to_string(mode), report.hyp_len,
                 report.ref_len, report.brevity_penalty);

    if (!f.out_csv.empty()) {
        write_text(f.out_csv, merged_grid_report(f.out_csv, {f.model, std::nullopt, chunk, f.rollback, report.score}));
    }
    out << format_score(report.score) << '\n';
    return kOk;
}

// ─── sweep ──────────────────────────────────────────────────────────────────

int cmd_sweep(const SweepFlags &f, std::ostream &) {
    check_label(f.model);
    SweepGrid grid;
    for (const auto &item : split_list(f.m_list, "--m-list")) {
        grid.m_values.push_back(parse_integer(item, "--m-list"));
        check_positive(grid.m_values.back(), "--m-list");
    }
    for (const auto &item : split_list(f.k_list, "--k-list")) grid.k_values.push_back(ChunkSize::parse(item));
    for (const auto &item : split_list(f.b_list, "--b-list")) {
        grid.b_values.push_back(parse_integer(item, "--b-list"));
        if (grid.b_values.back() < 0) throw usage("--b-list values must be non-negative");
    }
    check_positive(f.max_new_tokens, "--max-new-tokens");
    render_prompt(f.prompt_template, "", "en");
    SweepOptions options;
    options.model_label = f.model;
    options.template_id = f.prompt_template;
    if (!f.tokenizer.empty()) options.tokenizer = parse_bleu_tokenizer(f.tokenizer);
    options.max_new_tokens_per_step = f.max_new_tokens;
    options.jobs = f.jobs;

    const auto manifest = load_manifest(f.manifest);
    const WavFileStore audio(manifest.base_dir);
    validate_manifest(manifest, audio);

    if (f.backend.uri.find("{m}") == std::string::npos && grid.m_values.size() > 1) {
        spdlog::warn("stage=sweep backend has no {m} placeholder; every m uses the same model");
    }
    std::map<std::string, std::shared_ptr<Provider>> opened;
    const ProviderFactory factory = [&](std::int64_t m) -> std::shared_ptr<Provider> {
        const auto uri = replace_all(f.backend.uri, "{m}", std::to_string(m));
        auto &slot = opened[uri];
        if (!slot) slot = open_backend(uri, f.backend);
        return slot;
    };
    write_text(f.out_csv, run_sweep(manifest, factory, grid, audio, options));
    return kOk;
}

void add_backend_flags(CLI::App &cmd, BackendFlags &flags) {
    cmd.add_option("--backend", flags.uri, "Model backend: http(s)://HOST[:PORT] or synthetic:FILE")->required();
    cmd.add_option("--backend-concurrency", flags.concurrency, "Maximum in-flight backend requests")
        ->check(CLI::Range(1u, 1024u));
}

} // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Simultaneous speech translation data augmentation and evaluation"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML-style key=value file; command-line flags take precedence");
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "Log level on standard error")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    std::vector<std::string> families, selections;
    for (const auto &[name, _] : kFamilies) families.push_back(name);
    for (const auto &[name, _] : kSelections) selections.push_back(name);

    AugmentFlags aug;
    auto *augment = app.add_subcommand("augment", "Build the mixed offline + truncated training corpus");
    augment->add_option("--manifest", aug.manifest, "Offline pairs JSONL")->required();
    augment->add_option("--out", aug.out, "Mixed corpus JSONL to write")->required();
    augment->add_option("--m", aug.m, "Number of pairs to truncate");
    augment->add_option("--l-ms", aug.l_ms, "Lower bound of the truncation interval (ms)");
    augment->add_option("--r-ms", aug.r_ms, "Upper bound of the truncation interval (ms)");
    augment->add_option("--dist", aug.dist, "Truncation distribution")
        ->check(CLI::IsMember(families));
    augment->add_option("--grid-step-ms", aug.grid_step_ms, "Grid step for beta-grid (ms)");
    augment->add_option("--alpha", aug.alpha, "Beta shape alpha");
    augment->add_option("--beta", aug.beta, "Beta shape beta");
    augment->add_option("--tau", aug.tau, "Rank threshold as a vocabulary fraction, or 'auto' for 100/|V|");
    augment->add_option("--seed", aug.seed, "Seed for selection and truncation draws");
    augment->add_option("--selection", aug.selection, "How the m pairs are chosen")
        ->check(CLI::IsMember(selections));
    augment->add_option("--prompt-template", aug.prompt_template, "Prompt template id");
    augment->add_option("--stats-out", aug.stats_out, "Stats JSON path (default: OUT.stats.json)");
    augment->add_option("--audio-out", aug.audio_out, "Directory for truncated WAV clips");
    augment->add_option("--checkpoint", aug.checkpoint, "Checkpoint JSONL for resuming an interrupted run");
    augment->add_option("--checkpoint-every", aug.checkpoint_every, "Samples between checkpoint flushes");
    augment->add_option("--jobs", aug.jobs, "Worker threads")->check(CLI::Range(1u, 4096u));
    add_backend_flags(*augment, aug.backend);

    SimulateFlags sim;
    auto *simulate = app.add_subcommand("simulate", "Stream a manifest through chunked decoding with rollback");
    simulate->add_option("--manifest", sim.manifest, "Evaluation pairs JSONL")->required();
    simulate->add_option("--chunk-ms", sim.chunk_ms, "Chunk size in ms, or 'inf' for offline decoding");
    simulate->add_option("--rollback", sim.rollback, "Tokens withdrawn after each non-final chunk");
    simulate->add_option("--max-new-tokens", sim.max_new_tokens, "Generation cap per step");
    simulate->add_option("--out-hyps", sim.out_hyps, "Hypotheses JSONL to write")->required();
    simulate->add_option("--out-log", sim.out_log, "Per-step session log JSONL");
    simulate->add_option("--prompt-template", sim.prompt_template, "Prompt template id");
    simulate->add_option("--jobs", sim.jobs, "Worker threads")->check(CLI::Range(1u, 4096u));
    add_backend_flags(*simulate, sim.backend);

    EvaluateFlags ev;
    auto *evaluate = app.add_subcommand("evaluate", "Corpus BLEU of hypotheses against references");
    evaluate->add_option("--hyps", ev.hyps, "Hypotheses: JSONL with \"hyp\" or plain text lines")->required();
    evaluate->add_option("--refs", ev.refs, "References: manifest JSONL, JSONL with \"ref\" or plain text")
        ->required();
    evaluate->add_option("--tokenizer", ev.tokenizer,
                         "space or cjk_char (default: from the references' target_lang, else space)")
        ->check(CLI::IsMember({"space", "cjk_char"}));
    evaluate->add_option("--out-csv", ev.out_csv, "Grid report CSV to create or update");
    evaluate->add_option("--model", ev.model, "Model label for the report row");
    evaluate->add_option("--chunk-ms", ev.chunk_ms, "Chunk size label for the report row");
    evaluate->add_option("--rollback", ev.rollback, "Rollback label for the report row");

    SweepFlags sw;
    auto *sweep = app.add_subcommand("sweep", "BLEU over an (m, k, b) grid");
    sweep->add_option("--manifest", sw.manifest, "Evaluation pairs JSONL")->required();
    sweep->add_option("--m-list", sw.m_list, "Augmentation sizes; '{m}' in --backend selects the model per m");
    sweep->add_option("--k-list", sw.k_list, "Chunk sizes in ms; 'inf' adds offline rows");
    sweep->add_option("--b-list", sw.b_list, "Rollback token counts");
    sweep->add_option("--out-csv", sw.out_csv, "Sweep CSV to write")->required();
    sweep->add_option("--model", sw.model, "Model label");
    sweep->add_option("--tokenizer", sw.tokenizer, "space or cjk_char (default: from the manifest target_lang)")
        ->check(CLI::IsMember({"space", "cjk_char"}));
    sweep->add_option("--max-new-tokens", sw.max_new_tokens, "Generation cap per step");
    sweep->add_option("--prompt-template", sw.prompt_template, "Prompt template id");
    sweep->add_option("--jobs", sw.jobs, "Worker threads")->check(CLI::Range(1u, 4096u));
    add_backend_flags(*sweep, sw.backend);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    configure_logging(log_level);
    try {
        if (augment->parsed()) return cmd_augment(aug, out);
        if (simulate->parsed()) return cmd_simulate(sim, out);
        if (evaluate->parsed()) return cmd_evaluate(ev, out);
        if (sweep->parsed()) return cmd_sweep(sw, out);
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error &e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    std::vector<const char *> argv;
    argv.reserve(args.size());
    for (const auto &a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace simulsa::cli
