#include "simulsa/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "simulsa/parallel.hpp"
#include "simulsa/stream_sim.hpp"
#include "simulsa/text.hpp"
#include "simulsa/trunc_sampler.hpp"
#include "simulsa/wav.hpp"

namespace simulsa {

using nlohmann::json;
using nlohmann::ordered_json;

// ─── Manifest ───────────────────────────────────────────────────────────────

Manifest parse_manifest(std::istream &in, std::filesystem::path base_dir) {
    Manifest manifest;
    manifest.base_dir = std::move(base_dir);
    std::string line;
    std::size_t line_no = 0;
    bool first_record = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (first_record) {
            first_record = false;
            json header = json::parse(line, nullptr, false);
            if (header.is_object() && !header.contains("id") &&
                (header.contains("source_lang") || header.contains("target_lang"))) {
                manifest.source_lang = header.value("source_lang", manifest.source_lang);
                manifest.target_lang = header.value("target_lang", manifest.target_lang);
                continue;
            }
        }
        try {
            manifest.records.push_back(pair_from_json_line(line));
        } catch (const Error &e) {
            throw Error(ErrorCode::InvalidManifest, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return manifest;
}

Manifest load_manifest(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open manifest " + path.string());
    return parse_manifest(in, path.parent_path());
}

WavFileStore::WavFileStore(std::filesystem::path base_dir) : base_dir_(std::move(base_dir)) {}

std::filesystem::path WavFileStore::resolve(std::string_view audio_path) const {
    std::filesystem::path p(audio_path);
    return p.is_absolute() || base_dir_.empty() ? p : base_dir_ / p;
}

bool WavFileStore::exists(std::string_view audio_path) const {
    std::error_code ec;
    return std::filesystem::is_regular_file(resolve(audio_path), ec);
}

AudioClip WavFileStore::load(std::string_view audio_path) const { return read_wav(resolve(audio_path)); }

void validate_manifest(const Manifest &manifest, const AudioStore &audio) {
    std::set<std::string_view> ids;
    for (const auto &record : manifest.records) {
        if (!ids.insert(record.id).second) {
            throw Error(ErrorCode::InvalidManifest, "duplicate id '" + record.id + "'");
        }
        if (record.kind != PairKind::offline) {
            throw Error(ErrorCode::InvalidManifest, "record '" + record.id + "' is not an offline pair");
        }
        if (!audio.exists(record.audio_path)) {
            throw Error(ErrorCode::InvalidManifest,
                        "record '" + record.id + "': audio '" + record.audio_path + "' not found");
        }
    }
}

// ─── Prompts ────────────────────────────────────────────────────────────────

std::string render_prompt(std::string_view template_id, std::string_view audio_placeholder,
                          std::string_view source_lang) {
    if (template_id != "default") {
        throw Error(ErrorCode::UnknownTemplate, "unknown prompt template '" + std::string(template_id) + "'");
    }
    std::string prompt = "<audio>";
    prompt += audio_placeholder;
    prompt += "</audio>Detect the language and translate the speech into Mandarin: <|";
    prompt += source_lang;
    prompt += "|>";
    return prompt;
}

// ─── Augmentation ───────────────────────────────────────────────────────────

std::string AugmentationStats::to_json() const {
    ordered_json j;
    j["selected"] = selected;
    j["skipped_short"] = skipped_short;
    j["dropped_empty"] = dropped_empty;
    j["failures"] = failures;
    j["emitted"] = emitted;
    return j.dump();
}

std::vector<std::size_t> select_indices(std::size_t manifest_size, const AugmentationPlan &plan) {
    if (plan.m < 1) throw Error(ErrorCode::NonPositiveParameter, "m must be at least 1");
    if (static_cast<std::size_t>(plan.m) > manifest_size) {
        throw Error(ErrorCode::InvalidArgument, "m (" + std::to_string(plan.m) +
                                                    ") exceeds the manifest size (" +
                                                    std::to_string(manifest_size) + ")");
    }
    const auto m = static_cast<std::size_t>(plan.m);
    std::vector<std::size_t> all(manifest_size);
    for (std::size_t i = 0; i < manifest_size; ++i) all[i] = i;
    if (plan.selection == Selection::first_m) {
        all.resize(m);
        return all;
    }
    std::vector<std::size_t> chosen;
    chosen.reserve(m);
    std::mt19937_64 engine(plan.seed);
    std::sample(all.begin(), all.end(), std::back_inserter(chosen), m, engine);
    return chosen;
}

namespace {

enum class Outcome { pending, emitted, skipped_short, dropped_empty, failed };

std::string_view outcome_name(Outcome o) {
    switch (o) {
    case Outcome::emitted: return "emitted";
    case Outcome::skipped_short: return "skipped_short";
    case Outcome::dropped_empty: return "dropped_empty";
    case Outcome::failed: return "failed";
    case Outcome::pending: break;
    }
    return "pending";
}

struct SampleResult {
    Outcome outcome = Outcome::pending;
    std::optional<SpeechTextPair> pair;
};

std::map<std::string, json> read_checkpoint(const std::filesystem::path &path) {
    std::map<std::string, json> done;
    std::ifstream in(path);
    if (!in) return done;
    std::string line;
    while (std::getline(in, line)) {
        json j = json::parse(line, nullptr, false);
        // A torn final line from an interrupted write is ignored.
        if (!j.is_object() || !j.contains("id") || !j.contains("outcome")) continue;
        done[j["id"].get<std::string>()] = j;
    }
    return done;
}

void append_checkpoint(const std::filesystem::path &path, const std::vector<std::string> &lines) {
    if (lines.empty()) return;
    std::ofstream out(path, std::ios::app);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write checkpoint " + path.string());
    for (const auto &l : lines) out << l << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "short write to checkpoint " + path.string());
}

// Rebuilds a sample result from its checkpoint entry.
SampleResult restore(const json &entry, const SpeechTextPair &parent, const AudioStore &audio) {
    SampleResult r;
    const auto name = entry["outcome"].get<std::string>();
    if (name == "skipped_short") r.outcome = Outcome::skipped_short;
    else if (name == "dropped_empty") r.outcome = Outcome::dropped_empty;
    else if (name == "emitted") {
        r.outcome = Outcome::emitted;
        const auto point = entry.at("truncation_ms").get<std::int64_t>();
        SpeechTextPair pair;
        pair.id = entry.at("pair_id").get<std::string>();
        pair.audio_path = parent.audio_path;
        pair.target_text = entry.at("target").get<std::string>();
        pair.kind = PairKind::truncated;
        pair.truncation_ms = point;
        pair.audio = slice_audio(audio.load(parent.audio_path), point);
        r.pair = std::move(pair);
    }
    return r;
}

std::string checkpoint_line(const SpeechTextPair &parent, const SampleResult &r) {
    ordered_json j;
    j["id"] = parent.id;
    j["outcome"] = outcome_name(r.outcome);
    if (r.pair) {
        j["pair_id"] = r.pair->id;
        j["truncation_ms"] = *r.pair->truncation_ms;
        j["target"] = r.pair->target_text;
    }
    return j.dump();
}

} // namespace

AugmentationResult run_augmentation(const Manifest &manifest, const AugmentationPlan &plan,
                                    Provider &provider, const AudioStore &audio,
                                    const AugmentationOptions &options) {
    validate_policy(plan.policy);
    const auto selected = select_indices(manifest.records.size(), plan);

    std::map<std::string, json> done;
    if (options.checkpoint_path) done = read_checkpoint(*options.checkpoint_path);

    std::vector<SampleResult> results(selected.size());
    auto process = [&](std::size_t slot) {
        const std::size_t index = selected[slot];
        const SpeechTextPair &parent = manifest.records[index];
        SampleResult &result = results[slot];
        if (auto it = done.find(parent.id); it != done.end()) {
            result = restore(it->second, parent, audio);
            if (result.outcome != Outcome::pending) return;
        }
        try {
            const AudioClip clip = audio.load(parent.audio_path);
            const auto draw = sample_truncation_point(plan.policy, clip.duration_ms(),
                                                      unit_draw_for(plan.seed, index));
            if (!draw) {
                spdlog::debug("stage=truncate id={} skipped_short duration_ms={}", parent.id, clip.duration_ms());
                result.outcome = Outcome::skipped_short;
                return;
            }
            const auto tokens = provider.tokenize(parent.target_text);
            if (tokens.empty()) {
                result.outcome = Outcome::dropped_empty;
                return;
            }
            const AudioClip truncated = slice_audio(clip, draw->point_ms);
            const auto prompt = render_prompt(plan.spec_cfg.prompt_template_id, parent.audio_path,
                                              manifest.source_lang);
            const auto spec = speculate_prefix(provider, truncated, tokens, plan.spec_cfg, prompt);
            auto pair = build_truncated_pair(parent, tokens, draw->point_ms, spec, truncated);
            if (!pair) {
                spdlog::debug("stage=speculate id={} dropped_empty point_ms={}", parent.id, draw->point_ms);
                result.outcome = Outcome::dropped_empty;
                return;
            }
            spdlog::debug("stage=speculate id={} point_ms={} prefix_len={}/{} stop={}", parent.id,
                          draw->point_ms, spec.prefix_len, tokens.size(), to_string(spec.stop_reason));
            result.outcome = Outcome::emitted;
            result.pair = std::move(pair);
        } catch (const Error &e) {
            if (e.code() == ErrorCode::BackendUnavailable || e.code() == ErrorCode::IoFailure) throw;
            spdlog::warn("stage=augment id={} failed: {}", parent.id, e.what());
            result.outcome = Outcome::failed;
        }
    };

    const std::size_t batch = std::max<std::size_t>(1, options.checkpoint_every);
    for (std::size_t start = 0; start < selected.size(); start += batch) {
        const std::size_t end = std::min(selected.size(), start + batch);
        std::exception_ptr error;
        try {
            parallel_for(start, end, options.jobs, process);
        } catch (...) {
            error = std::current_exception();
        }
        if (options.checkpoint_path) {
            std::vector<std::string> lines;
            for (std::size_t slot = start; slot < end; ++slot) {
                const auto &parent = manifest.records[selected[slot]];
                const auto &r = results[slot];
                if (r.outcome == Outcome::pending || r.outcome == Outcome::failed) continue;
                if (done.count(parent.id)) continue;
                lines.push_back(checkpoint_line(parent, r));
            }
            append_checkpoint(*options.checkpoint_path, lines);
        }
        if (error) std::rethrow_exception(error);
        spdlog::info("stage=augment processed={}/{}", end, selected.size());
    }

    AugmentationResult out;
    out.stats.selected = static_cast<std::int64_t>(selected.size());
    for (auto &r : results) {
        switch (r.outcome) {
        case Outcome::emitted:
            ++out.stats.emitted;
            out.augmented.push_back(std::move(*r.pair));
            break;
        case Outcome::skipped_short: ++out.stats.skipped_short; break;
        case Outcome::dropped_empty: ++out.stats.dropped_empty; break;
        case Outcome::failed:
        case Outcome::pending: ++out.stats.failures; break;
        }
    }
    return out;
}

std::string mixed_record_json(const SpeechTextPair &pair, std::string_view source_lang,
                              std::string_view template_id) {
    ordered_json j;
    j["id"] = pair.id;
    j["audio_path"] = pair.audio_path;
    j["prompt"] = render_prompt(template_id, pair.audio_path, source_lang);
    j["target"] = pair.target_text;
    j["kind"] = to_string(pair.kind);
    if (pair.truncation_ms) j["truncation_ms"] = *pair.truncation_ms;
    return j.dump();
}

namespace {

std::string clip_file_name(std::string_view id) {
    std::string name(id);
    std::replace(name.begin(), name.end(), '/', '_');
    std::replace(name.begin(), name.end(), '\\', '_');
    return name + ".wav";
}

} // namespace

std::int64_t emit_mixed_corpus(const Manifest &offline, std::span<const SpeechTextPair> augmented,
                               const std::filesystem::path &out_path, const EmitOptions &options) {
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + out_path.string());
    if (options.audio_dir) {
        std::error_code ec;
        std::filesystem::create_directories(*options.audio_dir, ec);
        if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + options.audio_dir->string());
    }

    std::int64_t count = 0;
    for (const auto &record : offline.records) {
        out << mixed_record_json(record, offline.source_lang, options.template_id) << '\n';
        ++count;
    }
    for (const auto &pair : augmented) {
        if (options.audio_dir && pair.audio) {
            SpeechTextPair written = pair;
            const auto path = *options.audio_dir / clip_file_name(pair.id);
            write_wav(path, *pair.audio);
            written.audio_path = path.string();
            out << mixed_record_json(written, offline.source_lang, options.template_id) << '\n';
        } else {
            out << mixed_record_json(pair, offline.source_lang, options.template_id) << '\n';
        }
        ++count;
    }
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "short write to " + out_path.string());
    return count;
}

// ─── Sweep ──────────────────────────────────────────────────────────────────

namespace {

std::vector<AudioClip> load_clips(const Manifest &eval, const AudioStore &audio, unsigned jobs) {
    std::vector<AudioClip> clips(eval.records.size());
    parallel_for(0, clips.size(), jobs, [&](std::size_t i) { clips[i] = audio.load(eval.records[i].audio_path); });
    return clips;
}

std::vector<std::string> simulate_clips(const Manifest &eval, const std::vector<AudioClip> &clips,
                                        Provider &provider, ChunkSize chunk, std::int64_t rollback,
                                        const SweepOptions &options,
                                        std::vector<std::vector<std::string>> *session_logs) {
    std::vector<std::string> hyps(eval.records.size());
    if (session_logs) session_logs->assign(eval.records.size(), {});
    parallel_for(0, hyps.size(), options.jobs, [&](std::size_t i) {
        const auto &record = eval.records[i];
        const auto prompt = render_prompt(options.template_id, record.audio_path, eval.source_lang);
        StreamConfig cfg;
        // A single chunk spanning the clip is offline decoding.
        cfg.chunk_ms = chunk.is_infinite() ? std::max<std::int64_t>(1, clips[i].duration_ms()) : chunk.ms();
        cfg.rollback_tokens = rollback;
        cfg.max_new_tokens_per_step = options.max_new_tokens_per_step;
        auto outcome = run_stream_session(provider, clips[i], prompt, cfg);
        hyps[i] = std::move(outcome.final_text);
        if (session_logs) {
            for (const auto &step : outcome.session.step_log) {
                (*session_logs)[i].push_back(step_record_to_json(step));
                spdlog::debug("stage=simulate id={} chunk_end_ms={} wall_ms={:.1f}", record.id,
                              step.chunk_end_ms, step.wall_ms);
            }
        }
    });
    return hyps;
}

} // namespace

std::vector<std::string> simulate_corpus(const Manifest &eval, Provider &provider, const AudioStore &audio,
                                         ChunkSize chunk, std::int64_t rollback,
                                         const SweepOptions &options,
                                         std::vector<std::vector<std::string>> *session_logs) {
    const auto clips = load_clips(eval, audio, options.jobs);
    return simulate_clips(eval, clips, provider, chunk, rollback, options, session_logs);
}

std::string run_sweep(const Manifest &eval, const ProviderFactory &providers, const SweepGrid &grid,
                      const AudioStore &audio, const SweepOptions &options) {
    if (grid.m_values.empty() || grid.k_values.empty() || grid.b_values.empty()) {
        throw Error(ErrorCode::InvalidArgument, "sweep grid lists must be non-empty");
    }
    if (eval.records.empty()) throw Error(ErrorCode::InvalidManifest, "evaluation manifest is empty");
    for (auto b : grid.b_values) {
        if (b < 0) throw Error(ErrorCode::InvalidArgument, "rollback values must be non-negative");
    }

    const BleuTokenizer tokenizer = options.tokenizer.value_or(default_tokenizer_for(eval.target_lang));
    std::vector<std::vector<std::string>> refs;
    refs.reserve(eval.records.size());
    for (const auto &r : eval.records) refs.push_back(tokenize_for_bleu(r.target_text, tokenizer));
    const auto clips = load_clips(eval, audio, options.jobs);

    std::vector<GridRow> rows;
    for (auto m : grid.m_values) {
        auto provider = providers(m);
        for (auto b : grid.b_values) {
            for (const auto &k : grid.k_values) {
                auto hyps = simulate_clips(eval, clips, *provider, k, b, options, nullptr);
                std::vector<std::vector<std::string>> hyp_tokens;
                hyp_tokens.reserve(hyps.size());
                for (const auto &h : hyps) hyp_tokens.push_back(tokenize_for_bleu(h, tokenizer));
                const auto report = corpus_bleu(hyp_tokens, refs);
                spdlog::info("stage=sweep m={} k={} b={} bleu={}", m, k.to_string(), b, report.score);
                rows.push_back({options.model_label, m, k, b, report.score});
            }
        }
    }
    return assemble_sweep_report(std::move(rows));
}

} // namespace simulsa
