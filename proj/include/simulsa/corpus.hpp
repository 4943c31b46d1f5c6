#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simulsa/backend.hpp"
#include "simulsa/domain.hpp"
#include "simulsa/metrics.hpp"
#include "simulsa/spec_align.hpp"

namespace simulsa {

// ─── Manifest ───────────────────────────────────────────────────────────────

// Offline speech-text pairs. JSONL, one record per line:
//   {"id": str, "audio_path": str, "source_text"?: str, "target_text": str}
// An optional first line {"source_lang": str, "target_lang": str} (no "id")
// declares the language pair.
struct Manifest {
    std::vector<SpeechTextPair> records;
    std::string source_lang = "en";
    std::string target_lang; // empty when undeclared
    std::filesystem::path base_dir; // relative audio paths resolve against this
};

Manifest parse_manifest(std::istream &in, std::filesystem::path base_dir = {});
Manifest load_manifest(const std::filesystem::path &path);

// Resolves audio paths to clips.
class AudioStore {
  public:
    virtual ~AudioStore() = default;
    virtual bool exists(std::string_view audio_path) const = 0;
    virtual AudioClip load(std::string_view audio_path) const = 0;
};

// WAV files on disk; relative paths resolve against base_dir.
class WavFileStore final : public AudioStore {
  public:
    explicit WavFileStore(std::filesystem::path base_dir = {});
    bool exists(std::string_view audio_path) const override;
    AudioClip load(std::string_view audio_path) const override;
    std::filesystem::path resolve(std::string_view audio_path) const;

  private:
    std::filesystem::path base_dir_;
};

// Throws Error{InvalidManifest} for duplicate ids, offline-kind violations or
// unresolvable audio paths.
void validate_manifest(const Manifest &manifest, const AudioStore &audio);

// ─── Prompts ────────────────────────────────────────────────────────────────

// Known template ids: "default" (Mandarin target).
// Throws Error{UnknownTemplate}.
std::string render_prompt(std::string_view template_id, std::string_view audio_placeholder,
                          std::string_view source_lang);

// ─── Augmentation ───────────────────────────────────────────────────────────

enum class Selection { uniform_random, first_m };

struct AugmentationPlan {
    std::int64_t m = 3000;
    TruncationPolicy policy;
    SpeculationConfig spec_cfg;
    std::uint64_t seed = 0;
    Selection selection = Selection::uniform_random;
};

struct AugmentationStats {
    std::int64_t selected = 0;
    std::int64_t skipped_short = 0;
    std::int64_t dropped_empty = 0;
    std::int64_t failures = 0;
    std::int64_t emitted = 0;

    std::string to_json() const;
};

struct AugmentationOptions {
    unsigned jobs = 1;
    // Outcomes of processed ids are appended here every `checkpoint_every`
    // samples; ids already present are not processed again.
    std::optional<std::filesystem::path> checkpoint_path;
    std::size_t checkpoint_every = 100;
};

struct AugmentationResult {
    std::vector<SpeechTextPair> augmented; // manifest order, audio attached
    AugmentationStats stats;
};

// Indices of the m records to augment, ascending. uniform_random samples
// without replacement from a generator seeded with plan.seed.
std::vector<std::size_t> select_indices(std::size_t manifest_size, const AugmentationPlan &plan);

// For each selected record: draw a truncation point from the per-sample
// stream (seed ^ record index), slice the audio, speculate the supported
// target prefix and build the truncated pair. Short clips are skipped, empty
// prefixes dropped, per-sample protocol/audio errors counted as failures.
// BackendUnavailable aborts after the checkpoint is flushed.
AugmentationResult run_augmentation(const Manifest &manifest, const AugmentationPlan &plan,
                                    Provider &provider, const AudioStore &audio,
                                    const AugmentationOptions &options = {});

struct EmitOptions {
    std::string template_id = "default";
    // When set, truncated clips are written here as "<id>.wav" and records
    // point at them; otherwise records keep the parent path and consumers cut
    // at truncation_ms.
    std::optional<std::filesystem::path> audio_dir;
};

// Mixed SFT corpus, JSONL: every offline record, then every truncated one.
//   {"id", "audio_path", "prompt", "target", "kind", "truncation_ms"?}
// Returns the record count. Throws Error{IoFailure}.
std::int64_t emit_mixed_corpus(const Manifest &offline, std::span<const SpeechTextPair> augmented,
                               const std::filesystem::path &out_path, const EmitOptions &options = {});

std::string mixed_record_json(const SpeechTextPair &pair, std::string_view source_lang,
                              std::string_view template_id);

// ─── Sweep ──────────────────────────────────────────────────────────────────

struct SweepGrid {
    std::vector<std::int64_t> m_values;
    std::vector<ChunkSize> k_values;
    std::vector<std::int64_t> b_values;
};

struct SweepOptions {
    std::string model_label = "model";
    std::string template_id = "default";
    std::optional<BleuTokenizer> tokenizer; // default from manifest target_lang
    std::int64_t max_new_tokens_per_step = 128;
    unsigned jobs = 1;
};

// Provider evaluated for a given augmentation size m.
using ProviderFactory = std::function<std::shared_ptr<Provider>(std::int64_t m)>;

// Streams every evaluation record for each (m, k, b) cell and reports corpus
// BLEU per cell as a sweep CSV. Infinite k runs offline decoding.
std::string run_sweep(const Manifest &eval, const ProviderFactory &providers, const SweepGrid &grid,
                      const AudioStore &audio, const SweepOptions &options = {});

// Hypotheses for one (k, b) setting, in manifest order.
std::vector<std::string> simulate_corpus(const Manifest &eval, Provider &provider, const AudioStore &audio,
                                         ChunkSize chunk, std::int64_t rollback,
                                         const SweepOptions &options,
                                         std::vector<std::vector<std::string>> *session_logs = nullptr);

} // namespace simulsa
