#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "jema/core/types.hpp"
#include "jema/synth/manifest.hpp"
#include "jema/util/rng.hpp"

namespace jema::train {

enum class Split { train, val, test };

// In-memory view of a generated dataset. Images are decoded lazily on first
// access and cached, so code paths that never touch a modality never read its
// files (tracked by the read counters).
class FrameDataset {
public:
    FrameDataset(synth::Manifest manifest, int input_size, std::uint64_t split_seed,
                 double val_fraction = 0.1, double test_fraction = 0.1);

    int size() const { return static_cast<int>(manifest_.records.size()); }
    const synth::Manifest& manifest() const { return manifest_; }
    const synth::FrameRecord& record(int idx) const { return manifest_.records[idx]; }
    const synth::NormalizedSample& labels(int idx) const { return labels_[idx]; }
    int cell(int idx) const { return cells_[idx]; }
    int cell_count() const { return static_cast<int>(manifest_.grid.cell_count()); }
    int input_size() const { return input_size_; }

    const std::vector<int>& indices(Split split) const;

    // Deterministic model input: raw 320 frame resized to input_size.
    const Image& input(int idx, Modality m) const;
    // Randomized training input: augment to 224, then resize to input_size.
    Image augmented_input(int idx, Modality m, Rng& rng) const;

    long file_reads(Modality m) const {
        return m == Modality::on_axis ? on_reads_ : off_reads_;
    }

private:
    const Image& raw(int idx, Modality m) const;

    synth::Manifest manifest_;
    int input_size_;
    std::vector<synth::NormalizedSample> labels_;
    std::vector<int> cells_;
    std::vector<int> train_idx_, val_idx_, test_idx_;

    mutable std::vector<std::optional<Image>> raw_on_, raw_off_;
    mutable std::vector<std::optional<Image>> small_on_, small_off_;
    mutable long on_reads_ = 0;
    mutable long off_reads_ = 0;
};

}  // namespace jema::train
